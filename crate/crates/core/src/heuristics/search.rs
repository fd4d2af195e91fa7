//! Metaheuristic searches over coefficient arrays.
//!
//! Every method starts from uniformly random arrays, spends at most
//! `budget` fitness evaluations and records the best value seen after each
//! one. Runs are reproducible from the seed alone.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::decode::{Decoder, Fitness};
use crate::model::{Instance, Network, Schedule, TransactionSet};
use crate::sim::PenaltyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ga,
    Rhc,
    Lahc,
    Pso,
    Sa,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ga,
        Method::Rhc,
        Method::Lahc,
        Method::Pso,
        Method::Sa,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ga => "ga",
            Method::Rhc => "rhc",
            Method::Lahc => "lahc",
            Method::Pso => "pso",
            Method::Sa => "sa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown method {s:?}")))
    }
}

/// Method-specific settings. Each method reads only its own fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Knobs {
    pub population: usize,
    pub elite: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub sigma: f64,
    pub delta: f64,
    pub k: usize,
    pub history: usize,
    pub swarm: usize,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub t0: f64,
    pub alpha: f64,
    pub t_min: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            population: 50,
            elite: 10,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            sigma: 0.15,
            delta: 0.1,
            k: 2,
            history: 30,
            swarm: 30,
            omega: 0.7,
            c1: 1.5,
            c2: 1.5,
            t0: 10.0,
            alpha: 0.95,
            t_min: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub method: Method,
    /// Array length; `None` means twice the number of transactions.
    pub length: Option<usize>,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub knobs: Knobs,
}

impl SearchParams {
    pub fn new(method: Method, budget: usize, seed: u64) -> Self {
        Self {
            method,
            length: None,
            budget,
            seed,
            knobs: Knobs::default(),
        }
    }

    /// Sets a knob (or `length`) from its textual `key=value` form.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidParams(format!("bad value {value:?} for {key}"));
        let int = || value.parse::<usize>().map_err(|_| bad());
        let float = || value.parse::<f64>().map_err(|_| bad());
        let k = &mut self.knobs;
        match key {
            "length" => self.length = Some(int()?),
            "population" => k.population = int()?,
            "elite" => k.elite = int()?,
            "crossover_rate" => k.crossover_rate = float()?,
            "mutation_rate" => k.mutation_rate = float()?,
            "sigma" => k.sigma = float()?,
            "delta" => k.delta = float()?,
            "k" => k.k = int()?,
            "history" => k.history = int()?,
            "swarm" => k.swarm = int()?,
            "omega" => k.omega = float()?,
            "c1" => k.c1 = float()?,
            "c2" => k.c2 = float()?,
            "t0" => k.t0 = float()?,
            "alpha" => k.alpha = float()?,
            "t_min" => k.t_min = float()?,
            _ => return Err(Error::InvalidParams(format!("unknown parameter {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        let k = &self.knobs;
        let positive = [k.sigma, k.delta, k.omega, k.c1, k.c2, k.t0, k.t_min];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return bad("sigma, delta, omega, c1, c2, t0 and t_min must be positive");
        }
        let rates = [k.crossover_rate, k.mutation_rate];
        if rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("crossover_rate and mutation_rate must lie in (0, 1]");
        }
        if !(k.alpha > 0.0 && k.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if k.population == 0 || k.elite == 0 || k.k == 0 || k.history == 0 || k.swarm == 0 {
            return bad("population, elite, k, history and swarm must be positive");
        }
        if k.elite > k.population {
            return bad("elite cannot exceed population");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub method: Method,
    pub seed: u64,
    pub best: Vec<f64>,
    pub best_fitness: Fitness,
    pub best_schedule: Schedule,
    /// Best fitness after each evaluation.
    pub curve: Vec<f64>,
    pub evaluations: usize,
}

impl SearchResult {
    /// `evaluation,best_fitness` rows, one per evaluation.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("evaluation,best_fitness\n");
        for (i, f) in self.curve.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, f));
        }
        out
    }
}

/// Counts evaluations and tracks the incumbent.
struct Tracker<'d, 'i> {
    decoder: &'d Decoder<'i>,
    budget: usize,
    best: Vec<f64>,
    best_value: f64,
    curve: Vec<f64>,
}

impl<'d, 'i> Tracker<'d, 'i> {
    fn new(decoder: &'d Decoder<'i>, budget: usize) -> Self {
        Self {
            decoder,
            budget,
            best: Vec::new(),
            best_value: f64::INFINITY,
            curve: Vec::with_capacity(budget),
        }
    }

    fn exhausted(&self) -> bool {
        self.curve.len() >= self.budget
    }

    /// Fitness value of `x`, or `None` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.exhausted() {
            return None;
        }
        let f = self.decoder.evaluate(x).value;
        if f < self.best_value {
            self.best_value = f;
            self.best = x.to_vec();
        }
        self.curve.push(self.best_value);
        Some(f)
    }
}

fn random_array(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>()).collect()
}

/// Nudges `k` random positions by `delta` up or down, clipped to `[0, 1]`.
fn perturb(rng: &mut ChaCha8Rng, x: &[f64], k: usize, delta: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    if y.is_empty() {
        return y;
    }
    for _ in 0..k {
        let i = rng.random_range(0..y.len());
        let step = if rng.random::<bool>() { delta } else { -delta };
        y[i] = (y[i] + step).clamp(0.0, 1.0);
    }
    y
}

fn ga(t: &mut Tracker, rng: &mut ChaCha8Rng, len: usize, k: &Knobs) {
    let noise = Normal::new(0.0, k.sigma).expect("sigma validated");
    let mut pop: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k.population);
    for _ in 0..k.population {
        let x = random_array(rng, len);
        let Some(f) = t.eval(&x) else { return };
        pop.push((x, f));
    }
    loop {
        pop.sort_by(|a, b| a.1.total_cmp(&b.1));
        pop.truncate(k.elite);
        let parents = pop.len();
        for _ in parents..k.population {
            let a = &pop[rng.random_range(0..parents)].0;
            let b = &pop[rng.random_range(0..parents)].0;
            let mut child = if rng.random::<f64>() < k.crossover_rate {
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
                    .collect()
            } else {
                a.clone()
            };
            for g in child.iter_mut() {
                if rng.random::<f64>() < k.mutation_rate {
                    *g = (*g + noise.sample(rng)).clamp(0.0, 1.0);
                }
            }
            let Some(f) = t.eval(&child) else { return };
            pop.push((child, f));
        }
    }
}

fn rhc(t: &mut Tracker, rng: &mut ChaCha8Rng, len: usize, k: &Knobs) {
    let mut x = random_array(rng, len);
    let Some(mut fx) = t.eval(&x) else { return };
    loop {
        let y = perturb(rng, &x, k.k, k.delta);
        let Some(fy) = t.eval(&y) else { return };
        if fy < fx {
            x = y;
            fx = fy;
        }
    }
}

fn lahc(t: &mut Tracker, rng: &mut ChaCha8Rng, len: usize, k: &Knobs) {
    let mut x = random_array(rng, len);
    let Some(mut fx) = t.eval(&x) else { return };
    let mut history = vec![fx; k.history];
    for it in 0.. {
        let y = perturb(rng, &x, k.k, k.delta);
        let Some(fy) = t.eval(&y) else { return };
        let slot = it % k.history;
        if fy <= fx || fy <= history[slot] {
            x = y;
            fx = fy;
        }
        history[slot] = fx;
    }
}

fn pso(t: &mut Tracker, rng: &mut ChaCha8Rng, len: usize, k: &Knobs) {
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(k.swarm);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k.swarm);
    let mut pbest: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k.swarm);
    let mut gbest: Option<(Vec<f64>, f64)> = None;
    for _ in 0..k.swarm {
        let x = random_array(rng, len);
        let v: Vec<f64> = (0..len).map(|_| rng.random_range(-0.1..=0.1)).collect();
        let Some(f) = t.eval(&x) else { return };
        if gbest.as_ref().is_none_or(|g| f < g.1) {
            gbest = Some((x.clone(), f));
        }
        pbest.push((x.clone(), f));
        xs.push(x);
        vs.push(v);
    }
    let mut gbest = gbest.expect("swarm is non-empty");
    loop {
        for i in 0..k.swarm {
            for d in 0..len {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let v = k.omega * vs[i][d]
                    + k.c1 * r1 * (pbest[i].0[d] - xs[i][d])
                    + k.c2 * r2 * (gbest.0[d] - xs[i][d]);
                vs[i][d] = v.clamp(-1.0, 1.0);
                xs[i][d] = (xs[i][d] + vs[i][d]).clamp(0.0, 1.0);
            }
            let Some(f) = t.eval(&xs[i]) else { return };
            if f < pbest[i].1 {
                pbest[i] = (xs[i].clone(), f);
            }
            if f < gbest.1 {
                gbest = (xs[i].clone(), f);
            }
        }
    }
}

fn sa(t: &mut Tracker, rng: &mut ChaCha8Rng, len: usize, k: &Knobs) {
    let mut x = random_array(rng, len);
    let Some(mut fx) = t.eval(&x) else { return };
    let mut temp = k.t0;
    while temp >= k.t_min {
        let y = perturb(rng, &x, k.k, k.delta);
        let Some(fy) = t.eval(&y) else { return };
        let accept = fy <= fx || rng.random::<f64>() < ((fx - fy) / temp).exp();
        if accept {
            x = y;
            fx = fy;
        }
        temp *= k.alpha;
    }
}

pub(crate) fn run_on_instance(
    inst: &Instance,
    params: &SearchParams,
    pen: &PenaltyConfig,
) -> Result<SearchResult> {
    params.validate()?;
    let len = params.length.unwrap_or(2 * inst.n());
    let decoder = Decoder::new(inst, *pen);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tracker = Tracker::new(&decoder, params.budget);
    let k = &params.knobs;
    match params.method {
        Method::Ga => ga(&mut tracker, &mut rng, len, k),
        Method::Rhc => rhc(&mut tracker, &mut rng, len, k),
        Method::Lahc => lahc(&mut tracker, &mut rng, len, k),
        Method::Pso => pso(&mut tracker, &mut rng, len, k),
        Method::Sa => sa(&mut tracker, &mut rng, len, k),
    }
    let outcome = decoder.decode(&tracker.best);
    Ok(SearchResult {
        method: params.method,
        seed: params.seed,
        best: tracker.best,
        best_fitness: outcome.fitness,
        best_schedule: outcome.schedule,
        evaluations: tracker.curve.len(),
        curve: tracker.curve,
    })
}

pub fn run_search(
    net: &Network,
    txns: &TransactionSet,
    params: &SearchParams,
    pen: &PenaltyConfig,
) -> Result<SearchResult> {
    let inst = Instance::new(net, txns)?;
    run_on_instance(&inst, params, pen)
}
