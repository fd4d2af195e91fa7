//! Method × repetition benchmark runs with aggregated convergence curves.
//!
//! Config (`bench.json`), paths relative to the config file:
//!
//! ```json
//! {"network": "net.json", "transactions": "txns.jsonl",
//!  "methods": ["ga", "rhc", "lahc", "pso", "sa"],
//!  "budget": 2000, "repetitions": 3, "seed": 1}
//! ```
//!
//! Optional keys: `seeds` (one per repetition, overriding `seed + rep`),
//! `knobs`, `length`, `penalty`, `out`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{Knobs, Method, SearchParams};
use crate::io::{load_network, load_transactions, read_to_string, save_schedule, write_atomic};
use crate::model::{Instance, Schedule};
use crate::sim::{simulate_instance, PenaltyConfig};
use crate::toolkit::svg::render_svg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub network: PathBuf,
    pub transactions: PathBuf,
    pub methods: Vec<Method>,
    pub budget: usize,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidBench(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.repetitions {
                return bad(format!(
                    "{} seeds given for {} repetitions",
                    seeds.len(),
                    self.repetitions
                ));
            }
        }
        self.params(self.methods[0], 0)
            .validate()
            .map_err(|e| Error::InvalidBench(e.to_string()))
    }

    pub fn seed_for(&self, rep: usize) -> u64 {
        match &self.seeds {
            Some(s) => s[rep],
            None => self.seed.wrapping_add(rep as u64),
        }
    }

    fn params(&self, method: Method, rep: usize) -> SearchParams {
        SearchParams {
            method,
            length: self.length,
            budget: self.budget,
            seed: self.seed_for(rep),
            knobs: self.knobs,
        }
    }
}

/// Reads a config and resolves its relative paths against its directory.
pub fn load_bench_config(path: impl AsRef<Path>) -> Result<BenchConfig> {
    let path = path.as_ref();
    let mut cfg: BenchConfig = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::InvalidBench(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.network, &mut cfg.transactions] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    if let Some(out) = cfg.out.as_mut().filter(|o| o.is_relative()) {
        *out = base.join(&*out);
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub final_fitness: Option<f64>,
    pub sc: Option<usize>,
    pub skips: Option<usize>,
    pub evaluations: usize,
    pub replay_violations: Option<usize>,
    pub replay_skips: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub curve: Vec<f64>,
    #[serde(skip)]
    pub schedule: Option<Schedule>,
}

/// Per-evaluation aggregate over a method's successful runs. Shorter runs
/// are extended with their final value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: Method,
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    pub finals: Vec<f64>,
    pub final_mean: Option<f64>,
    pub final_min: Option<f64>,
    pub final_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub summary: Vec<MethodSummary>,
    pub runs: Vec<BenchRun>,
    #[serde(skip)]
    pub curves: Vec<MethodCurve>,
}

fn run_one(
    inst: &Instance,
    cfg: &BenchConfig,
    pen: &PenaltyConfig,
    method: Method,
    rep: usize,
) -> BenchRun {
    let params = cfg.params(method, rep);
    let mut run = BenchRun {
        method,
        repetition: rep,
        seed: params.seed,
        final_fitness: None,
        sc: None,
        skips: None,
        evaluations: 0,
        replay_violations: None,
        replay_skips: None,
        error: None,
        curve: Vec::new(),
        schedule: None,
    };
    let result = crate::heuristics::search::run_on_instance(inst, &params, pen).and_then(|r| {
        let trace = simulate_instance(inst, &r.best_schedule)?;
        Ok((r, trace))
    });
    match result {
        Ok((r, trace)) => {
            run.final_fitness = Some(r.best_fitness.value);
            run.sc = Some(r.best_fitness.sc);
            run.skips = Some(r.best_fitness.skips);
            run.evaluations = r.evaluations;
            run.replay_violations = Some(trace.violations.len());
            run.replay_skips = Some(trace.skipped.len());
            run.curve = r.curve;
            run.schedule = Some(r.best_schedule);
        }
        Err(e) => run.error = Some(e.to_string()),
    }
    run
}

fn aggregate(method: Method, runs: &[&BenchRun]) -> MethodCurve {
    let len = runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
    let mut curve = MethodCurve {
        method,
        mean: Vec::with_capacity(len),
        min: Vec::with_capacity(len),
        max: Vec::with_capacity(len),
    };
    for i in 0..len {
        let at = |r: &&BenchRun| r.curve.get(i).or(r.curve.last()).copied();
        let vals: Vec<f64> = runs.iter().filter_map(at).collect();
        curve
            .mean
            .push(vals.iter().sum::<f64>() / vals.len() as f64);
        curve
            .min
            .push(vals.iter().copied().fold(f64::INFINITY, f64::min));
        curve
            .max
            .push(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    curve
}

/// Runs every method × repetition and aggregates the results in config order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let net = load_network(&cfg.network)?;
    let txns = load_transactions(&cfg.transactions)?;
    let inst = Instance::new(&net, &txns)?;
    let pen = match cfg.penalty {
        Some(p) => PenaltyConfig::new(p)?,
        None => PenaltyConfig::for_steps(inst.n()),
    };
    let jobs: Vec<(Method, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();
    let runs: Vec<BenchRun> = jobs
        .par_iter()
        .map(|&(m, r)| run_one(&inst, cfg, &pen, m, r))
        .collect();

    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for &method in &cfg.methods {
        let ok: Vec<&BenchRun> = runs
            .iter()
            .filter(|r| r.method == method && r.error.is_none())
            .collect();
        let finals: Vec<f64> = ok.iter().filter_map(|r| r.final_fitness).collect();
        let total = runs.iter().filter(|r| r.method == method).count();
        let nonempty = !finals.is_empty();
        summary.push(MethodSummary {
            method,
            runs: total,
            failed: total - ok.len(),
            final_mean: nonempty.then(|| finals.iter().sum::<f64>() / finals.len() as f64),
            final_min: nonempty.then(|| finals.iter().copied().fold(f64::INFINITY, f64::min)),
            final_max: nonempty.then(|| finals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            finals,
        });
        curves.push(aggregate(method, &ok));
    }
    Ok(BenchReport {
        summary,
        runs,
        curves,
    })
}

fn curves_csv(curves: &[MethodCurve]) -> String {
    let mut out = String::from("method,evaluation,mean,min,max\n");
    for c in curves {
        for i in 0..c.mean.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.method,
                i + 1,
                c.mean[i],
                c.min[i],
                c.max[i]
            );
        }
    }
    out
}

fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("evaluation,best_fitness\n");
    for (i, f) in curve.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, f);
    }
    out
}

/// Writes `runs/<method>-<rep>.csv`, `runs/<method>-<rep>.schedule.json`,
/// `curves.csv`, `summary.json` and `convergence.svg` under `dir`.
pub fn write_bench(report: &BenchReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for run in &report.runs {
        let stem = format!("{}-{}", run.method, run.repetition);
        if run.error.is_none() {
            write_atomic(
                dir.join("runs").join(format!("{stem}.csv")),
                curve_csv(&run.curve).as_bytes(),
            )?;
        }
        if let Some(s) = &run.schedule {
            save_schedule(dir.join("runs").join(format!("{stem}.schedule.json")), s)?;
        }
    }
    write_atomic(
        dir.join("curves.csv"),
        curves_csv(&report.curves).as_bytes(),
    )?;
    let mut summary = serde_json::to_string_pretty(report)?;
    summary.push('\n');
    write_atomic(dir.join("summary.json"), summary.as_bytes())?;
    write_atomic(
        dir.join("convergence.svg"),
        render_svg(&report.curves).as_bytes(),
    )
}
