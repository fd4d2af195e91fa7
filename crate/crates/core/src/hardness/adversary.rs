//! The online lower-bound adversary.
//!
//! Two nodes joined by `delta` parallel channels, all empty at the start.
//! At each step the adversary looks at the algorithm's capacities, picks the
//! emptiest channel and asks for a payment of `C/delta + eps` over it: more
//! than that channel can hold unless the algorithm changes something.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Direction, Hop, Mode, Network, Schedule, Transaction, TransactionSet};
use crate::num;
use crate::oracle::{brute_force_step_opt, OracleBudget};
use crate::sim::simulate;
use crate::PenaltyConfig;

/// Values below this end a consuming-mode run.
const MIN_VALUE: f64 = 1e-6;
/// Largest `delta * steps` accepted.
const MAX_POINTS: usize = 1_000_000;
/// Largest `delta * steps` cross-checked with the step oracle.
const ORACLE_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub delta: usize,
    pub steps: usize,
    pub capital: f64,
    /// Defaults to `capital / (100 * delta)`.
    pub epsilon: Option<f64>,
    pub mode: Mode,
}

impl AdversaryConfig {
    pub fn new(delta: usize, steps: usize, capital: f64) -> Self {
        Self {
            delta,
            steps,
            capital,
            epsilon: None,
            mode: Mode::NonConsuming,
        }
    }

    pub fn eps(&self) -> f64 {
        self.epsilon
            .unwrap_or(self.capital / (100.0 * self.delta as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidAdversary(msg));
        if self.delta == 0 {
            return bad("delta must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.delta.saturating_mul(self.steps) > MAX_POINTS {
            return bad(format!("delta * steps exceeds {MAX_POINTS}"));
        }
        if !(self.capital.is_finite() && self.capital > 0.0) {
            return bad(format!("capital {} must be positive", self.capital));
        }
        let eps = self.eps();
        if !(eps > 0.0 && eps < self.capital / self.delta as f64) {
            return bad(format!("epsilon {eps} must lie in (0, capital/delta)"));
        }
        Ok(())
    }

    pub fn network(&self) -> Network {
        let mut net = Network::new(self.mode)
            .with_node("v1", self.capital)
            .with_node("v2", 0.0);
        for j in 1..=self.delta {
            net = net.with_channel(format!("e{j}"), "v1", "v2", 0.0);
        }
        net
    }
}

/// What an online algorithm sees before deciding on a step.
#[derive(Debug, Clone, Copy)]
pub struct OnlineState<'a> {
    pub time: usize,
    pub network: &'a Network,
    /// Current capacities, in network channel order.
    pub capacities: &'a [f64],
    /// Current capitals, in network node order.
    pub capitals: &'a [f64],
}

impl OnlineState<'_> {
    pub fn capacity(&self, channel: &str) -> Option<f64> {
        let e = self.network.channels.iter().position(|c| c.id == channel)?;
        Some(self.capacities[e])
    }

    pub fn capital(&self, node: &str) -> Option<f64> {
        let u = self.network.nodes.iter().position(|n| n.id == node)?;
        Some(self.capitals[u])
    }

    /// Capital of `node` not committed to its outgoing channels.
    pub fn headroom(&self, node: &str) -> Option<f64> {
        let used: f64 = self
            .network
            .channels
            .iter()
            .zip(self.capacities)
            .filter(|(c, _)| c.source == node)
            .map(|(_, &cap)| cap)
            .sum();
        Some(self.capital(node)? - used)
    }
}

/// A deterministic online scheduler. Returns the `(channel, capacity)`
/// resets to apply before `txn` executes, or [`Error::Unroutable`].
pub trait OnlineAlgorithm {
    fn name(&self) -> &str;
    fn on_transaction(
        &mut self,
        state: &OnlineState<'_>,
        txn: &Transaction,
    ) -> Result<Vec<(String, f64)>>;
}

/// Raises each short forward hop to exactly the payment value, shrinking
/// the tail's other channels proportionally when its capital is committed.
pub fn greedy_online(state: &OnlineState<'_>, txn: &Transaction) -> Result<Vec<(String, f64)>> {
    let net = state.network;
    let mut caps = state.capacities.to_vec();
    let pos = |id: &str| {
        net.channels
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| Error::UnknownChannel(id.to_string()))
    };
    let mut on_path = Vec::new();
    for hop in &txn.path {
        if hop.dir == Direction::Forward {
            on_path.push(pos(&hop.channel)?);
        }
    }
    let mut changed: Vec<usize> = Vec::new();
    let v = txn.value;
    for &e in &on_path {
        if num::ge(caps[e], v) {
            continue;
        }
        let tail = &net.channels[e].source;
        let u = net
            .nodes
            .iter()
            .position(|n| &n.id == tail)
            .ok_or_else(|| Error::UnknownNode(tail.clone()))?;
        let out: Vec<usize> = (0..net.channels.len())
            .filter(|&i| &net.channels[i].source == tail)
            .collect();
        let need = v - caps[e];
        let headroom = state.capitals[u] - out.iter().map(|&i| caps[i]).sum::<f64>();
        if headroom < need {
            let short = need - headroom;
            let siblings: Vec<usize> = out
                .iter()
                .copied()
                .filter(|i| !on_path.contains(i) && caps[*i] > 0.0)
                .collect();
            let pool: f64 = siblings.iter().map(|&i| caps[i]).sum();
            if !num::ge(pool, short) {
                return Err(Error::Unroutable(txn.time));
            }
            let keep = (1.0 - short / pool).max(0.0);
            for i in siblings {
                caps[i] *= keep;
                changed.push(i);
            }
        }
        caps[e] = v;
        changed.push(e);
    }
    changed.sort_unstable();
    changed.dedup();
    Ok(changed
        .into_iter()
        .map(|i| (net.channels[i].id.clone(), caps[i]))
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl OnlineAlgorithm for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn on_transaction(
        &mut self,
        state: &OnlineState<'_>,
        txn: &Transaction,
    ) -> Result<Vec<(String, f64)>> {
        greedy_online(state, txn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelValue {
    pub channel: String,
    pub value: f64,
}

/// One line of the adversary transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: usize,
    pub channel: String,
    pub value: f64,
    pub modifications: Vec<ChannelValue>,
    pub executed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub algorithm: String,
    pub config: AdversaryConfig,
    /// Steps actually issued; below `config.steps` only in consuming mode.
    pub steps_run: usize,
    pub online_sc: usize,
    pub online_skips: usize,
    pub offline_sc: usize,
    pub offline_skips: usize,
    /// `online_sc / offline_sc`; absent when the offline schedule is free.
    pub ratio: Option<f64>,
    pub oracle_sc: Option<usize>,
    pub disqualified: Option<String>,
    pub network: Network,
    pub transactions: TransactionSet,
    pub online_schedule: Schedule,
    pub offline_schedule: Schedule,
    pub transcript: Vec<TranscriptEntry>,
}

/// Offline schedule for a request sequence on a single-tail network: raise
/// the requested channel to exactly the value, and while the tail's capital
/// is exceeded, empty the other channel whose next request is furthest away.
/// Steps no schedule can route are left alone.
pub fn offline_schedule(net: &Network, txns: &TransactionSet) -> Result<Schedule> {
    let inst = crate::model::Instance::new(net, txns)?;
    let n = inst.n();
    let mut caps = inst.capacity0.clone();
    let mut capitals = inst.capital0.clone();
    let mut sched = Schedule::new();
    let next_use = |e: usize, after: usize| {
        (after + 1..=n)
            .find(|&s| inst.steps[s - 1].hops.iter().any(|&(c, _)| c == e))
            .unwrap_or(usize::MAX)
    };
    for t in 1..=n {
        let step = &inst.steps[t - 1];
        let mut mods: Vec<(usize, f64)> = Vec::new();
        let mut trial = caps.clone();
        let mut ok = true;
        for &(e, dir) in &step.hops {
            if dir == Direction::Reverse || num::ge(trial[e], step.value) {
                continue;
            }
            let u = inst.tail[e];
            trial[e] = step.value;
            mods.push((e, step.value));
            loop {
                let used: f64 = inst.outgoing[u].iter().map(|&i| trial[i]).sum();
                if num::le(used, capitals[u]) {
                    break;
                }
                let victim = inst.outgoing[u]
                    .iter()
                    .copied()
                    .filter(|&i| trial[i] > 0.0 && !step.hops.iter().any(|&(c, _)| c == i))
                    .max_by_key(|&i| (next_use(i, t), std::cmp::Reverse(i)));
                match victim {
                    Some(i) => {
                        trial[i] = 0.0;
                        mods.push((i, 0.0));
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            caps = trial;
            mods.sort_by_key(|&(e, _)| e);
            mods.dedup_by_key(|m| m.0);
            for &(e, value) in &mods {
                sched.push(inst.channel_ids[e].clone(), t, value);
            }
            crate::sim::apply_flow(&inst, t, &mut caps, &mut capitals);
        }
    }
    Ok(sched)
}

pub fn adversary_run(
    alg: &mut dyn OnlineAlgorithm,
    cfg: &AdversaryConfig,
) -> Result<AdversaryReport> {
    cfg.validate()?;
    let net = cfg.network();
    let eps = cfg.eps();
    let delta = cfg.delta;
    let mut caps = vec![0.0f64; delta];
    let mut capitals = vec![cfg.capital, 0.0];
    let mut txns = Vec::new();
    let mut online = Schedule::new();
    let mut transcript = Vec::new();
    let mut skips = 0;
    let mut disqualified = None;

    for t in 1..=cfg.steps {
        let c = capitals[0];
        let value = c / delta as f64 + eps;
        if cfg.mode == Mode::Consuming && (value < MIN_VALUE || value > c) {
            break;
        }
        let j = (0..delta)
            .min_by(|&a, &b| caps[a].total_cmp(&caps[b]).then(a.cmp(&b)))
            .expect("delta >= 1");
        let txn = Transaction {
            time: t,
            source: "v1".into(),
            dest: "v2".into(),
            path: vec![Hop::fwd(format!("e{}", j + 1))],
            value,
        };
        let state = OnlineState {
            time: t,
            network: &net,
            capacities: &caps,
            capitals: &capitals,
        };
        let mods = match alg.on_transaction(&state, &txn) {
            Ok(m) => m,
            Err(Error::Unroutable(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        let mut applied: Vec<(usize, f64)> = Vec::new();
        for (id, lambda) in &mods {
            let Some(e) = net.channels.iter().position(|ch| &ch.id == id) else {
                disqualified = Some(format!("step {t}: unknown channel {id}"));
                break;
            };
            if !(lambda.is_finite() && *lambda >= 0.0) {
                disqualified = Some(format!("step {t}: invalid capacity {lambda} on {id}"));
                break;
            }
            applied.retain(|&(x, _)| x != e);
            applied.push((e, *lambda));
        }
        if disqualified.is_some() {
            break;
        }
        applied.sort_by_key(|&(e, _)| e);
        for &(e, lambda) in &applied {
            caps[e] = lambda;
            online.push(net.channels[e].id.clone(), t, lambda);
        }
        let used: f64 = caps.iter().sum();
        if !num::le(used, capitals[0]) {
            disqualified = Some(format!(
                "step {t}: outgoing capacity {used} exceeds capital {}",
                capitals[0]
            ));
        }
        let executed = num::ge(caps[j], value);
        if executed {
            if cfg.mode == Mode::Consuming {
                caps[j] -= value;
                capitals[0] -= value;
                capitals[1] += value;
            }
        } else {
            skips += 1;
        }
        transcript.push(TranscriptEntry {
            step: t,
            channel: txn.path[0].channel.clone(),
            value,
            modifications: applied
                .iter()
                .map(|&(e, value)| ChannelValue {
                    channel: net.channels[e].id.clone(),
                    value,
                })
                .collect(),
            executed,
        });
        txns.push(txn);
        if disqualified.is_some() {
            break;
        }
    }

    let steps_run = txns.len();
    let transactions = TransactionSet::new(txns)?;
    let pen = PenaltyConfig::for_steps(steps_run);
    if disqualified.is_none() {
        let replay = simulate(&net, &transactions, &online, &pen)?;
        debug_assert_eq!(replay.skipped.len(), skips);
        debug_assert!(replay.violations.is_empty());
    }

    let offline = offline_schedule(&net, &transactions)?;
    let offline_trace = simulate(&net, &transactions, &offline, &pen)?;
    if !offline_trace.violations.is_empty() {
        return Err(Error::InfeasibleSchedule(
            "offline schedule breaks a capital constraint".into(),
        ));
    }
    let oracle_sc = if delta * steps_run <= ORACLE_POINTS && offline_trace.skipped.is_empty() {
        let budget = OracleBudget {
            max_modifications: offline.len(),
            ..OracleBudget::default()
        };
        brute_force_step_opt(&net, &transactions, &budget)?.sc()
    } else {
        None
    };

    let online_sc = online.len();
    let offline_sc = offline.len();
    Ok(AdversaryReport {
        algorithm: alg.name().to_string(),
        config: *cfg,
        steps_run,
        online_sc,
        online_skips: skips,
        offline_sc,
        offline_skips: offline_trace.skipped.len(),
        ratio: (offline_sc > 0).then(|| online_sc as f64 / offline_sc as f64),
        oracle_sc,
        disqualified,
        network: net,
        transactions,
        online_schedule: online,
        offline_schedule: offline,
        transcript,
    })
}
