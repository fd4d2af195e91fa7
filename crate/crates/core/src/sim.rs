//! Step-by-step replay of a schedule against a transaction sequence.
//!
//! At every step the step's modifications apply first, then the capital
//! constraint is checked against the capital held before the step's
//! transaction, and finally the transaction executes if every forward hop
//! covers its value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Direction, Instance, Mode, Network, Schedule, TransactionSet};
use crate::num;

/// Penalty charged per skipped transaction in fitness comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub penalty_per_skip: f64,
}

impl PenaltyConfig {
    pub fn new(penalty_per_skip: f64) -> Result<Self> {
        if !(penalty_per_skip.is_finite() && penalty_per_skip >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "penalty_per_skip must be non-negative, got {penalty_per_skip}"
            )));
        }
        Ok(Self { penalty_per_skip })
    }

    /// `1000 * (n + 1)`: larger than any schedule a decoder can emit for `n`
    /// steps, so one fewer skip always beats any number of extra changes.
    pub fn for_steps(n: usize) -> Self {
        Self {
            penalty_per_skip: 1000.0 * (n as f64 + 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CapitalExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub id: String,
    pub time: usize,
}

/// Full record of one simulation.
///
/// `capacities[e][t]` and `capitals[u][t]` hold the state at the end of step
/// `t` (after its transaction), with column 0 the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub channel_ids: Vec<String>,
    pub node_ids: Vec<String>,
    pub capacities: Vec<Vec<f64>>,
    pub capitals: Vec<Vec<f64>>,
    pub executed: Vec<usize>,
    pub skipped: Vec<usize>,
    pub lc: f64,
    pub sc: usize,
    pub violations: Vec<Violation>,
}

impl Trace {
    pub(crate) fn start(inst: &Instance) -> Self {
        let cols = inst.n() + 1;
        let column = |v: &[f64]| {
            v.iter()
                .map(|&x| {
                    let mut row = Vec::with_capacity(cols);
                    row.push(x);
                    row
                })
                .collect()
        };
        Self {
            channel_ids: inst.channel_ids.clone(),
            node_ids: inst.node_ids.clone(),
            capacities: column(&inst.capacity0),
            capitals: column(&inst.capital0),
            executed: Vec::new(),
            skipped: Vec::new(),
            lc: 0.0,
            sc: 0,
            violations: Vec::new(),
        }
    }

    pub(crate) fn record_column(&mut self, caps: &[f64], capitals: &[f64]) {
        for (row, &c) in self.capacities.iter_mut().zip(caps) {
            row.push(c);
        }
        for (row, &c) in self.capitals.iter_mut().zip(capitals) {
            row.push(c);
        }
    }

    pub fn n(&self) -> usize {
        self.capacities
            .first()
            .or(self.capitals.first())
            .map_or(0, |r| r.len() - 1)
    }

    /// Capacity of channel `e` at the end of step `t`.
    pub fn capacity(&self, channel: &str, t: usize) -> Option<f64> {
        let e = self.channel_ids.iter().position(|c| c == channel)?;
        self.capacities[e].get(t).copied()
    }

    pub fn capital(&self, node: &str, t: usize) -> Option<f64> {
        let u = self.node_ids.iter().position(|c| c == node)?;
        self.capitals[u].get(t).copied()
    }

    pub fn is_clean(&self) -> bool {
        self.skipped.is_empty() && self.violations.is_empty()
    }

    /// `sc + penalty * |skipped|`.
    pub fn penalized_cost(&self, pen: &PenaltyConfig) -> f64 {
        self.sc as f64 + pen.penalty_per_skip * self.skipped.len() as f64
    }
}

/// Applies the flow of an executed step to capacities and capitals.
pub(crate) fn apply_flow(inst: &Instance, t: usize, caps: &mut [f64], capitals: &mut [f64]) {
    if inst.mode == Mode::NonConsuming {
        return;
    }
    let step = &inst.steps[t - 1];
    for &(ci, dir) in &step.hops {
        match dir {
            Direction::Forward => caps[ci] -= step.value,
            Direction::Reverse => caps[ci] += step.value,
        }
    }
    capitals[step.source] -= step.value;
    capitals[step.dest] += step.value;
}

/// Whether every forward hop of step `t` covers the step's value.
pub(crate) fn routable(inst: &Instance, t: usize, caps: &[f64]) -> bool {
    let step = &inst.steps[t - 1];
    step.hops
        .iter()
        .all(|&(ci, dir)| dir == Direction::Reverse || num::ge(caps[ci], step.value))
}

pub(crate) fn capital_violations(
    inst: &Instance,
    t: usize,
    caps: &[f64],
    capitals: &[f64],
    out: &mut Vec<Violation>,
) {
    for (u, chans) in inst.outgoing.iter().enumerate() {
        if chans.is_empty() {
            continue;
        }
        let sum: f64 = chans.iter().map(|&c| caps[c]).sum();
        if !num::le(sum, capitals[u]) {
            out.push(Violation {
                kind: ViolationKind::CapitalExceeded,
                id: inst.node_ids[u].clone(),
                time: t,
            });
        }
    }
}

/// Replays `sched` on a resolved instance.
pub fn simulate_instance(inst: &Instance, sched: &Schedule) -> Result<Trace> {
    let by_step = inst.resolve_schedule(sched)?;
    let mut trace = Trace::start(inst);
    let mut caps = inst.capacity0.clone();
    let mut capitals = inst.capital0.clone();
    for t in 1..=inst.n() {
        for &(ci, lambda) in &by_step[t - 1] {
            trace.lc += (lambda - caps[ci]).abs();
            trace.sc += 1;
            caps[ci] = lambda;
        }
        capital_violations(inst, t, &caps, &capitals, &mut trace.violations);
        if routable(inst, t, &caps) {
            apply_flow(inst, t, &mut caps, &mut capitals);
            trace.executed.push(t);
        } else {
            trace.skipped.push(t);
        }
        trace.record_column(&caps, &capitals);
    }
    Ok(trace)
}

/// Replays `sched` on `(net, txns)`.
///
/// The penalty does not enter the trace; fitness consumers combine it with
/// the skip count via [`Trace::penalized_cost`].
pub fn simulate(
    net: &Network,
    txns: &TransactionSet,
    sched: &Schedule,
    _pen: &PenaltyConfig,
) -> Result<Trace> {
    let inst = Instance::new(net, txns)?;
    simulate_instance(&inst, sched)
}

/// Sum over modifications of `|lambda - capacity just before it|`, read off
/// the trace that `sched` produced.
pub fn linear_cost(sched: &Schedule, trace: &Trace) -> Result<f64> {
    let n = trace.n();
    let mut total = 0.0;
    for (id, mods) in sched.channels() {
        let e = trace
            .channel_ids
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::TraceMismatch(format!("channel {id} not in trace")))?;
        for m in mods {
            if m.time == 0 || m.time > n {
                return Err(Error::TraceMismatch(format!(
                    "modification time {} outside trace horizon {n}",
                    m.time
                )));
            }
            total += (m.value - trace.capacities[e][m.time - 1]).abs();
        }
    }
    if sched.len() != trace.sc {
        return Err(Error::TraceMismatch(format!(
            "schedule has {} modifications, trace applied {}",
            sched.len(),
            trace.sc
        )));
    }
    Ok(total)
}

/// Number of modifications in the schedule.
pub fn step_cost(sched: &Schedule) -> usize {
    sched.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Hop, Transaction};

    fn tx(time: usize, src: &str, dst: &str, path: Vec<Hop>, value: f64) -> Transaction {
        Transaction {
            time,
            source: src.into(),
            dest: dst.into(),
            path,
            value,
        }
    }

    fn single_channel() -> (Network, TransactionSet) {
        let net = Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_channel("e1", "A", "B", 5.0);
        let txns = TransactionSet::new(vec![
            tx(1, "A", "B", vec![Hop::fwd("e1")], 3.0),
            tx(2, "A", "B", vec![Hop::fwd("e1")], 4.0),
        ])
        .unwrap();
        (net, txns)
    }

    fn pen() -> PenaltyConfig {
        PenaltyConfig::for_steps(2)
    }

    #[test]
    fn empty_schedule_skips_underfunded_step() {
        let (net, txns) = single_channel();
        let trace = simulate(&net, &txns, &Schedule::new(), &pen()).unwrap();
        assert_eq!(trace.executed, vec![1]);
        assert_eq!(trace.skipped, vec![2]);
        assert_eq!(trace.sc, 0);
        assert_eq!(trace.lc, 0.0);
        assert_eq!(trace.capacity("e1", 1), Some(2.0));
        assert_eq!(trace.capacity("e1", 2), Some(2.0));
    }

    #[test]
    fn raise_before_second_step_routes_both() {
        let (net, txns) = single_channel();
        let sched = Schedule::new().with("e1", 2, 4.0);
        let trace = simulate(&net, &txns, &sched, &pen()).unwrap();
        assert_eq!(trace.executed, vec![1, 2]);
        assert!(trace.skipped.is_empty());
        assert_eq!(trace.sc, 1);
        assert_eq!(trace.lc, 2.0);
        assert_eq!(trace.capacity("e1", 2), Some(0.0));
        assert_eq!(trace.capital("A", 2), Some(3.0));
        assert!(trace.violations.is_empty());
        assert_eq!(linear_cost(&sched, &trace).unwrap(), 2.0);
    }

    #[test]
    fn payment_takes_the_path_with_enough_capacity() {
        // Alice pays 0.2 to Carol; the Scarlet-Carol channel is short.
        let net = Network::new(Mode::Consuming)
            .with_node("alice", 2.0)
            .with_node("will", 1.0)
            .with_node("scarlet", 1.0)
            .with_node("bob", 1.0)
            .with_node("carol", 1.0)
            .with_channel("aw", "alice", "will", 0.5)
            .with_channel("ws", "will", "scarlet", 0.5)
            .with_channel("sc", "scarlet", "carol", 0.1)
            .with_channel("ab", "alice", "bob", 0.5)
            .with_channel("bc", "bob", "carol", 0.5);
        let blocked = TransactionSet::new(vec![tx(
            1,
            "alice",
            "carol",
            vec![Hop::fwd("aw"), Hop::fwd("ws"), Hop::fwd("sc")],
            0.2,
        )])
        .unwrap();
        let trace = simulate(&net, &blocked, &Schedule::new(), &pen()).unwrap();
        assert_eq!(trace.skipped, vec![1]);
        assert_eq!(trace.capacity("aw", 1), Some(0.5));

        let open = TransactionSet::new(vec![tx(
            1,
            "alice",
            "carol",
            vec![Hop::fwd("ab"), Hop::fwd("bc")],
            0.2,
        )])
        .unwrap();
        let trace = simulate(&net, &open, &Schedule::new(), &pen()).unwrap();
        assert_eq!(trace.executed, vec![1]);
        assert_eq!(trace.capacity("ab", 1), Some(0.3));
        assert_eq!(trace.capital("carol", 1), Some(1.2));
    }

    #[test]
    fn reverse_hops_credit_without_check() {
        let net = Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_channel("e1", "A", "B", 0.0);
        let txns = TransactionSet::new(vec![tx(1, "B", "A", vec![Hop::rev("e1")], 3.0)]).unwrap();
        let trace = simulate(&net, &txns, &Schedule::new(), &pen()).unwrap();
        assert_eq!(trace.executed, vec![1]);
        assert_eq!(trace.capacity("e1", 1), Some(3.0));
        assert_eq!(trace.capital("A", 1), Some(13.0));
    }

    #[test]
    fn capital_breach_is_recorded_and_simulation_continues() {
        let (net, txns) = single_channel();
        // 11 > 10 at step 1; after paying 3, 8 > 7 at step 2.
        let sched = Schedule::new().with("e1", 1, 11.0);
        let trace = simulate(&net, &txns, &sched, &pen()).unwrap();
        assert_eq!(
            trace.violations,
            (1..=2)
                .map(|time| Violation {
                    kind: ViolationKind::CapitalExceeded,
                    id: "A".into(),
                    time,
                })
                .collect::<Vec<_>>()
        );
        assert_eq!(trace.executed, vec![1, 2]);
    }

    #[test]
    fn non_consuming_mode_only_checks() {
        let (mut net, txns) = single_channel();
        net.mode = Mode::NonConsuming;
        let trace = simulate(&net, &txns, &Schedule::new(), &pen()).unwrap();
        assert_eq!(trace.executed, vec![1, 2]);
        assert_eq!(trace.capacities[0], vec![5.0, 5.0, 5.0]);
        assert_eq!(trace.capitals[0], vec![10.0, 10.0, 10.0]);
    }

    #[test]
    fn linear_cost_examples() {
        let (net, txns) = single_channel();
        let trace = simulate(&net, &txns, &Schedule::new(), &pen()).unwrap();
        assert_eq!(linear_cost(&Schedule::new(), &trace).unwrap(), 0.0);

        // No traffic: two resets on one channel, 5 -> 3 -> 6.
        let quiet = Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_node("C", 10.0)
            .with_channel("e1", "A", "B", 5.0)
            .with_channel("e2", "B", "C", 1.0);
        let txns = TransactionSet::new(vec![
            tx(1, "B", "C", vec![Hop::fwd("e2")], 0.5),
            tx(2, "B", "C", vec![Hop::fwd("e2")], 0.5),
        ])
        .unwrap();
        let sched = Schedule::new().with("e1", 1, 3.0).with("e1", 2, 6.0);
        let trace = simulate(&quiet, &txns, &sched, &pen()).unwrap();
        assert_eq!(linear_cost(&sched, &trace).unwrap(), 5.0);
        assert_eq!(trace.lc, 5.0);
    }

    #[test]
    fn linear_cost_rejects_foreign_trace() {
        let (net, txns) = single_channel();
        let trace = simulate(&net, &txns, &Schedule::new(), &pen()).unwrap();
        let other = Schedule::new().with("e1", 2, 4.0);
        assert!(matches!(
            linear_cost(&other, &trace),
            Err(Error::TraceMismatch(_))
        ));
        let unknown = Schedule::new().with("zz", 1, 4.0);
        assert!(linear_cost(&unknown, &trace).is_err());
    }

    #[test]
    fn step_cost_counts_entries() {
        assert_eq!(step_cost(&Schedule::new()), 0);
        assert_eq!(step_cost(&Schedule::new().with("e1", 2, 4.0)), 1);
        let s = Schedule::new()
            .with("e1", 1, 4.0)
            .with("e1", 3, 2.0)
            .with("e2", 2, 9.0);
        assert_eq!(step_cost(&s), 3);
    }

    #[test]
    fn penalty_default_scales_with_steps() {
        assert_eq!(PenaltyConfig::for_steps(2).penalty_per_skip, 3000.0);
        assert!(PenaltyConfig::new(-1.0).is_err());
    }
}
