//! Minimum step cost by support enumeration.
//!
//! A support is a set of (channel, step) points allowed to carry a
//! modification. Supports are tried in increasing size, lexicographically
//! over points ordered by channel and then latest step first, so among
//! equally small supports the one modifying latest wins. The first support
//! whose capacities can be chosen feasibly gives the optimum. Feasibility at
//! a fixed support is a small LP in the per-point deltas.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lp::{solve_lp, LpProblem, LpStatus, Relation};
use crate::model::{Direction, Instance, Network, Schedule, TransactionSet};
use crate::num;
use crate::oracle::OracleBudget;
use crate::sim::simulate_instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Optimal { sc: usize, schedule: Schedule },
    Infeasible,
    Unknown { reason: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOracleStats {
    pub supports_checked: u64,
    pub lp_solves: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOracleReport {
    #[serde(flatten)]
    pub outcome: StepOutcome,
    pub stats: StepOracleStats,
}

impl StepOracleReport {
    pub fn sc(&self) -> Option<usize> {
        match self.outcome {
            StepOutcome::Optimal { sc, .. } => Some(sc),
            _ => None,
        }
    }
}

/// Per-instance tables shared by every support check. Times are 1-based;
/// index 0 is unused.
struct Tables<'a> {
    inst: &'a Instance,
    n: usize,
    /// Required capacity of channel e before step t's transaction.
    lb: Vec<Vec<f64>>,
    /// Flow on e from steps 1..t-1.
    cum: Vec<Vec<f64>>,
    /// Capital bound of u at step t.
    cap: Vec<Vec<f64>>,
}

impl<'a> Tables<'a> {
    fn new(inst: &'a Instance) -> Self {
        let n = inst.n();
        let m = inst.num_channels();
        let mut lb = vec![vec![0.0; n + 1]; m];
        for (i, step) in inst.steps.iter().enumerate() {
            for &(e, dir) in &step.hops {
                if dir == Direction::Forward {
                    lb[e][i + 1] = step.value;
                }
            }
        }
        let mut cum = vec![vec![0.0; n + 2]; m];
        for t in 1..=n {
            for row in cum.iter_mut() {
                row[t + 1] = row[t];
            }
            for (e, d) in inst.flow_delta(t) {
                cum[e][t + 1] += d;
            }
        }
        let capitals = inst.capital_table();
        let cap = capitals
            .iter()
            .map(|row| {
                let mut c = vec![0.0; n + 1];
                c[1..].copy_from_slice(&row[..n]);
                c
            })
            .collect();
        Self {
            inst,
            n,
            lb,
            cum,
            cap,
        }
    }

    fn base(&self, e: usize, t: usize) -> f64 {
        self.inst.capacity0[e] + self.cum[e][t]
    }

    fn point(&self, p: usize) -> (usize, usize) {
        (p / self.n, self.n - p % self.n)
    }

    /// Necessary condition: with every modified interval set to its least
    /// routable value, no channel misses a payment and no node's capital
    /// bound is exceeded. `cmin` is scratch space of size `m * n`.
    fn prefilter(&self, support: &[usize], cmin: &mut [f64]) -> bool {
        let n = self.n;
        let m = self.inst.num_channels();
        let mut k = 0;
        for e in 0..m {
            let row = &mut cmin[e * n..(e + 1) * n];
            let mut starts = Vec::new();
            while k < support.len() && support[k] / n == e {
                starts.push(self.point(support[k]).1);
                k += 1;
            }
            starts.reverse();
            let first = starts.first().copied().unwrap_or(n + 1);
            for t in 1..first {
                let c = self.base(e, t);
                if !num::ge(c, self.lb[e][t]) {
                    return false;
                }
                row[t - 1] = c;
            }
            for (j, &s) in starts.iter().enumerate() {
                let end = starts.get(j + 1).copied().unwrap_or(n + 1);
                let need = (s..end)
                    .map(|t| self.lb[e][t] - (self.cum[e][t] - self.cum[e][s]))
                    .fold(0.0, f64::max);
                for t in s..end {
                    row[t - 1] = need + self.cum[e][t] - self.cum[e][s];
                }
            }
        }
        for (u, out) in self.inst.outgoing.iter().enumerate() {
            if out.is_empty() {
                continue;
            }
            for t in 1..=n {
                let sum: f64 = out.iter().map(|&e| cmin[e * n + t - 1]).sum();
                if !num::le(sum, self.cap[u][t]) {
                    return false;
                }
            }
        }
        true
    }

    /// Exact feasibility of a support. Returns the capacity set at each
    /// point when feasible.
    fn lp_check(&self, support: &[usize]) -> Result<Option<Vec<f64>>> {
        let n = self.n;
        let m = self.inst.num_channels();
        let mut lp = LpProblem::new();
        let mut on_channel: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); m];
        for &p in support {
            let (e, t) = self.point(p);
            let id = &self.inst.channel_ids[e];
            let plus = lp.add_var(format!("dplus[{id}][{t}]"), 0.0);
            let minus = lp.add_var(format!("dminus[{id}][{t}]"), 0.0);
            on_channel[e].push((t, plus, minus));
        }
        let delta_terms = |e: usize, t: usize, terms: &mut Vec<(usize, f64)>| {
            for &(s, plus, minus) in &on_channel[e] {
                if s <= t {
                    terms.push((plus, 1.0));
                    terms.push((minus, -1.0));
                }
            }
        };
        for e in 0..m {
            for t in 1..=n {
                let mut terms = Vec::new();
                delta_terms(e, t, &mut terms);
                let rhs = self.lb[e][t] - self.base(e, t);
                if terms.is_empty() {
                    if !num::ge(0.0, rhs) {
                        return Ok(None);
                    }
                    continue;
                }
                lp.add_row(format!("route[{e}][{t}]"), terms, Relation::Ge, rhs);
            }
        }
        for (u, out) in self.inst.outgoing.iter().enumerate() {
            if out.is_empty() {
                continue;
            }
            for t in 1..=n {
                let mut terms = Vec::new();
                let mut base = 0.0;
                for &e in out {
                    delta_terms(e, t, &mut terms);
                    base += self.base(e, t);
                }
                let rhs = self.cap[u][t] - base;
                if terms.is_empty() {
                    if !num::le(0.0, rhs) {
                        return Ok(None);
                    }
                    continue;
                }
                lp.add_row(format!("capital[{u}][{t}]"), terms, Relation::Le, rhs);
            }
        }
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Ok(None);
        }
        let mut lambdas = Vec::with_capacity(support.len());
        for &p in support {
            let (e, t) = self.point(p);
            let shift: f64 = on_channel[e]
                .iter()
                .filter(|&&(s, _, _)| s <= t)
                .map(|&(_, plus, minus)| sol.values[plus] - sol.values[minus])
                .sum();
            lambdas.push((self.base(e, t) + shift).max(0.0));
        }
        Ok(Some(lambdas))
    }

    /// Capacities at the support points, replayed through the flows so each
    /// lambda is the absolute value the channel is reset to.
    fn witness(&self, support: &[usize], lambdas: &[f64]) -> Schedule {
        let mut sched = Schedule::new();
        let mut by_point: Vec<(usize, usize, f64)> = support
            .iter()
            .zip(lambdas)
            .map(|(&p, &l)| {
                let (e, t) = self.point(p);
                (e, t, l)
            })
            .collect();
        by_point.sort_by_key(|&(e, t, _)| (e, t));
        for (e, t, l) in by_point {
            sched.push(self.inst.channel_ids[e].clone(), t, l);
        }
        sched
    }
}

/// Advances `idx` to the next k-combination of `0..total` in lexicographic
/// order. Returns false after the last one.
fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn brute_force_step_opt(
    net: &Network,
    txns: &TransactionSet,
    budget: &OracleBudget,
) -> Result<StepOracleReport> {
    let inst = Instance::new(net, txns)?;
    let start = Instant::now();
    let tables = Tables::new(&inst);
    let total = inst.num_channels() * inst.n();
    let mut stats = StepOracleStats::default();
    let mut cmin = vec![0.0; total];

    let finish = |outcome: StepOutcome, mut stats: StepOracleStats| {
        stats.elapsed_ms = start.elapsed().as_millis() as u64;
        Ok(StepOracleReport { outcome, stats })
    };

    // Allowing every point is the most permissive support.
    let all: Vec<usize> = (0..total).collect();
    stats.supports_checked += 1;
    let feasible = tables.prefilter(&all, &mut cmin) && {
        stats.lp_solves += 1;
        tables.lp_check(&all)?.is_some()
    };
    if !feasible {
        return finish(StepOutcome::Infeasible, stats);
    }

    let max_k = budget.max_modifications.min(total);
    for k in 0..=max_k {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            stats.supports_checked += 1;
            if stats.supports_checked > budget.max_lattice as u64 {
                let reason = format!("support cap {} reached at size {k}", budget.max_lattice);
                return finish(StepOutcome::Unknown { reason }, stats);
            }
            if stats.supports_checked % 256 == 0 && start.elapsed() > budget.time_limit {
                let reason = format!("time limit reached at size {k}");
                return finish(StepOutcome::Unknown { reason }, stats);
            }
            if tables.prefilter(&idx, &mut cmin) {
                stats.lp_solves += 1;
                if let Some(lambdas) = tables.lp_check(&idx)? {
                    let schedule = tables.witness(&idx, &lambdas);
                    let trace = simulate_instance(&inst, &schedule)?;
                    if !trace.is_clean() {
                        let reason = format!("witness of size {k} failed replay");
                        return finish(StepOutcome::Unknown { reason }, stats);
                    }
                    return finish(StepOutcome::Optimal { sc: k, schedule }, stats);
                }
            }
            if !next_combination(&mut idx, total) {
                break;
            }
        }
    }
    let reason = format!("no feasible support with at most {max_k} modifications");
    finish(StepOutcome::Unknown { reason }, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Hop, Mode, Transaction};

    fn tx(time: usize, value: f64) -> Transaction {
        Transaction {
            time,
            source: "A".into(),
            dest: "B".into(),
            path: vec![Hop::fwd("e1")],
            value,
        }
    }

    fn single_channel() -> (Network, TransactionSet) {
        let net = Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_channel("e1", "A", "B", 5.0);
        (
            net,
            TransactionSet::new(vec![tx(1, 3.0), tx(2, 4.0)]).unwrap(),
        )
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut empty: Vec<usize> = vec![];
        assert!(!next_combination(&mut empty, 3));
    }

    #[test]
    fn single_channel_needs_one_change_at_step_two() {
        let (net, txns) = single_channel();
        let report = brute_force_step_opt(&net, &txns, &OracleBudget::default()).unwrap();
        let StepOutcome::Optimal { sc, schedule } = report.outcome else {
            panic!("expected optimum, got {:?}", report.outcome);
        };
        assert_eq!(sc, 1);
        let mods = schedule.get("e1");
        assert_eq!(mods.len(), 1);
        assert_eq!(mods[0].time, 2);
        assert!((4.0 - 1e-9..=7.0 + 1e-9).contains(&mods[0].value));
    }

    #[test]
    fn trivially_feasible_costs_nothing() {
        let (net, _) = single_channel();
        let txns = TransactionSet::new(vec![tx(1, 2.0), tx(2, 3.0)]).unwrap();
        let report = brute_force_step_opt(&net, &txns, &OracleBudget::default()).unwrap();
        assert_eq!(
            report.outcome,
            StepOutcome::Optimal {
                sc: 0,
                schedule: Schedule::new()
            }
        );
    }

    #[test]
    fn payment_above_capital_is_infeasible() {
        let net = Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 0.0)
            .with_channel("e1", "A", "B", 5.0);
        let txns = TransactionSet::new(vec![tx(1, 11.0)]).unwrap();
        let report = brute_force_step_opt(&net, &txns, &OracleBudget::default()).unwrap();
        assert_eq!(report.outcome, StepOutcome::Infeasible);
    }

    #[test]
    fn small_budget_reports_unknown() {
        let (net, txns) = single_channel();
        let budget = OracleBudget {
            max_modifications: 0,
            ..OracleBudget::default()
        };
        let report = brute_force_step_opt(&net, &txns, &budget).unwrap();
        assert!(matches!(report.outcome, StepOutcome::Unknown { .. }));
    }

    #[test]
    fn freeing_capital_takes_a_second_change() {
        // A's capital is tied up in e2; e1 needs 4 at step 1.
        let net = Network::new(Mode::NonConsuming)
            .with_node("A", 5.0)
            .with_node("B", 0.0)
            .with_channel("e1", "A", "B", 1.0)
            .with_channel("e2", "A", "B", 4.0);
        let txns = TransactionSet::new(vec![tx(1, 4.0)]).unwrap();
        let report = brute_force_step_opt(&net, &txns, &OracleBudget::default()).unwrap();
        assert_eq!(report.sc(), Some(2));
    }
}
