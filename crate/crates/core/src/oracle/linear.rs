//! Minimum linear cost by dynamic programming over a value grid.
//!
//! Subtracting the cumulative flow from each channel's capacity leaves a
//! quantity `y` that only modifications move, so the cost is the total
//! variation of `y` over time. Channels interact only through the capital
//! bound of their shared tail node, so each node is solved on its own: the
//! state is the vector of its channels' `y` values on a grid whose spacing
//! divides every input amount, and one step of the DP is an L1 distance
//! transform followed by masking out infeasible states.
//!
//! The grid is not proven to contain an optimum, so the report also carries
//! the LP objective and whether the two agree.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lp::{solve_linear, LpStatus};
use crate::model::{Direction, Instance, Network, TransactionSet};
use crate::oracle::OracleBudget;

const MAX_DECIMALS: u32 = 6;
const INF: u64 = u64::MAX / 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LinearOutcome {
    Optimal { cost: f64 },
    Infeasible,
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearOracleReport {
    #[serde(flatten)]
    pub outcome: LinearOutcome,
    /// Grid spacing; zero when the inputs did not fit a decimal grid.
    pub grid: f64,
    pub states: u64,
    pub lp_objective: Option<f64>,
    pub lp_agrees: Option<bool>,
    pub elapsed_ms: u64,
}

impl LinearOracleReport {
    pub fn cost(&self) -> Option<f64> {
        match self.outcome {
            LinearOutcome::Optimal { cost } => Some(cost),
            _ => None,
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Smallest decimal scale putting every amount on an integer grid, and the
/// gcd of the scaled amounts.
fn grid_for(amounts: &[f64]) -> Option<(f64, i64)> {
    'scale: for d in 0..=MAX_DECIMALS {
        let s = 10f64.powi(d as i32);
        let mut g = 0i64;
        for &x in amounts {
            let y = x * s;
            let r = y.round();
            if (y - r).abs() > 1e-9 * y.abs().max(1.0) || r.abs() > 2f64.powi(52) {
                continue 'scale;
            }
            g = gcd(g, r as i64);
        }
        return Some((s, g.max(1)));
    }
    None
}

struct NodeProblem {
    /// Initial `y` per channel.
    start: Vec<i64>,
    /// `lower[t][i]` for t in 1..=n (index t-1).
    lower: Vec<Vec<i64>>,
    upper: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl NodeProblem {
    fn states(&self) -> Option<u64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .try_fold(1u64, |acc, (&lo, &hi)| {
                acc.checked_mul((hi - lo + 1).max(1) as u64)
            })
    }

    /// Minimum total variation in grid units, or `None` when infeasible.
    fn solve(&self, deadline: &dyn Fn() -> bool) -> std::result::Result<Option<u64>, ()> {
        let k = self.start.len();
        let sizes: Vec<usize> = (0..k)
            .map(|i| (self.hi[i] - self.lo[i] + 1) as usize)
            .collect();
        let mut strides = vec![1usize; k];
        for i in 1..k {
            strides[i] = strides[i - 1] * sizes[i - 1];
        }
        let len = strides[k - 1] * sizes[k - 1];
        let mut cost = vec![INF; len];
        let origin: usize = (0..k)
            .map(|i| (self.start[i] - self.lo[i]) as usize * strides[i])
            .sum();
        cost[origin] = 0;

        let mut coords = vec![0i64; k];
        for (lower, &upper) in self.lower.iter().zip(&self.upper) {
            if deadline() {
                return Err(());
            }
            for i in 0..k {
                let (s, g) = (strides[i], sizes[i]);
                for idx in 0..len {
                    if (idx / s) % g > 0 {
                        let c = cost[idx - s].saturating_add(1);
                        if c < cost[idx] {
                            cost[idx] = c;
                        }
                    }
                }
                for idx in (0..len).rev() {
                    if (idx / s) % g + 1 < g {
                        let c = cost[idx + s].saturating_add(1);
                        if c < cost[idx] {
                            cost[idx] = c;
                        }
                    }
                }
            }
            for (idx, c) in cost.iter_mut().enumerate() {
                let mut sum = 0i64;
                let mut ok = true;
                for i in 0..k {
                    coords[i] = self.lo[i] + ((idx / strides[i]) % sizes[i]) as i64;
                    ok &= coords[i] >= lower[i];
                    sum += coords[i];
                }
                if !ok || sum > upper {
                    *c = INF;
                }
            }
        }
        let best = cost.iter().copied().min().unwrap_or(INF);
        Ok((best < INF).then_some(best))
    }
}

pub fn brute_force_linear_opt(
    net: &Network,
    txns: &TransactionSet,
    budget: &OracleBudget,
) -> Result<LinearOracleReport> {
    let inst = Instance::new(net, txns)?;
    let start = Instant::now();
    let mut report = LinearOracleReport {
        outcome: LinearOutcome::Unknown {
            reason: String::new(),
        },
        grid: 0.0,
        states: 0,
        lp_objective: None,
        lp_agrees: None,
        elapsed_ms: 0,
    };
    report.outcome = grid_search(&inst, budget, start, &mut report);

    if let Ok(plan) = solve_linear(net, txns) {
        let lp = match plan.solution.status {
            LpStatus::Optimal => Some(plan.solution.objective),
            _ => None,
        };
        report.lp_objective = lp;
        report.lp_agrees = match (&report.outcome, lp) {
            (LinearOutcome::Optimal { cost }, Some(obj)) => {
                Some((cost - obj).abs() <= 1e-6 * obj.abs().max(1.0))
            }
            (LinearOutcome::Infeasible, None) => Some(plan.solution.status == LpStatus::Infeasible),
            (LinearOutcome::Unknown { .. }, _) => None,
            _ => Some(false),
        };
    }
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn grid_search(
    inst: &Instance,
    budget: &OracleBudget,
    start: Instant,
    report: &mut LinearOracleReport,
) -> LinearOutcome {
    let n = inst.n();
    let m = inst.num_channels();
    let mut amounts: Vec<f64> = inst.capacity0.clone();
    amounts.extend(&inst.capital0);
    amounts.extend(inst.steps.iter().map(|s| s.value));
    let Some((scale, g)) = grid_for(&amounts) else {
        return LinearOutcome::Unknown {
            reason: format!("amounts need more than {MAX_DECIMALS} decimals"),
        };
    };
    let unit = g as f64 / scale;
    report.grid = unit;
    let to_grid = |x: f64| ((x * scale).round() as i64) / g;

    // Grid-unit tables: required capacity, cumulative flow, capital bound.
    let mut lb = vec![vec![0i64; n + 1]; m];
    let mut cum = vec![vec![0i64; n + 2]; m];
    for (i, step) in inst.steps.iter().enumerate() {
        let t = i + 1;
        let v = to_grid(step.value);
        for row in cum.iter_mut() {
            row[t + 1] = row[t];
        }
        for &(e, dir) in &step.hops {
            if dir == Direction::Forward {
                lb[e][t] = v;
            }
        }
        for (e, d) in inst.flow_delta(t) {
            cum[e][t + 1] += if d < 0.0 { -v } else { v };
        }
    }
    let capitals: Vec<Vec<i64>> = inst
        .capital_table()
        .iter()
        .map(|row| row.iter().map(|&c| to_grid(c)).collect())
        .collect();

    let mut problems = Vec::new();
    let mut total_states = 0u64;
    for (u, out) in inst.outgoing.iter().enumerate() {
        if out.is_empty() {
            continue;
        }
        let start_y: Vec<i64> = out.iter().map(|&e| to_grid(inst.capacity0[e])).collect();
        let lower: Vec<Vec<i64>> = (1..=n)
            .map(|t| out.iter().map(|&e| lb[e][t] - cum[e][t]).collect())
            .collect();
        let upper: Vec<i64> = (1..=n)
            .map(|t| capitals[u][t - 1] - out.iter().map(|&e| cum[e][t]).sum::<i64>())
            .collect();
        let k = out.len();
        let mut lo = start_y.clone();
        let mut hi = start_y.clone();
        for t in 0..n {
            let lsum: i64 = lower[t].iter().sum();
            for i in 0..k {
                lo[i] = lo[i].min(lower[t][i]);
                hi[i] = hi[i].max(upper[t] - (lsum - lower[t][i]));
            }
        }
        let p = NodeProblem {
            start: start_y,
            lower,
            upper,
            lo,
            hi,
        };
        match p.states() {
            Some(s) if total_states.saturating_add(s) <= budget.max_lattice as u64 => {
                total_states += s;
            }
            _ => {
                return LinearOutcome::Unknown {
                    reason: format!("grid exceeds {} states", budget.max_lattice),
                };
            }
        }
        problems.push(p);
    }
    report.states = total_states;

    let deadline = || start.elapsed() > budget.time_limit;
    let mut units = 0u64;
    for p in &problems {
        match p.solve(&deadline) {
            Ok(Some(c)) => units += c,
            Ok(None) => return LinearOutcome::Infeasible,
            Err(()) => {
                return LinearOutcome::Unknown {
                    reason: "time limit reached".into(),
                }
            }
        }
    }
    LinearOutcome::Optimal {
        cost: units as f64 * unit,
    }
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

    fn net(cap: f64) -> Network {
        Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_channel("e1", "A", "B", cap)
    }

    #[test]
    fn grid_spacing() {
        assert_eq!(grid_for(&[4.0, 6.0, 10.0]), Some((1.0, 2)));
        assert_eq!(grid_for(&[0.5, 1.25]), Some((100.0, 25)));
        assert_eq!(grid_for(&[0.0]), Some((1.0, 1)));
        assert_eq!(grid_for(&[1.0 / 3.0]), None);
    }

    #[test]
    fn single_channel_costs_two() {
        let txns = TransactionSet::new(vec![tx(1, 3.0), tx(2, 4.0)]).unwrap();
        let r = brute_force_linear_opt(&net(5.0), &txns, &OracleBudget::default()).unwrap();
        assert_eq!(r.cost(), Some(2.0));
        assert_eq!(r.lp_agrees, Some(true));
    }

    #[test]
    fn empty_costs_nothing() {
        let r = brute_force_linear_opt(
            &net(5.0),
            &TransactionSet::empty(),
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(r.cost(), Some(0.0));
    }

    #[test]
    fn single_raise_by_exact_amount() {
        let txns = TransactionSet::new(vec![tx(1, 3.75)]).unwrap();
        let r = brute_force_linear_opt(&net(2.5), &txns, &OracleBudget::default()).unwrap();
        assert_eq!(r.cost(), Some(1.25));
        assert_eq!(r.grid, 1.25);
    }

    #[test]
    fn infeasible_matches_lp() {
        let txns = TransactionSet::new(vec![tx(1, 11.0)]).unwrap();
        let r = brute_force_linear_opt(&net(5.0), &txns, &OracleBudget::default()).unwrap();
        assert_eq!(r.outcome, LinearOutcome::Infeasible);
        assert_eq!(r.lp_agrees, Some(true));
    }

    #[test]
    fn lattice_cap_reports_unknown() {
        let txns = TransactionSet::new(vec![tx(1, 3.0)]).unwrap();
        let budget = OracleBudget {
            max_lattice: 2,
            ..OracleBudget::default()
        };
        let r = brute_force_linear_opt(&net(5.0), &txns, &budget).unwrap();
        assert!(matches!(r.outcome, LinearOutcome::Unknown { .. }));
    }

    #[test]
    fn shared_capital_between_two_channels() {
        // A (capital 6) holds e1=1, e2=5; paying 4 on e1 forces e2 down by 3.
        let net = Network::new(Mode::Consuming)
            .with_node("A", 6.0)
            .with_node("B", 0.0)
            .with_channel("e1", "A", "B", 1.0)
            .with_channel("e2", "A", "B", 5.0);
        let txns = TransactionSet::new(vec![tx(1, 4.0)]).unwrap();
        let r = brute_force_linear_opt(&net, &txns, &OracleBudget::default()).unwrap();
        assert_eq!(r.cost(), Some(6.0));
        assert_eq!(r.lp_agrees, Some(true));
    }
}
