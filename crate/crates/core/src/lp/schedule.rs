//! Exact linear-cost scheduling as an LP.
//!
//! Every (channel, step) pair gets a modification slot. `c[e][t]` is the
//! capacity of `e` at step `t` after the slot applies and before the step's
//! transaction; `dplus`/`dminus` split the slot's change so the objective
//! `sum(dplus + dminus)` equals the total absolute change.

use crate::error::{Error, Result};
use crate::lp::simplex::{solve_lp, LpProblem, LpSolution, Relation};
use crate::model::{Direction, Instance, Network, Schedule, TransactionSet};

/// Deltas at or below this magnitude are treated as "no modification".
pub const DELTA_EPS: f64 = 1e-7;

/// Column positions of the schedule LP: three consecutive variables per
/// (channel, step), channels outermost.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub channels: usize,
    pub steps: usize,
}

impl Layout {
    pub fn num_vars(&self) -> usize {
        3 * self.channels * self.steps
    }

    fn base(&self, e: usize, t: usize) -> usize {
        3 * (e * self.steps + (t - 1))
    }

    pub fn cap(&self, e: usize, t: usize) -> usize {
        self.base(e, t)
    }

    pub fn plus(&self, e: usize, t: usize) -> usize {
        self.base(e, t) + 1
    }

    pub fn minus(&self, e: usize, t: usize) -> usize {
        self.base(e, t) + 2
    }
}

pub fn build_lp(net: &Network, txns: &TransactionSet) -> Result<LpProblem> {
    let inst = Instance::new(net, txns)?;
    Ok(build_instance_lp(&inst))
}

pub fn build_instance_lp(inst: &Instance) -> LpProblem {
    let n = inst.n();
    let layout = Layout {
        channels: inst.num_channels(),
        steps: n,
    };
    let mut lp = LpProblem::new();
    for id in &inst.channel_ids {
        for t in 1..=n {
            lp.add_var(format!("c[{id}][{t}]"), 0.0);
            lp.add_var(format!("dplus[{id}][{t}]"), 1.0);
            lp.add_var(format!("dminus[{id}][{t}]"), 1.0);
        }
    }

    // Flow of step t-1 on every channel.
    let mut prev_flow = vec![0.0; inst.num_channels()];
    for t in 1..=n {
        for (e, id) in inst.channel_ids.iter().enumerate() {
            let mut terms = vec![(layout.cap(e, t), 1.0)];
            let rhs = if t == 1 {
                inst.capacity0[e]
            } else {
                terms.push((layout.cap(e, t - 1), -1.0));
                prev_flow[e]
            };
            terms.push((layout.plus(e, t), -1.0));
            terms.push((layout.minus(e, t), 1.0));
            lp.add_row(format!("balance[{id}][{t}]"), terms, Relation::Eq, rhs);
        }
        prev_flow.iter_mut().for_each(|f| *f = 0.0);
        for (e, delta) in inst.flow_delta(t) {
            prev_flow[e] += delta;
        }
    }

    for (t, step) in (1..=n).zip(&inst.steps) {
        for &(e, dir) in &step.hops {
            if dir == Direction::Forward {
                lp.add_row(
                    format!("route[{}][{t}]", inst.channel_ids[e]),
                    vec![(layout.cap(e, t), 1.0)],
                    Relation::Ge,
                    step.value,
                );
            }
        }
    }

    // The capital bound at step t is the capital held before its transaction.
    let capitals = inst.capital_table();
    for t in 1..=n {
        for (u, out) in inst.outgoing.iter().enumerate() {
            if out.is_empty() {
                continue;
            }
            lp.add_row(
                format!("capital[{}][{t}]", inst.node_ids[u]),
                out.iter().map(|&e| (layout.cap(e, t), 1.0)).collect(),
                Relation::Le,
                capitals[u][t - 1],
            );
        }
    }
    lp
}

/// Converts an optimal LP solution into a schedule by replaying the slot
/// deltas over the flow-adjusted capacities.
pub fn extract_schedule(
    net: &Network,
    txns: &TransactionSet,
    sol: &LpSolution,
) -> Result<Schedule> {
    let inst = Instance::new(net, txns)?;
    extract_instance_schedule(&inst, sol)
}

pub fn extract_instance_schedule(inst: &Instance, sol: &LpSolution) -> Result<Schedule> {
    if !sol.is_optimal() {
        return Err(Error::NotOptimal(format!("{:?}", sol.status)));
    }
    let layout = Layout {
        channels: inst.num_channels(),
        steps: inst.n(),
    };
    if sol.values.len() != layout.num_vars() {
        return Err(Error::NotOptimal(format!(
            "expected {} variables, solution has {}",
            layout.num_vars(),
            sol.values.len()
        )));
    }
    let mut sched = Schedule::new();
    let mut caps = inst.capacity0.clone();
    for t in 1..=inst.n() {
        for (e, cap) in caps.iter_mut().enumerate() {
            let delta = sol.values[layout.plus(e, t)] - sol.values[layout.minus(e, t)];
            if delta.abs() > DELTA_EPS {
                let lambda = (*cap + delta).max(0.0);
                sched.push(inst.channel_ids[e].clone(), t, lambda);
                *cap = lambda;
            }
        }
        for (e, delta) in inst.flow_delta(t) {
            caps[e] += delta;
        }
    }
    Ok(sched)
}

/// Result of [`solve_linear`]: the LP solution and the schedule it encodes.
#[derive(Debug, Clone)]
pub struct LinearPlan {
    pub lp: LpProblem,
    pub solution: LpSolution,
    pub schedule: Option<Schedule>,
}

/// Builds, solves and extracts in one call.
pub fn solve_linear(net: &Network, txns: &TransactionSet) -> Result<LinearPlan> {
    let inst = Instance::new(net, txns)?;
    let lp = build_instance_lp(&inst);
    let solution = solve_lp(&lp)?;
    let schedule = if solution.is_optimal() {
        Some(extract_instance_schedule(&inst, &solution)?)
    } else {
        None
    };
    Ok(LinearPlan {
        lp,
        solution,
        schedule,
    })
}
