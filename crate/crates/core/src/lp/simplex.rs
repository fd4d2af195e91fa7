//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Minimizes `c·x` subject to sparse rows and `x >= 0`. Intended for desk-scale
//! problems (a few thousand columns); no presolve, no sparse factorization.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest LP accepted by [`solve_lp`].
pub const MAX_VARIABLES: usize = 50_000;
const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }

    fn flipped(self) -> Self {
        match self {
            Relation::Eq => Relation::Eq,
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A minimization LP over non-negative variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.var_names.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.rows.push(LpRow {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any row or bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = values.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(j, a)| a * values[j]).sum();
            let v = match row.relation {
                Relation::Eq => (lhs - row.rhs).abs(),
                Relation::Le => (lhs - row.rhs).max(0.0),
                Relation::Ge => (row.rhs - lhs).max(0.0),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Line-oriented text form: an objective line, then one
    /// `name: coef*var + ... REL rhs` line per row.
    pub fn dump(&self) -> String {
        let mut out = String::from("minimize:");
        let terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        self.write_terms(&mut out, &terms);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.name);
            out.push(':');
            self.write_terms(&mut out, &row.terms);
            let _ = writeln!(out, " {} {}", row.relation.symbol(), row.rhs);
        }
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            out.push_str(" 0");
        }
        for (k, &(j, a)) in terms.iter().enumerate() {
            if k > 0 {
                out.push_str(" +");
            }
            let _ = write!(out, " {}*{}", a, self.var_names[j]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplexStats {
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
    /// Objective value after each phase-2 pivot, starting with the value at
    /// the first feasible basis.
    pub phase2_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub stats: SimplexStats,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

struct Tableau {
    rows: usize,
    width: usize,
    a: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn objective(&self) -> f64 {
        -self.cost[self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        self.a[r * w + c] = 1.0;
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (x, &y) in self.cost.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Sets the cost row to `costs` expressed in terms of the current basis.
    fn price(&mut self, costs: &[f64]) {
        self.cost = costs.to_vec();
        self.cost.resize(self.width, 0.0);
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.width..(i + 1) * self.width];
                for (x, &y) in self.cost.iter_mut().zip(row) {
                    *x -= cb * y;
                }
            }
        }
    }

    /// Runs Bland-rule pivots until optimal. Returns false when unbounded.
    fn run(
        &mut self,
        pivots: &mut usize,
        limit: usize,
        mut on_pivot: impl FnMut(f64),
    ) -> Result<bool> {
        loop {
            let Some(col) = (0..self.enterable).find(|&j| self.cost[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * br.abs().max(1.0);
                            if (!tie && ratio < br) || (tie && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
            *pivots += 1;
            if *pivots > limit {
                return Err(Error::IterationLimit(*pivots));
            }
            on_pivot(self.objective());
        }
    }
}

type Terms = Vec<(usize, f64)>;

/// Solves `lp` to optimality, or reports it infeasible or unbounded.
pub fn solve_lp(lp: &LpProblem) -> Result<LpSolution> {
    let n = lp.num_vars();
    if n > MAX_VARIABLES {
        return Err(Error::LpTooLarge(n));
    }
    let m = lp.rows.len();

    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Terms, Relation, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            if r.rhs < 0.0 {
                (
                    r.terms.iter().map(|&(j, a)| (j, -a)).collect(),
                    r.relation.flipped(),
                    -r.rhs,
                )
            } else {
                (r.terms.clone(), r.relation, r.rhs)
            }
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let first_art = n + n_slack;
    let width = first_art + n_art + 1;
    let mut t = Tableau {
        rows: m,
        width,
        a: vec![0.0; m * width],
        cost: vec![0.0; width],
        basis: vec![0; m],
        enterable: first_art + n_art,
    };
    let (mut slack, mut art) = (n, first_art);
    for (i, (terms, rel, rhs)) in rows.iter().enumerate() {
        let row = &mut t.a[i * width..(i + 1) * width];
        for &(j, a) in terms {
            row[j] += a;
        }
        row[width - 1] = *rhs;
        match rel {
            Relation::Le => {
                row[slack] = 1.0;
                t.basis[i] = slack;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                t.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                t.basis[i] = art;
                art += 1;
            }
        }
    }

    let limit = 200 * (m + width) + 1_000;
    let mut stats = SimplexStats::default();

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; width];
    for c in &mut phase1_cost[first_art..width - 1] {
        *c = 1.0;
    }
    t.price(&phase1_cost);
    t.run(&mut stats.phase1_pivots, limit, |_| {})?;
    if t.objective() > FEASIBILITY_TOL {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            values: vec![0.0; n],
            stats,
        });
    }

    // Drive remaining artificials out of the basis where possible; rows with
    // no structural entry are redundant and stay pinned at zero.
    for i in 0..m {
        if t.basis[i] >= first_art {
            t.a[i * width + width - 1] = 0.0;
            if let Some(j) = (0..first_art).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                t.pivot(i, j);
                stats.phase1_pivots += 1;
            }
        }
    }

    // Phase 2.
    t.enterable = first_art;
    t.price(&lp.objective);
    stats.phase2_objectives.push(t.objective());
    let mut objectives = Vec::new();
    let bounded = t.run(&mut stats.phase2_pivots, limit, |z| objectives.push(z))?;
    stats.phase2_objectives.extend(objectives);

    let mut values = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            values[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            values,
            stats,
        });
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&values),
        values,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", -3.0);
        let y = lp.add_var("y", -5.0);
        lp.add_row("a", vec![(x, 1.0)], Relation::Le, 4.0);
        lp.add_row("b", vec![(y, 2.0)], Relation::Le, 12.0);
        lp.add_row("c", vec![(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 36.0).abs() < 1e-9);
        assert!((sol.values[x] - 2.0).abs() < 1e-9);
        assert!((sol.values[y] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 3, y >= 1 -> 4.
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 1.0);
        let y = lp.add_var("y", 2.0);
        lp.add_row("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 3.0);
        lp.add_row("ylo", vec![(y, 1.0)], Relation::Ge, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol.values) < 1e-9);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // min x s.t. -x <= -2  (x >= 2).
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 1.0);
        lp.add_row("r", vec![(x, -1.0)], Relation::Le, -2.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 1.0);
        lp.add_row("lo", vec![(x, 1.0)], Relation::Ge, 5.0);
        lp.add_row("hi", vec![(x, 1.0)], Relation::Le, 3.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LpProblem::new();
        let x = lp.add_var("x", -1.0);
        lp.add_row("lo", vec![(x, 1.0)], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 1.0);
        let y = lp.add_var("y", 1.0);
        lp.add_row("a", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 2.0);
        lp.add_row("b", vec![(x, 2.0), (y, 2.0)], Relation::Eq, 4.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example (Beale); Bland's rule must terminate.
        let mut lp = LpProblem::new();
        let v: Vec<usize> = (0..4).map(|i| lp.add_var(format!("x{i}"), 0.0)).collect();
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(
            "r1",
            vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row(
            "r2",
            vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)],
            Relation::Le,
            0.0,
        );
        lp.add_row("r3", vec![(v[2], 1.0)], Relation::Le, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9);
        let objs = &sol.stats.phase2_objectives;
        assert!(objs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn size_guard() {
        let mut lp = LpProblem::new();
        for i in 0..=MAX_VARIABLES {
            lp.add_var(format!("x{i}"), 0.0);
        }
        assert!(matches!(solve_lp(&lp), Err(Error::LpTooLarge(_))));
    }

    #[test]
    fn dump_format() {
        let mut lp = LpProblem::new();
        let x = lp.add_var("x", 1.0);
        let y = lp.add_var("y", 0.0);
        lp.add_row("r", vec![(x, 1.0), (y, -2.5)], Relation::Ge, 3.0);
        assert_eq!(lp.dump(), "minimize: 1*x\nr: 1*x + -2.5*y >= 3\n");
    }
}
