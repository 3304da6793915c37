//! Dense bounded-variable primal simplex.
//!
//! Variables need a finite lower bound; upper bounds may be infinite and are
//! handled implicitly (nonbasic variables sit at either bound). Phase 1
//! minimizes the sum of artificial variables; phase 2 optimizes the real
//! objective with artificials fixed at zero. Pricing is Dantzig's rule until
//! a run of degenerate pivots, after which the phase finishes under Bland's
//! rule, which cannot cycle.

use std::fmt::Write as _;

use thiserror::Error;

pub const INF: f64 = f64::INFINITY;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_SWITCH: usize = 50;
const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("residual check failed (max violation {0:e})")]
    NumericalInstability(f64),
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("variable {0} has no finite lower bound")]
    UnboundedBelow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.names.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), terms, cmp, rhs });
        self.constraints.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn cost(&self, var: usize) -> f64 {
        self.objective[var]
    }

    pub fn var_name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any bound or constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let scale = 1.0 + c.rhs.abs();
            let v = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v / scale);
        }
        worst
    }

    /// CPLEX LP text format.
    pub fn to_lp_format(&self, integer: &[usize]) -> String {
        let mut s = String::new();
        let sym = |name: &str| name.replace(['|', ',', '(', ')', ' ', '{', '}', '[', ']'], "_");
        let linear = |terms: &[(usize, f64)]| {
            let mut out = String::new();
            for (k, &(j, a)) in terms.iter().enumerate() {
                let sign = if a < 0.0 { "-" } else if k == 0 { "" } else { "+" };
                let _ = write!(out, " {sign} {} {}", a.abs(), sym(&self.names[j]));
            }
            if out.is_empty() {
                out.push_str(" 0");
            }
            out
        };
        s.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let obj: Vec<(usize, f64)> =
            self.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c)).collect();
        let _ = writeln!(s, " obj:{}", linear(&obj));
        s.push_str("Subject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, " r{i}_{}:{} {op} {}", sym(&c.name), linear(&c.terms), c.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let hi = if self.upper[j].is_finite() { self.upper[j].to_string() } else { "+inf".into() };
            let _ = writeln!(s, " {} <= {} <= {hi}", self.lower[j], sym(&self.names[j]));
        }
        if !integer.is_empty() {
            s.push_str("General\n");
            for &j in integer {
                let _ = writeln!(s, " {}", sym(&self.names[j]));
            }
        }
        s.push_str("End\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self { status, values: Vec::new(), objective: f64::NAN }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Position of each column in the basis, if basic.
    position: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    reduced: Vec<f64>,
    /// Columns allowed to enter the basis.
    eligible: Vec<bool>,
    iterations: usize,
    limit: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn price(&mut self, cost: &[f64]) {
        let ncols = self.upper.len();
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate().take(ncols) {
                    *dj -= cb * self.rows[i][j];
                }
            }
        }
        self.reduced = d;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.upper.len() {
            if !self.eligible[j] || self.position[j].is_some() {
                continue;
            }
            let d = self.reduced[j];
            let improving = if self.at_upper[j] { d > COST_TOL } else { d < -COST_TOL && self.upper[j] > 0.0 };
            if !improving {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, b)| d.abs() > b) {
                best = Some((j, d.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    fn run(&mut self, bland_only: bool) -> Result<PhaseEnd, LpError> {
        let mut degenerate_run = 0;
        let mut bland = bland_only;
        loop {
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(LpError::IterationLimit);
            }
            let Some(q) = self.entering(bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let sigma = if self.at_upper[q] { -1.0 } else { 1.0 };

            // Ratio test.
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = (f64::NEG_INFINITY, usize::MAX);
            for i in 0..self.rows.len() {
                let a = self.rows[i][q];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -sigma * a;
                let b = self.basis[i];
                let (limit, to_upper) = if rate < 0.0 {
                    (self.beta[i].max(0.0) / -rate, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let key = (a.abs(), b);
                let tie_better = match leave {
                    Some(_) if bland => key.1 < leave_key.1,
                    Some(_) => key.0 > leave_key.0 || (key.0 == leave_key.0 && key.1 < leave_key.1),
                    None => false,
                };
                if limit < theta - 1e-12 || (limit <= theta + 1e-12 && tie_better) {
                    theta = limit;
                    leave = Some((i, to_upper));
                    leave_key = key;
                }
            }
            if leave.is_none() && !theta.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }

            if theta <= FEAS_TOL {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            for i in 0..self.rows.len() {
                let a = self.rows[i][q];
                if a != 0.0 {
                    self.beta[i] -= sigma * a * theta;
                }
            }
            let entering_value = if self.at_upper[q] { self.upper[q] } else { 0.0 } + sigma * theta;

            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, q);
                    self.position[leaving] = None;
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                    self.basis[r] = q;
                    self.position[q] = Some(r);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.rows[r][q];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let nz: Vec<usize> = (0..self.rows[r].len()).filter(|&j| self.rows[r][j] != 0.0).collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &j in &nz {
                self.reduced[j] -= f * pivot_row[j];
            }
            self.reduced[q] = 0.0;
        }
        self.rows[r] = pivot_row;
    }
}

/// Solves `lp` to optimality, or reports infeasibility/unboundedness.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    for j in 0..n {
        if !lp.lower[j].is_finite() {
            return Err(LpError::UnboundedBelow(lp.names[j].clone()));
        }
        if lp.lower[j] > lp.upper[j] + FEAS_TOL {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
    }
    let m = lp.num_constraints();

    // Column layout: structural | slack/surplus | artificial.
    let mut extra = Vec::new(); // (row, coefficient) for slack/surplus columns
    let mut artificial_rows = Vec::new();
    let mut rows_cmp = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for c in &lp.constraints {
        let shifted: f64 = c.rhs - c.terms.iter().map(|&(j, a)| a * lp.lower[j]).sum::<f64>();
        let (cmp, b, flip) = if shifted < 0.0 {
            let cmp = match c.cmp {
                Cmp::Le => Cmp::Ge,
                Cmp::Ge => Cmp::Le,
                Cmp::Eq => Cmp::Eq,
            };
            (cmp, -shifted, true)
        } else {
            (c.cmp, shifted, false)
        };
        rows_cmp.push((cmp, flip));
        rhs.push(b);
    }
    for (i, &(cmp, _)) in rows_cmp.iter().enumerate() {
        match cmp {
            Cmp::Le => extra.push((i, 1.0)),
            Cmp::Ge => {
                extra.push((i, -1.0));
                artificial_rows.push(i);
            }
            Cmp::Eq => artificial_rows.push(i),
        }
    }
    let ncols = n + extra.len() + artificial_rows.len();
    let mut rows = vec![vec![0.0; ncols]; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        let s = if rows_cmp[i].1 { -1.0 } else { 1.0 };
        for &(j, a) in &c.terms {
            rows[i][j] += s * a;
        }
    }
    let mut basis = vec![usize::MAX; m];
    for (k, &(i, a)) in extra.iter().enumerate() {
        rows[i][n + k] = a;
        if a > 0.0 {
            basis[i] = n + k;
        }
    }
    let art0 = n + extra.len();
    for (k, &i) in artificial_rows.iter().enumerate() {
        rows[i][art0 + k] = 1.0;
        basis[i] = art0 + k;
    }
    let mut upper = vec![INF; ncols];
    for j in 0..n {
        upper[j] = lp.upper[j] - lp.lower[j];
    }
    let mut position = vec![None; ncols];
    for (i, &b) in basis.iter().enumerate() {
        position[b] = Some(i);
    }
    let mut tab = Tableau {
        rows,
        beta: rhs,
        basis,
        position,
        at_upper: vec![false; ncols],
        upper,
        reduced: Vec::new(),
        eligible: vec![true; ncols],
        iterations: 0,
        limit: 50_000 + 50 * (m + ncols),
    };

    if !artificial_rows.is_empty() {
        let mut cost = vec![0.0; ncols];
        for c in cost.iter_mut().skip(art0) {
            *c = 1.0;
        }
        tab.price(&cost);
        tab.run(false)?;
        let infeasibility: f64 =
            tab.basis.iter().zip(&tab.beta).filter(|(&b, _)| b >= art0).map(|(_, &v)| v).sum();
        if infeasibility > 1e-7 {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
    }
    for j in art0..ncols {
        tab.upper[j] = 0.0;
        tab.eligible[j] = false;
    }
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    tab.price(&cost);
    if let PhaseEnd::Unbounded = tab.run(false)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let mut values = vec![0.0; n];
    for j in 0..n {
        let shifted = match tab.position[j] {
            Some(i) => tab.beta[i],
            None if tab.at_upper[j] => tab.upper[j],
            None => 0.0,
        };
        values[j] = lp.lower[j] + shifted;
        // snap tiny bound overshoots
        if values[j] < lp.lower[j] {
            values[j] = lp.lower[j];
        }
        if values[j] > lp.upper[j] {
            values[j] = lp.upper[j];
        }
    }
    let violation = lp.max_violation(&values);
    if violation > RESIDUAL_TOL {
        return Err(LpError::NumericalInstability(violation));
    }
    let objective = lp.objective_value(&values);
    Ok(LpSolution { status: LpStatus::Optimal, values, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_two_variables() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, INF, 1.0);
        let y = lp.add_var("y", 0.0, INF, 1.0);
        lp.add_constraint("cx", vec![(x, 1.0)], Cmp::Le, 1.0);
        lp.add_constraint("cy", vec![(y, 1.0)], Cmp::Le, 2.0);
        let sol = simplex_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn diamond_max_flow_is_two() {
        // s -> a -> t, s -> b -> t, a -> b; unit capacities
        let arcs = [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)];
        let mut lp = LinearProgram::new(Sense::Maximize);
        let f: Vec<usize> = arcs.iter().map(|(u, v)| lp.add_var(format!("f{u}{v}"), 0.0, 1.0, 0.0)).collect();
        for (k, &(u, _)) in arcs.iter().enumerate() {
            if u == 0 {
                lp.set_cost(f[k], 1.0);
            }
        }
        for node in 1..3 {
            let mut terms = Vec::new();
            for (k, &(u, v)) in arcs.iter().enumerate() {
                if v == node {
                    terms.push((f[k], 1.0));
                }
                if u == node {
                    terms.push((f[k], -1.0));
                }
            }
            lp.add_constraint(format!("cons{node}"), terms, Cmp::Eq, 0.0);
        }
        let sol = simplex_solve(&lp).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 0.0, INF, 1.0);
        lp.add_constraint("le", vec![(x, 1.0)], Cmp::Le, 0.0);
        lp.add_constraint("ge", vec![(x, 1.0)], Cmp::Ge, 1.0);
        assert_eq!(simplex_solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 0.0, INF, 1.0);
        let y = lp.add_var("y", 0.0, INF, 0.0);
        lp.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Cmp::Le, 1.0);
        assert_eq!(simplex_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn shifted_bounds_and_equalities() {
        // min x + 2y, x in [1, 4], y in [-2, 3], x + y = 2  ->  x = 4, y = -2
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x", 1.0, 4.0, 1.0);
        let y = lp.add_var("y", -2.0, 3.0, 2.0);
        lp.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Cmp::Eq, 2.0);
        let sol = simplex_solve(&lp).unwrap();
        assert!((sol.values[x] - 4.0).abs() < 1e-9);
        assert!((sol.values[y] + 2.0).abs() < 1e-9);
        assert!((sol.objective - 0.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example (cycles under naive Dantzig pricing).
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| lp.add_var(format!("x{i}"), 0.0, INF, c))
            .collect();
        lp.add_constraint("r1", vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Cmp::Le, 0.0);
        lp.add_constraint("r2", vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Cmp::Le, 0.0);
        lp.add_constraint("r3", vec![(x[2], 1.0)], Cmp::Le, 1.0);
        let sol = simplex_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn lp_format_lists_sections() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var("x|a", 0.0, 1.0, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Cmp::Ge, 0.5);
        let text = lp.to_lp_format(&[x]);
        for section in ["Minimize", "Subject To", "Bounds", "General", "End"] {
            assert!(text.contains(section), "{section}");
        }
        assert!(text.contains("x_a"));
    }
}
