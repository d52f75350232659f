//! Dense two-phase primal simplex.
//!
//! General bounds are reduced to nonnegative variables (shifts, mirrors,
//! free splits and explicit upper-bound rows). Every row starts with a unit
//! column (slack or artificial), so optimal duals and Farkas multipliers are
//! read off the reduced costs of those columns.

use crate::engine::{SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `minimize c^T x  s.t.  G x (<=|=|>=) h,  lower <= x <= upper`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Mat,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.constraints.nrows() != m || self.senses.len() != m {
            return Err(Error::InvalidInput("LP row data has inconsistent lengths".into()));
        }
        if self.constraints.ncols() != n && m > 0 {
            return Err(Error::InvalidInput("LP constraint matrix has the wrong width".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidInput("LP bounds have the wrong length".into()));
        }
        let finite = self.objective.iter().chain(&self.rhs).chain(self.constraints.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("LP data must be finite".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("variable {j} has empty bounds")));
            }
        }
        Ok(())
    }
}

/// Incremental construction of sparse-row LPs.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a variable and return its index.
    pub fn var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn free_var(&mut self, cost: f64) -> usize {
        self.var(f64::NEG_INFINITY, f64::INFINITY, cost)
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push((coeffs, sense, rhs));
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn build(self) -> LinearProgram {
        let n = self.objective.len();
        let m = self.rows.len();
        let mut g = Mat::zeros(m, n);
        let mut senses = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, (coeffs, sense, b)) in self.rows.into_iter().enumerate() {
            for (j, v) in coeffs {
                g[(i, j)] += v;
            }
            senses.push(sense);
            rhs.push(b);
        }
        LinearProgram {
            objective: self.objective,
            constraints: g,
            senses,
            rhs,
            lower: self.lower,
            upper: self.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables throughout.
    Bland,
    /// Most negative reduced cost; falls back to Bland's rule after a run of
    /// degenerate pivots.
    Dantzig,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub pivot: PivotRule,
    pub max_iter: usize,
    /// Reduced-cost optimality tolerance.
    pub optimality_tol: f64,
    /// Phase-one infeasibility tolerance, relative to `max(1, |h|_inf)`.
    pub feasibility_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            pivot: PivotRule::Dantzig,
            max_iter: 100_000,
            optimality_tol: 1e-10,
            feasibility_tol: 1e-9,
        }
    }
}

/// Farkas certificate of infeasibility over all constraints, with variable
/// bounds treated as rows: `G^T rows + lower + upper = 0`, the multipliers
/// have the sign of their constraint (`>=` rows and lower bounds
/// nonnegative, `<=` rows and upper bounds nonpositive) and
/// `h^T rows + l^T lower + u^T upper > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub rows: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Row multipliers: `<= 0` on `<=` rows, `>= 0` on `>=` rows.
    pub duals: Vec<f64>,
    /// `c - G^T duals`.
    pub reduced_costs: Vec<f64>,
    /// Lagrangian dual value `h^T duals + sum_j min over [l_j, u_j] of d_j x_j`;
    /// a lower bound on the optimum up to dual infeasibility.
    pub dual_objective: f64,
    pub report: SolveReport,
    pub farkas: Option<FarkasCertificate>,
    /// Recession direction along which the objective decreases without bound.
    pub ray: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = l + x'
    Shift(f64, usize),
    /// x = u - x'
    Mirror(f64, usize),
    /// x = x'+ - x'-
    Split(usize, usize),
}

/// Pivoting element threshold.
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_SWITCH: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x (cols + 1)`; last column is the right-hand side.
    data: Vec<f64>,
    /// Reduced costs, last entry is minus the objective value.
    cost_row: Vec<f64>,
    basis: Vec<usize>,
    artificial_from: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let piv = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= piv;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for chunk in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = chunk[c];
            if f != 0.0 {
                for (x, p) in chunk.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                chunk[c] = 0.0;
            }
        }
        let f = self.cost_row[c];
        if f != 0.0 {
            for (x, p) in self.cost_row.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.cost_row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.cols + 1;
        self.cost_row = costs.to_vec();
        self.cost_row.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for j in 0..w {
                    self.cost_row[j] -= cb * self.data[i * w + j];
                }
            }
        }
    }

    fn objective(&self) -> f64 {
        -self.cost_row[self.cols]
    }
}

enum Outcome {
    Optimal,
    Unbounded(usize),
    MaxIter,
}

/// With `bounded` set the objective is known to be bounded below, so a
/// column without a usable pivot is rounding noise and is skipped.
fn run_simplex(t: &mut Tableau, opts: &LpOptions, iterations: &mut usize, bounded: bool) -> Outcome {
    let mut degenerate_run = 0usize;
    let mut skipped: Vec<usize> = Vec::new();
    loop {
        if *iterations >= opts.max_iter {
            return Outcome::MaxIter;
        }
        let use_bland = opts.pivot == PivotRule::Bland || degenerate_run >= DEGENERATE_SWITCH;
        let mut entering = None;
        let mut best = -opts.optimality_tol;
        for j in 0..t.artificial_from {
            if skipped.contains(&j) {
                continue;
            }
            let d = t.cost_row[j];
            if d < best {
                entering = Some(j);
                if use_bland {
                    break;
                }
                best = d;
            }
        }
        let Some(c) = entering else { return Outcome::Optimal };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..t.rows {
            let a = t.at(i, c);
            if a > PIVOT_TOL {
                let ratio = t.rhs(i).max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((r, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.abs().max(1.0);
                        if ratio < best_ratio && !tie || tie && t.basis[i] < t.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best_ratio))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leaving else {
            if bounded {
                skipped.push(c);
                continue;
            }
            return Outcome::Unbounded(c);
        };
        skipped.clear();
        if ratio <= 1e-12 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        t.pivot(r, c);
        *iterations += 1;
    }
}

/// Solve a linear program. Deterministic for a given input and options.
pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.num_rows();

    // Column layout of the standard form.
    let mut maps = Vec::with_capacity(n);
    let mut std_cols = 0usize;
    let mut bound_rows: Vec<(usize, usize, f64)> = Vec::new(); // (var, column, u - l)
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let map = if l.is_finite() {
            if u.is_finite() {
                bound_rows.push((j, std_cols, u - l));
            }
            VarMap::Shift(l, std_cols)
        } else if u.is_finite() {
            VarMap::Mirror(u, std_cols)
        } else {
            std_cols += 1;
            VarMap::Split(std_cols - 1, std_cols)
        };
        std_cols += 1;
        maps.push(map);
    }
    let total_rows = m + bound_rows.len();
    let num_slacks = lp.senses.iter().filter(|s| **s != Sense::Eq).count() + bound_rows.len();

    // Dense standard-form rows before slacks.
    let mut a_std = vec![vec![0.0; std_cols]; total_rows];
    let mut b_std = vec![0.0; total_rows];
    let mut senses = Vec::with_capacity(total_rows);
    let mut c_std = vec![0.0; std_cols];
    let mut obj_const = 0.0;
    for (j, map) in maps.iter().enumerate() {
        let cj = lp.objective[j];
        match *map {
            VarMap::Shift(l, k) => {
                c_std[k] = cj;
                obj_const += cj * l;
            }
            VarMap::Mirror(u, k) => {
                c_std[k] = -cj;
                obj_const += cj * u;
            }
            VarMap::Split(p, q) => {
                c_std[p] = cj;
                c_std[q] = -cj;
            }
        }
    }
    for i in 0..m {
        let mut b = lp.rhs[i];
        for (j, map) in maps.iter().enumerate() {
            let g = lp.constraints[(i, j)];
            if g == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shift(l, k) => {
                    a_std[i][k] = g;
                    b -= g * l;
                }
                VarMap::Mirror(u, k) => {
                    a_std[i][k] = -g;
                    b -= g * u;
                }
                VarMap::Split(p, q) => {
                    a_std[i][p] = g;
                    a_std[i][q] = -g;
                }
            }
        }
        b_std[i] = b;
        senses.push(lp.senses[i]);
    }
    for (r, &(_, k, width)) in bound_rows.iter().enumerate() {
        a_std[m + r][k] = 1.0;
        b_std[m + r] = width;
        senses.push(Sense::Le);
    }

    // Slacks, flips and the starting unit column of each row.
    let cols_before_art = std_cols + num_slacks;
    let mut flip = vec![1.0; total_rows];
    let mut slack_of = vec![usize::MAX; total_rows];
    let mut next_slack = std_cols;
    for i in 0..total_rows {
        if senses[i] != Sense::Eq {
            slack_of[i] = next_slack;
            next_slack += 1;
        }
        if b_std[i] < 0.0 {
            flip[i] = -1.0;
        }
    }
    let mut unit_col = vec![0usize; total_rows];
    let mut artificial_rows = Vec::new();
    for i in 0..total_rows {
        let slack_sign = match senses[i] {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => 0.0,
        } * flip[i];
        if slack_sign > 0.0 {
            unit_col[i] = slack_of[i];
        } else {
            unit_col[i] = cols_before_art + artificial_rows.len();
            artificial_rows.push(i);
        }
    }
    let cols = cols_before_art + artificial_rows.len();
    let w = cols + 1;
    let mut data = vec![0.0; total_rows * w];
    for i in 0..total_rows {
        let row = &mut data[i * w..(i + 1) * w];
        for k in 0..std_cols {
            row[k] = flip[i] * a_std[i][k];
        }
        if slack_of[i] != usize::MAX {
            row[slack_of[i]] = flip[i] * if senses[i] == Sense::Le { 1.0 } else { -1.0 };
        }
        if unit_col[i] >= cols_before_art {
            row[unit_col[i]] = 1.0;
        }
        row[cols] = flip[i] * b_std[i];
    }
    drop(a_std);

    let mut t = Tableau {
        rows: total_rows,
        cols,
        data,
        cost_row: Vec::new(),
        basis: unit_col.clone(),
        artificial_from: cols_before_art,
    };
    let mut iterations = 0usize;
    let scale = lp.rhs.iter().chain(&b_std).fold(1.0f64, |a, b| a.max(b.abs()));

    // Phase one.
    if !artificial_rows.is_empty() {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(cols_before_art) {
            *c = 1.0;
        }
        t.set_costs(&phase1);
        match run_simplex(&mut t, opts, &mut iterations, true) {
            Outcome::MaxIter => return Ok(max_iter_solution(n, m, iterations)),
            Outcome::Unbounded(_) => unreachable!("phase one is bounded below"),
            Outcome::Optimal => {}
        }
        if t.objective() > opts.feasibility_tol * scale {
            let y_std: Vec<f64> = (0..total_rows).map(|i| phase1[unit_col[i]] - t.cost_row[unit_col[i]]).collect();
            let farkas = farkas_from(lp, &maps, &bound_rows, &flip, &y_std);
            return Ok(LpSolution {
                x: vec![f64::NAN; n],
                duals: vec![f64::NAN; m],
                reduced_costs: vec![f64::NAN; n],
                dual_objective: f64::NAN,
                report: SolveReport {
                    status: SolveStatus::Infeasible,
                    objective: f64::NAN,
                    iterations,
                    primal_residual: t.objective(),
                    dual_residual: 0.0,
                    warnings: Vec::new(),
                },
                farkas: Some(farkas),
                ray: None,
            });
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..total_rows {
            if t.basis[r] >= cols_before_art {
                if let Some(c) = (0..cols_before_art).find(|&c| t.at(r, c).abs() > 1e-7) {
                    t.pivot(r, c);
                }
            }
        }
    }

    // Phase two.
    let mut costs = c_std.clone();
    costs.resize(cols, 0.0);
    t.set_costs(&costs);
    let outcome = run_simplex(&mut t, opts, &mut iterations, false);

    let mut x_std = vec![0.0; cols];
    for (i, &b) in t.basis.iter().enumerate() {
        x_std[b] = t.rhs(i);
    }
    let to_original = |xs: &[f64], with_offset: bool| -> Vec<f64> {
        maps.iter()
            .map(|map| match *map {
                VarMap::Shift(l, k) => (if with_offset { l } else { 0.0 }) + xs[k],
                VarMap::Mirror(u, k) => (if with_offset { u } else { 0.0 }) - xs[k],
                VarMap::Split(p, q) => xs[p] - xs[q],
            })
            .collect()
    };
    let x = to_original(&x_std, true);
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    debug_assert!((objective - (t.objective() + obj_const)).abs() <= 1e-6 * objective.abs().max(1.0));

    let y_std: Vec<f64> = (0..total_rows).map(|i| costs[unit_col[i]] - t.cost_row[unit_col[i]]).collect();
    let duals: Vec<f64> = (0..m).map(|i| flip[i] * y_std[i]).collect();
    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| lp.objective[j] - (0..m).map(|i| lp.constraints[(i, j)] * duals[i]).sum::<f64>())
        .collect();
    let primal_residual = (0..m)
        .map(|i| {
            let gx: f64 = (0..n).map(|j| lp.constraints[(i, j)] * x[j]).sum();
            match lp.senses[i] {
                Sense::Le => (gx - lp.rhs[i]).max(0.0),
                Sense::Ge => (lp.rhs[i] - gx).max(0.0),
                Sense::Eq => (gx - lp.rhs[i]).abs(),
            }
        })
        .chain((0..n).map(|j| (lp.lower[j] - x[j]).max(0.0).max(x[j] - lp.upper[j])))
        .fold(0.0, f64::max);

    let (status, ray) = match outcome {
        Outcome::Optimal => (SolveStatus::Optimal, None),
        Outcome::MaxIter => (SolveStatus::MaxIter, None),
        Outcome::Unbounded(c) => {
            let mut d = vec![0.0; cols];
            d[c] = 1.0;
            for (i, &b) in t.basis.iter().enumerate() {
                d[b] = -t.at(i, c);
            }
            (SolveStatus::Unbounded, Some(to_original(&d, false)))
        }
    };
    let dual_residual = reduced_costs
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let at_lower = lp.lower[j].is_finite() && (x[j] - lp.lower[j]).abs() <= 1e-9 * x[j].abs().max(1.0);
            let at_upper = lp.upper[j].is_finite() && (x[j] - lp.upper[j]).abs() <= 1e-9 * x[j].abs().max(1.0);
            match (at_lower, at_upper) {
                (true, true) => 0.0,
                (true, false) => (-d).max(0.0),
                (false, true) => d.max(0.0),
                (false, false) => d.abs(),
            }
        })
        .fold(0.0, f64::max);
    let dual_objective = lp.rhs.iter().zip(&duals).map(|(h, y)| h * y).sum::<f64>()
        + reduced_costs
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                if d > 0.0 && lp.lower[j].is_finite() {
                    d * lp.lower[j]
                } else if d < 0.0 && lp.upper[j].is_finite() {
                    d * lp.upper[j]
                } else {
                    0.0
                }
            })
            .sum::<f64>();
    Ok(LpSolution {
        x,
        duals,
        reduced_costs,
        dual_objective,
        report: SolveReport {
            status,
            objective: if status == SolveStatus::Unbounded { f64::NEG_INFINITY } else { objective },
            iterations,
            primal_residual,
            dual_residual,
            warnings: Vec::new(),
        },
        farkas: None,
        ray,
    })
}

fn max_iter_solution(n: usize, m: usize, iterations: usize) -> LpSolution {
    LpSolution {
        x: vec![f64::NAN; n],
        duals: vec![f64::NAN; m],
        reduced_costs: vec![f64::NAN; n],
        dual_objective: f64::NAN,
        report: SolveReport {
            status: SolveStatus::MaxIter,
            objective: f64::NAN,
            iterations,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            warnings: vec!["iteration cap reached in phase one".into()],
        },
        farkas: None,
        ray: None,
    }
}

fn farkas_from(
    lp: &LinearProgram,
    maps: &[VarMap],
    bound_rows: &[(usize, usize, f64)],
    flip: &[f64],
    y_std: &[f64],
) -> FarkasCertificate {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let rows: Vec<f64> = (0..m).map(|i| flip[i] * y_std[i]).collect();
    let mut upper = vec![0.0; n];
    for (r, &(j, _, _)) in bound_rows.iter().enumerate() {
        upper[j] = flip[m + r] * y_std[m + r];
    }
    let gty: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| lp.constraints[(i, j)] * rows[i]).sum::<f64>())
        .collect();
    let mut lower = vec![0.0; n];
    for (j, map) in maps.iter().enumerate() {
        let residual = -(gty[j] + upper[j]);
        match map {
            VarMap::Shift(..) => lower[j] = residual,
            VarMap::Mirror(..) => upper[j] = -gty[j],
            VarMap::Split(..) => {}
        }
    }
    FarkasCertificate { rows, lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use crate::structures::combinations;
    use crate::trial_rng;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    fn solve(lp: &LinearProgram) -> LpSolution {
        solve_lp(lp, &LpOptions::default()).unwrap()
    }

    #[test]
    fn one_variable_lp() {
        let mut b = LpBuilder::new();
        let x = b.var(0.0, f64::INFINITY, -1.0);
        b.row(vec![(x, 1.0)], Sense::Le, 1.0);
        let s = solve(&b.build());
        assert_eq!(s.report.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.report.objective + 1.0).abs() < 1e-12);
        assert!((s.duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_lp_carries_farkas_certificate() {
        let mut b = LpBuilder::new();
        let x = b.var(0.0, f64::INFINITY, 0.0);
        b.row(vec![(x, 1.0)], Sense::Le, -1.0);
        let lp = b.build();
        let s = solve(&lp);
        assert_eq!(s.report.status, SolveStatus::Infeasible);
        check_farkas(&lp, s.farkas.as_ref().unwrap());
    }

    #[test]
    fn infeasible_with_bounds_and_equalities() {
        // x + y = 3 with x in [0,1], y in [-inf, 1].
        let mut b = LpBuilder::new();
        let x = b.var(0.0, 1.0, 1.0);
        let y = b.var(f64::NEG_INFINITY, 1.0, 1.0);
        b.row(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 3.0);
        let lp = b.build();
        let s = solve(&lp);
        assert_eq!(s.report.status, SolveStatus::Infeasible);
        check_farkas(&lp, s.farkas.as_ref().unwrap());
    }

    #[test]
    fn unbounded_lp_returns_ray() {
        let mut b = LpBuilder::new();
        let x = b.free_var(-1.0);
        let y = b.var(0.0, f64::INFINITY, 0.0);
        b.row(vec![(x, 1.0), (y, -1.0)], Sense::Le, 2.0);
        let lp = b.build();
        let s = solve(&lp);
        assert_eq!(s.report.status, SolveStatus::Unbounded);
        let ray = s.ray.unwrap();
        let cd: f64 = lp.objective.iter().zip(&ray).map(|(c, d)| c * d).sum();
        assert!(cd < 0.0);
        assert!(ray[0] - ray[1] <= 1e-12 && ray[1] >= -1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic instance on which the textbook rule cycles.
        let mut b = LpBuilder::new();
        let v: Vec<usize> = [-0.75, 150.0, -0.02, 6.0].iter().map(|&c| b.var(0.0, f64::INFINITY, c)).collect();
        b.row(vec![(v[0], 0.25), (v[1], -60.0), (v[2], -0.04), (v[3], 9.0)], Sense::Le, 0.0);
        b.row(vec![(v[0], 0.5), (v[1], -90.0), (v[2], -0.02), (v[3], 3.0)], Sense::Le, 0.0);
        b.row(vec![(v[2], 1.0)], Sense::Le, 1.0);
        let lp = b.build();
        for pivot in [PivotRule::Bland, PivotRule::Dantzig] {
            let s = solve_lp(&lp, &LpOptions { pivot, ..LpOptions::default() }).unwrap();
            assert_eq!(s.report.status, SolveStatus::Optimal);
            assert!((s.report.objective + 0.05).abs() < 1e-10, "{pivot:?}: {}", s.report.objective);
        }
    }

    /// Brute-force optimum of `min c^T x, Ax = b, x >= 0` over all bases.
    fn vertex_enumeration(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
        let (m, n) = a.shape();
        let mut best: Option<f64> = None;
        for cols in combinations(n, m) {
            let basis = DMatrix::from_fn(m, m, |i, k| a[(i, cols[k])]);
            let Some(lu) = basis.clone().lu().try_inverse() else { continue };
            if basis.determinant().abs() < 1e-10 {
                continue;
            }
            let xb = lu * b;
            if xb.iter().any(|v| *v < -1e-9) {
                continue;
            }
            let val: f64 = cols.iter().zip(xb.iter()).map(|(&j, v)| c[j] * v).sum();
            best = Some(best.map_or(val, |bv: f64| bv.min(val)));
        }
        best
    }

    pub(crate) fn check_kkt(lp: &LinearProgram, s: &LpSolution, tol: f64) {
        let n = lp.num_vars();
        for (i, &y) in s.duals.iter().enumerate() {
            let gx: f64 = (0..n).map(|j| lp.constraints[(i, j)] * s.x[j]).sum();
            let slack = gx - lp.rhs[i];
            match lp.senses[i] {
                Sense::Le => assert!(slack <= tol && y <= tol),
                Sense::Ge => assert!(slack >= -tol && y >= -tol),
                Sense::Eq => assert!(slack.abs() <= tol),
            }
            assert!((y * slack).abs() <= tol, "row {i}: y = {y}, slack = {slack}");
        }
        for j in 0..n {
            let d = s.reduced_costs[j];
            let lo = (s.x[j] - lp.lower[j]).abs();
            let hi = (lp.upper[j] - s.x[j]).abs();
            if d > tol {
                assert!(lo <= tol, "var {j} positive reduced cost away from its lower bound");
            } else if d < -tol {
                assert!(hi <= tol, "var {j} negative reduced cost away from its upper bound");
            }
        }
    }

    fn check_farkas(lp: &LinearProgram, f: &FarkasCertificate) {
        let n = lp.num_vars();
        for j in 0..n {
            let s: f64 = (0..lp.num_rows()).map(|i| lp.constraints[(i, j)] * f.rows[i]).sum::<f64>()
                + f.lower[j]
                + f.upper[j];
            assert!(s.abs() < 1e-9);
            assert!(f.lower[j] >= -1e-12 && f.upper[j] <= 1e-12);
            if !lp.lower[j].is_finite() {
                assert_eq!(f.lower[j], 0.0);
            }
            if !lp.upper[j].is_finite() {
                assert_eq!(f.upper[j], 0.0);
            }
        }
        for (i, s) in lp.senses.iter().enumerate() {
            match s {
                Sense::Le => assert!(f.rows[i] <= 1e-12),
                Sense::Ge => assert!(f.rows[i] >= -1e-12),
                Sense::Eq => {}
            }
        }
        let bound = |b: f64, y: f64| if y == 0.0 { 0.0 } else { b * y };
        let value: f64 = lp.rhs.iter().zip(&f.rows).map(|(h, y)| h * y).sum::<f64>()
            + lp.lower.iter().zip(&f.lower).map(|(&l, &y)| bound(l, y)).sum::<f64>()
            + lp.upper.iter().zip(&f.upper).map(|(&u, &y)| bound(u, y)).sum::<f64>();
        assert!(value > 1e-9, "Farkas value {value}");
    }

    #[test]
    fn random_inequality_lps_match_vertex_enumeration() {
        // min c^T x, G x <= h, x >= 0 with G 6 x 10 becomes [G I] in standard form.
        for trial in 0..30 {
            let mut rng = trial_rng(77, trial);
            let g = gaussian_matrix(&mut rng, 6, 10);
            let x0 = DVector::from_fn(10, |_, _| rng.random_range(0.0..1.0));
            let h = &g * &x0 + DVector::from_fn(6, |_, _| rng.random_range(0.0..1.0));
            let y0 = DVector::from_fn(6, |_, _| -rng.random_range(0.0..1.0));
            let c = g.transpose() * &y0 + DVector::from_fn(10, |_, _| rng.random_range(0.0..1.0));
            let mut b = LpBuilder::new();
            for j in 0..10 {
                b.var(0.0, f64::INFINITY, c[j]);
            }
            for i in 0..6 {
                b.row((0..10).map(|j| (j, g[(i, j)])).collect(), Sense::Le, h[i]);
            }
            let lp = b.build();
            let s = solve(&lp);
            let a_std = DMatrix::from_fn(6, 16, |i, j| if j < 10 { g[(i, j)] } else if j - 10 == i { 1.0 } else { 0.0 });
            let c_std = DVector::from_fn(16, |j, _| if j < 10 { c[j] } else { 0.0 });
            let oracle = vertex_enumeration(&a_std, &h, &c_std).unwrap();
            assert_eq!(s.report.status, SolveStatus::Optimal);
            assert!((s.report.objective - oracle).abs() <= 1e-8 * oracle.abs().max(1.0));
            assert!((s.dual_objective - oracle).abs() <= 1e-8 * oracle.abs().max(1.0));
            check_kkt(&lp, &s, 1e-8);
        }
    }

    #[test]
    fn general_bounds_and_senses() {
        // min x - 2y + z, x in [-1, 2], y <= 3 (free below), z free,
        // x + y >= 1, y - z = 0.5, x + z <= 4.
        let mut b = LpBuilder::new();
        let x = b.var(-1.0, 2.0, 1.0);
        let y = b.var(f64::NEG_INFINITY, 3.0, -2.0);
        let z = b.free_var(1.0);
        b.row(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 1.0);
        b.row(vec![(y, 1.0), (z, -1.0)], Sense::Eq, 0.5);
        b.row(vec![(x, 1.0), (z, 1.0)], Sense::Le, 4.0);
        let lp = b.build();
        for pivot in [PivotRule::Bland, PivotRule::Dantzig] {
            let s = solve_lp(&lp, &LpOptions { pivot, ..LpOptions::default() }).unwrap();
            assert_eq!(s.report.status, SolveStatus::Optimal);
            // y = 3, z = 2.5, x = -1: objective -1 - 6 + 2.5.
            assert!((s.report.objective + 4.5).abs() < 1e-10);
            check_kkt(&lp, &s, 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = trial_rng(1, 0);
        let g = gaussian_matrix(&mut rng, 5, 8);
        let mut b = LpBuilder::new();
        for j in 0..8 {
            b.var(-1.0, 1.0, (j as f64).sin());
        }
        for i in 0..5 {
            b.row((0..8).map(|j| (j, g[(i, j)])).collect(), Sense::Le, 0.3);
        }
        let lp = b.build();
        let a = solve(&lp);
        let bb = solve(&lp);
        assert_eq!(a.x, bb.x);
        assert_eq!(a.report, bb.report);
    }
}
