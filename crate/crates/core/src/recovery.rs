//! Norm-minimization recovery, its penalized variant and the closed-form
//! error bounds driven by a `(gamma, beta)` certificate.
//!
//! Both programs are solved as linear programs when the structure norm and
//! `phi` are polyhedral (plain, or group with `l1`/`linf` blocks, and
//! `phi` in `{l1, linf}`), and by the splitting solver otherwise. The
//! near-optimality `delta` is measured as the gap to a dual lower bound and
//! the near-feasibility `delta_phi` as the excess of `phi(Ax - y)` over `eps`.

use serde::{Deserialize, Serialize};

use crate::engine::lp::{solve_lp, LpBuilder, LpOptions, Sense};
use crate::engine::split::{solve_split, ProxTerm, SplitOptions, SplitProblem};
use crate::engine::{SolveReport, SolveStatus};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::norms::{self, NormTag, VectorNorm};
use crate::structures::{RepresentationMap, SparsityStructure};

#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    pub a: Mat,
    pub b: RepresentationMap,
    pub y: Vector,
    pub phi: NormTag,
    pub epsilon: f64,
}

impl RecoveryProblem {
    fn validate(&self, structure: &SparsityStructure) -> Result<VectorNorm> {
        check_dim("sensing matrix columns", structure.dim_x(), self.a.ncols())?;
        check_dim("observation length", self.a.nrows(), self.y.len())?;
        check_dim("representation rows", structure.dim_e(), self.b.matrix.nrows())?;
        check_dim("representation columns", structure.dim_x(), self.b.matrix.ncols())?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        if self.a.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sensing data must be finite".into()));
        }
        vector_phi(self.phi)
    }
}

/// The noise norm acts on `R^m`, so only the vector norms apply.
pub fn vector_phi(phi: NormTag) -> Result<VectorNorm> {
    match phi {
        NormTag::L1 => Ok(VectorNorm::L1),
        NormTag::L2 => Ok(VectorNorm::L2),
        NormTag::Linf => Ok(VectorNorm::Linf),
        other => Err(Error::Unsupported(format!("phi = {other:?} is not a norm on the observation space"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// LP when the program is polyhedral, splitting otherwise.
    #[default]
    Auto,
    Lp,
    Split,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RecoveryOptions {
    pub backend: Backend,
    pub lp: LpOptions,
    pub split: SplitOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    /// `B x_hat`, recomputed from `x_hat`.
    pub w_hat: Vec<f64>,
    pub objective: f64,
    pub delta: f64,
    pub delta_phi: f64,
    pub backend: Backend,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Regular,
    Penalized(f64),
}

/// `min ||Bu||  s.t.  phi(Au - y) <= eps`.
pub fn recover_regular(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    options: &RecoveryOptions,
) -> Result<RecoveryResult> {
    recover(problem, structure, Mode::Regular, options)
}

/// `min ||Bu|| + lambda phi(Au - y)`; `problem.epsilon` is ignored.
pub fn recover_penalized(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    lambda: f64,
    options: &RecoveryOptions,
) -> Result<RecoveryResult> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be positive and finite, got {lambda}")));
    }
    recover(problem, structure, Mode::Penalized(lambda), options)
}

pub(crate) fn is_polyhedral(structure: &SparsityStructure, phi: VectorNorm) -> bool {
    let norm_ok = match structure {
        SparsityStructure::Plain { .. } => true,
        SparsityStructure::Group(g) => g.block_norms.iter().all(|n| *n != VectorNorm::L2),
        SparsityStructure::LowRank(_) => false,
    };
    norm_ok && phi != VectorNorm::L2
}

fn recover(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    mode: Mode,
    options: &RecoveryOptions,
) -> Result<RecoveryResult> {
    let phi = problem.validate(structure)?;
    let polyhedral = is_polyhedral(structure, phi);
    let backend = match options.backend {
        Backend::Auto if polyhedral => Backend::Lp,
        Backend::Auto => Backend::Split,
        Backend::Lp if !polyhedral => {
            return Err(Error::Unsupported(
                "the LP backend needs a polyhedral structure norm and phi in {l1, linf}".into(),
            ))
        }
        other => other,
    };
    let (x, delta, report) = match backend {
        Backend::Lp => recover_lp(problem, structure, phi, mode, &options.lp)?,
        _ => recover_split(problem, structure, phi, mode, &options.split)?,
    };
    let w = problem.b.apply(&x);
    let residual = phi.eval((&problem.a * &x - &problem.y).as_slice());
    let norm_w = norms::structure_norm(structure, &w, false);
    let (objective, delta_phi) = match mode {
        Mode::Regular => (norm_w, (residual - problem.epsilon).max(0.0)),
        Mode::Penalized(lambda) => (norm_w + lambda * residual, 0.0),
    };
    Ok(RecoveryResult {
        x_hat: x.as_slice().to_vec(),
        w_hat: w.as_slice().to_vec(),
        objective,
        delta,
        delta_phi,
        backend,
        report,
    })
}

/// Add epigraph variables (with the given cost each) whose sum bounds
/// `||B u||` from above, tightly at the optimum. Requires a polyhedral
/// structure norm.
pub(crate) fn norm_epigraph(lp: &mut LpBuilder, u: &[usize], bm: &Mat, structure: &SparsityStructure, cost: f64) -> Vec<usize> {
    let blocks: Vec<(std::ops::Range<usize>, VectorNorm)> = match structure {
        SparsityStructure::Plain { n } => vec![(0..*n, VectorNorm::L1)],
        SparsityStructure::Group(g) => (0..g.num_blocks()).map(|l| (g.block_range(l), g.block_norms[l])).collect(),
        SparsityStructure::LowRank(_) => unreachable!("low-rank norms are not polyhedral"),
    };
    let mut vars = Vec::new();
    for (range, norm) in blocks {
        let rows: Vec<usize> = range.collect();
        match norm {
            VectorNorm::L1 => {
                for &i in &rows {
                    let t = lp.var(0.0, f64::INFINITY, cost);
                    abs_rows(lp, u, bm, &[i], &[0.0], t);
                    vars.push(t);
                }
            }
            VectorNorm::Linf => {
                let t = lp.var(0.0, f64::INFINITY, cost);
                abs_rows(lp, u, bm, &rows, &vec![0.0; rows.len()], t);
                vars.push(t);
            }
            VectorNorm::L2 => unreachable!("l2 blocks are not polyhedral"),
        }
    }
    vars
}

/// Add the rows `|M_i . u - c_i| <= t` for each listed row `i`.
pub(crate) fn abs_rows(b: &mut LpBuilder, u: &[usize], m: &Mat, rows: &[usize], c: &[f64], t: usize) {
    for (&i, &ci) in rows.iter().zip(c) {
        let coeffs: Vec<(usize, f64)> = u.iter().enumerate().filter(|(j, _)| m[(i, *j)] != 0.0).map(|(j, &v)| (v, m[(i, j)])).collect();
        let mut plus = coeffs.clone();
        plus.push((t, -1.0));
        b.row(plus, Sense::Le, ci);
        let mut minus: Vec<(usize, f64)> = coeffs.into_iter().map(|(v, a)| (v, -a)).collect();
        minus.push((t, -1.0));
        b.row(minus, Sense::Le, -ci);
    }
}

fn recover_lp(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    phi: VectorNorm,
    mode: Mode,
    opts: &LpOptions,
) -> Result<(Vector, f64, SolveReport)> {
    let (m, n) = problem.a.shape();
    let bm = &problem.b.matrix;
    let mut lp = LpBuilder::new();
    let u: Vec<usize> = (0..n).map(|_| lp.free_var(0.0)).collect();

    norm_epigraph(&mut lp, &u, bm, structure, 1.0);

    // Residual term.
    let all_rows: Vec<usize> = (0..m).collect();
    let y = problem.y.as_slice();
    match (mode, phi) {
        (Mode::Regular, _) if problem.epsilon == 0.0 => {
            for i in 0..m {
                let coeffs = (0..n).filter(|&j| problem.a[(i, j)] != 0.0).map(|j| (u[j], problem.a[(i, j)])).collect();
                lp.row(coeffs, Sense::Eq, y[i]);
            }
        }
        (Mode::Regular, VectorNorm::Linf) => {
            let eps = problem.epsilon;
            for i in 0..m {
                let coeffs: Vec<(usize, f64)> =
                    (0..n).filter(|&j| problem.a[(i, j)] != 0.0).map(|j| (u[j], problem.a[(i, j)])).collect();
                lp.row(coeffs.clone(), Sense::Le, y[i] + eps);
                lp.row(coeffs, Sense::Ge, y[i] - eps);
            }
        }
        (Mode::Regular, VectorNorm::L1) => {
            let s: Vec<usize> = (0..m).map(|_| lp.var(0.0, f64::INFINITY, 0.0)).collect();
            for i in 0..m {
                abs_rows(&mut lp, &u, &problem.a, &[i], &y[i..=i], s[i]);
            }
            lp.row(s.iter().map(|&v| (v, 1.0)).collect(), Sense::Le, problem.epsilon);
        }
        (Mode::Penalized(lambda), VectorNorm::L1) => {
            for i in 0..m {
                let s = lp.var(0.0, f64::INFINITY, lambda);
                abs_rows(&mut lp, &u, &problem.a, &[i], &y[i..=i], s);
            }
        }
        (Mode::Penalized(lambda), VectorNorm::Linf) => {
            let tau = lp.var(0.0, f64::INFINITY, lambda);
            abs_rows(&mut lp, &u, &problem.a, &all_rows, y, tau);
        }
        (_, VectorNorm::L2) => unreachable!("l2 residuals are not polyhedral"),
    }

    let sol = solve_lp(&lp.build(), opts)?;
    match sol.report.status {
        SolveStatus::Infeasible => return Err(Error::Infeasible),
        SolveStatus::Unbounded => unreachable!("norm objectives are bounded below"),
        _ => {}
    }
    let x = Vector::from_iterator(n, u.iter().map(|&j| sol.x[j]));
    let delta = if sol.report.status == SolveStatus::Optimal {
        (sol.report.objective - sol.dual_objective).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok((x, delta, sol.report))
}

/// `min_u phi(Au - y)`, used to detect infeasible regular instances before
/// handing them to the splitting solver, which cannot certify infeasibility.
pub fn min_residual(a: &Mat, y: &Vector, phi: VectorNorm) -> Result<f64> {
    let (m, n) = a.shape();
    match phi {
        VectorNorm::L2 => {
            let fit = a * crate::linalg::pinv(a) * y;
            Ok((y - fit).norm())
        }
        _ => {
            let mut lp = LpBuilder::new();
            let u: Vec<usize> = (0..n).map(|_| lp.free_var(0.0)).collect();
            let rows: Vec<usize> = (0..m).collect();
            if phi == VectorNorm::Linf {
                let t = lp.var(0.0, f64::INFINITY, 1.0);
                abs_rows(&mut lp, &u, a, &rows, y.as_slice(), t);
            } else {
                for i in 0..m {
                    let t = lp.var(0.0, f64::INFINITY, 1.0);
                    abs_rows(&mut lp, &u, a, &[i], &y.as_slice()[i..=i], t);
                }
            }
            let sol = solve_lp(&lp.build(), &LpOptions::default())?;
            Ok(sol.report.objective.max(0.0))
        }
    }
}

fn recover_split(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    phi: VectorNorm,
    mode: Mode,
    opts: &SplitOptions,
) -> Result<(Vector, f64, SolveReport)> {
    let term = match mode {
        Mode::Regular => {
            let floor = min_residual(&problem.a, &problem.y, phi)?;
            if floor > problem.epsilon + 1e-9 * (1.0 + problem.y.amax()) {
                return Err(Error::Infeasible);
            }
            ProxTerm::Ball { norm: phi, radius: problem.epsilon }
        }
        Mode::Penalized(lambda) => ProxTerm::Scaled { norm: phi, weight: lambda },
    };
    let sp = SplitProblem {
        structure: structure.clone(),
        b: problem.b.matrix.clone(),
        a: problem.a.clone(),
        y: problem.y.clone(),
        term,
    };
    let sol = solve_split(&sp, opts)?;
    let lower = dual_lower_bound(problem, structure, phi, mode, &sol.dual_w, &(-&sol.dual_r));
    let x = sol.u;
    let w = problem.b.apply(&x);
    let primal = match mode {
        Mode::Regular => norms::structure_norm(structure, &w, false),
        Mode::Penalized(lambda) => {
            norms::structure_norm(structure, &w, false) + lambda * phi.eval((&problem.a * &x - &problem.y).as_slice())
        }
    };
    Ok((x, (primal - lower).max(0.0), sol.report))
}

/// Weak-duality lower bound from a multiplier `v` for the residual and an
/// approximate subgradient `g` of the structure norm with `B^T g ~ A^T v`.
///
/// `g` is corrected to satisfy `B^T g = A^T v` exactly, then `(g, v)` is
/// scaled into the dual feasible set.
fn dual_lower_bound(
    problem: &RecoveryProblem,
    structure: &SparsityStructure,
    phi: VectorNorm,
    mode: Mode,
    g_approx: &Vector,
    v: &Vector,
) -> f64 {
    let bm = &problem.b.matrix;
    let btb = bm.transpose() * bm;
    let target = problem.a.transpose() * v;
    let mismatch = &target - bm.transpose() * g_approx;
    let correction = match btb.clone().cholesky() {
        Some(c) => bm * c.solve(&mismatch),
        None => bm * crate::linalg::pinv(&btb) * &mismatch,
    };
    let g = g_approx + correction;
    let g_dual = norms::structure_norm(structure, &g, true);
    let v_dual = phi.dual().eval(v.as_slice());
    let yv = problem.y.dot(v);
    match mode {
        Mode::Regular => {
            let c = g_dual.max(1.0);
            (yv - problem.epsilon * v_dual) / c
        }
        Mode::Penalized(lambda) => {
            let c = g_dual.max(v_dual / lambda).max(1.0);
            yv / c
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    Regular,
    Penalized,
}

/// Tolerances entering the error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub delta_x: f64,
    pub delta_phi: f64,
    pub delta: f64,
    /// Penalty parameter; required for the penalized bound.
    pub lambda: Option<f64>,
    /// Realized `phi(xi)` of the observation noise.
    pub phi_xi: f64,
}

/// Closed-form bound on `||B x_hat - B x||`.
///
/// Regular: `(beta (2 eps + delta_phi) + delta + 2 delta_x) / (1 - gamma)`.
/// Penalized: `(2 delta_x + delta + 2 lambda phi(xi)) / (1 - gamma)`, valid
/// for `lambda >= beta`.
pub fn error_bound(gamma: f64, beta: f64, budget: &ErrorBudget, mode: BoundMode) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::InvalidInput(format!("gamma must be >= 0, got {gamma}")));
    }
    if gamma >= 1.0 {
        return Err(Error::GammaTooLarge(gamma));
    }
    if !beta.is_finite() {
        return Err(Error::InfiniteBeta(beta));
    }
    if beta < 0.0 {
        return Err(Error::InvalidInput(format!("beta must be >= 0, got {beta}")));
    }
    let ErrorBudget { epsilon, delta_x, delta_phi, delta, lambda, phi_xi } = *budget;
    if [epsilon, delta_x, delta_phi, delta, phi_xi].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput("error budget entries must be nonnegative".into()));
    }
    let numerator = match mode {
        BoundMode::Regular => beta * (2.0 * epsilon + delta_phi) + delta + 2.0 * delta_x,
        BoundMode::Penalized => {
            let lambda = lambda.ok_or_else(|| Error::InvalidInput("penalized bound needs lambda".into()))?;
            if !(lambda > 0.0) {
                return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
            }
            if lambda < beta {
                return Err(Error::LambdaBelowBeta { lambda, beta });
            }
            2.0 * delta_x + delta + 2.0 * lambda * phi_xi
        }
    };
    Ok(numerator / (1.0 - gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{build_structure, StructureSpec};
    use nalgebra::dmatrix;

    fn plain(n: usize) -> (SparsityStructure, RepresentationMap) {
        build_structure(&StructureSpec::Plain { n }).unwrap()
    }

    fn problem(a: Mat, y: Vec<f64>, phi: NormTag, epsilon: f64) -> RecoveryProblem {
        let (_, b) = plain(a.ncols());
        RecoveryProblem { a, b, y: Vector::from_vec(y), phi, epsilon }
    }

    fn both_backends() -> [RecoveryOptions; 2] {
        [
            RecoveryOptions { backend: Backend::Lp, ..Default::default() },
            RecoveryOptions { backend: Backend::Split, ..Default::default() },
        ]
    }

    #[test]
    fn kernel_example_recovers_first_coordinate() {
        let a = dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 1.0];
        let p = problem(a, vec![2.0, 0.0], NormTag::L1, 0.0);
        let (s, _) = plain(3);
        // Oracle: objective |2 + t| + |t| + |t| over the kernel line.
        let grid_best = (-4000..=4000).map(|k| k as f64 / 1000.0).map(|t| (2.0 + t).abs() + 2.0 * t.abs()).fold(f64::INFINITY, f64::min);
        for opts in both_backends() {
            let r = recover_regular(&p, &s, &opts).unwrap();
            assert!((r.objective - grid_best).abs() < 1e-6);
            for (got, want) in r.x_hat.iter().zip([2.0, 0.0, 0.0]) {
                assert!((got - want).abs() < 1e-6, "{:?}", r.x_hat);
            }
            assert!(r.delta < 1e-6 && r.delta_phi < 1e-6);
        }
    }

    #[test]
    fn identity_and_large_epsilon() {
        let (s, _) = plain(3);
        let y = vec![1.0, -2.0, 0.5];
        for opts in both_backends() {
            let r = recover_regular(&problem(Mat::identity(3, 3), y.clone(), NormTag::L1, 0.0), &s, &opts).unwrap();
            assert!(r.x_hat.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-6));
            let r = recover_regular(&problem(Mat::identity(3, 3), y.clone(), NormTag::Linf, 2.0), &s, &opts).unwrap();
            assert!(r.x_hat.iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn infeasible_regular_instance() {
        let (s, _) = plain(2);
        // Both rows measure the same coordinate but disagree.
        let a = dmatrix![1.0, 0.0; 1.0, 0.0];
        for opts in both_backends() {
            let p = problem(a.clone(), vec![0.0, 1.0], NormTag::Linf, 0.1);
            assert_eq!(recover_regular(&p, &s, &opts).unwrap_err(), Error::Infeasible);
        }
        let p = problem(a, vec![0.0, 1.0], NormTag::L2, 0.1);
        assert_eq!(recover_regular(&p, &s, &RecoveryOptions::default()).unwrap_err(), Error::Infeasible);
    }

    #[test]
    fn penalized_identity_selects_between_y_and_zero() {
        // min ||u||_1 + lambda ||u - y||_1 separates per coordinate into
        // |u| + lambda |u - y_i|, minimized at y_i when lambda > 1, at 0 when
        // lambda < 1.
        let (s, _) = plain(3);
        let y = vec![1.5, -0.3, 2.0];
        for opts in both_backends() {
            let big = recover_penalized(&problem(Mat::identity(3, 3), y.clone(), NormTag::L1, 0.0), &s, 1.5, &opts).unwrap();
            assert!(big.x_hat.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-6), "{:?}", big.x_hat);
            let small = recover_penalized(&problem(Mat::identity(3, 3), y.clone(), NormTag::L1, 0.0), &s, 0.5, &opts).unwrap();
            assert!(small.x_hat.iter().all(|v| v.abs() < 1e-6));
            assert!(big.delta < 1e-6 && small.delta < 1e-6);
        }
        // With phi = l2 the minimizer is the prox: shrink y towards 0 unless lambda is large.
        let p = problem(Mat::identity(3, 3), y.clone(), NormTag::L2, 0.0);
        let r = recover_penalized(&p, &s, 1e-3, &RecoveryOptions::default()).unwrap();
        assert!(r.x_hat.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn exact_penalty_recovers_consistent_signal() {
        let a = dmatrix![2.0, 1.0; 0.5, 3.0; 1.0, 1.0];
        let x0 = Vector::from_vec(vec![0.7, -1.2]);
        let y = (&a * &x0).as_slice().to_vec();
        let (s, _) = plain(2);
        for phi in [NormTag::L1, NormTag::L2] {
            let r = recover_penalized(&problem(a.clone(), y.clone(), phi, 0.0), &s, 100.0, &RecoveryOptions::default()).unwrap();
            assert!(r.x_hat.iter().zip(x0.iter()).all(|(a, b)| (a - b).abs() < 1e-4));
        }
    }

    #[test]
    fn split_and_lp_agree_on_polyhedral_instances() {
        use crate::linalg::{gaussian_matrix, gaussian_vector};
        let (s, _) = plain(10);
        for trial in 0..4 {
            let mut rng = crate::trial_rng(21, trial);
            let a = gaussian_matrix(&mut rng, 6, 10);
            let y = gaussian_vector(&mut rng, 6).as_slice().to_vec();
            for (phi, eps) in [(NormTag::L1, 0.3), (NormTag::Linf, 0.1), (NormTag::L1, 0.0)] {
                let p = problem(a.clone(), y.clone(), phi, eps);
                let [lp, sp] = both_backends().map(|o| recover_regular(&p, &s, &o).unwrap());
                assert!((lp.objective - sp.objective).abs() <= 1e-5 * (1.0 + lp.objective.abs()));
                // The measured gap certifies the split solution too.
                assert!(sp.objective <= lp.objective + sp.delta + 1e-9);
                assert!(sp.delta < 1e-5);
                let pp = recover_penalized(&p, &s, 0.8, &RecoveryOptions { backend: Backend::Lp, ..Default::default() }).unwrap();
                let ps = recover_penalized(&p, &s, 0.8, &RecoveryOptions { backend: Backend::Split, ..Default::default() }).unwrap();
                assert!((pp.objective - ps.objective).abs() <= 1e-5 * (1.0 + pp.objective.abs()));
            }
        }
    }

    #[test]
    fn group_and_lowrank_recover() {
        let (g, bg) = build_structure(&StructureSpec::Group {
            n: 4,
            blocks: vec![vec![0, 1], vec![1, 2], vec![3]],
            weights: None,
            block_norms: vec![VectorNorm::Linf, VectorNorm::L1, VectorNorm::L2],
        })
        .unwrap();
        let p = RecoveryProblem { a: Mat::identity(4, 4), b: bg, y: Vector::from_vec(vec![1.0, 2.0, -1.0, 0.5]), phi: NormTag::L2, epsilon: 0.0 };
        let r = recover_regular(&p, &g, &RecoveryOptions::default()).unwrap();
        assert_eq!(r.backend, Backend::Split);
        assert!(r.x_hat.iter().zip(p.y.iter()).all(|(a, b)| (a - b).abs() < 1e-6));

        let (lr, bl) = build_structure(&StructureSpec::LowRank { p: 2, q: 2, transposed: false }).unwrap();
        let y = Vector::from_vec(vec![1.0, 0.0, 0.0, 2.0]);
        let p = RecoveryProblem { a: Mat::identity(4, 4), b: bl, y, phi: NormTag::L2, epsilon: 0.5 };
        let r = recover_regular(&p, &lr, &RecoveryOptions::default()).unwrap();
        // Shrink diag(1, 2) onto the Frobenius ball of radius 0.5 around it:
        // optimum shrinks both singular values by 0.5 / sqrt(2).
        let t = 0.5 / 2f64.sqrt();
        assert!((r.x_hat[0] - (1.0 - t)).abs() < 1e-5 && (r.x_hat[3] - (2.0 - t)).abs() < 1e-5, "{:?}", r.x_hat);
        assert!(r.delta < 1e-5);
    }

    #[test]
    fn lp_backend_rejects_non_polyhedral() {
        let (s, _) = plain(2);
        let p = problem(Mat::identity(2, 2), vec![1.0, 1.0], NormTag::L2, 0.0);
        let opts = RecoveryOptions { backend: Backend::Lp, ..Default::default() };
        assert!(matches!(recover_regular(&p, &s, &opts), Err(Error::Unsupported(_))));
        let p = problem(Mat::identity(2, 2), vec![1.0, 1.0], NormTag::Nuclear, 0.0);
        assert!(matches!(recover_regular(&p, &s, &RecoveryOptions::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn error_bound_examples() {
        let regular = ErrorBudget { epsilon: 0.1, ..Default::default() };
        assert!((error_bound(0.5, 1.0, &regular, BoundMode::Regular).unwrap() - 0.4).abs() < 1e-15);
        let penalized = ErrorBudget { lambda: Some(2.0), phi_xi: 0.05, ..Default::default() };
        assert!((error_bound(0.5, 1.0, &penalized, BoundMode::Penalized).unwrap() - 0.4).abs() < 1e-15);
        let a = error_bound(0.99, 1.0, &regular, BoundMode::Regular).unwrap();
        let b = error_bound(0.0, 1.0, &regular, BoundMode::Regular).unwrap();
        assert!((a / b - 100.0).abs() < 1e-9);
    }

    #[test]
    fn error_bound_errors() {
        let budget = ErrorBudget { lambda: Some(0.5), ..Default::default() };
        assert_eq!(error_bound(1.0, 1.0, &budget, BoundMode::Regular), Err(Error::GammaTooLarge(1.0)));
        assert_eq!(
            error_bound(0.5, 1.0, &budget, BoundMode::Penalized),
            Err(Error::LambdaBelowBeta { lambda: 0.5, beta: 1.0 })
        );
        assert!(matches!(error_bound(0.5, f64::INFINITY, &budget, BoundMode::Regular), Err(Error::InfiniteBeta(_))));
    }
}
