//! Alternating direction splitting for
//! `min_u f(Bu) + g(Au - y)`
//! with `f` the structure norm and `g` a norm-ball indicator or a scaled norm.
//!
//! The auxiliary variables are `w = Bu` and `r = Au - y`. The `u`-update
//! solves with `K^T K`, `K = [B; A]`, whose Cholesky factor is computed once.

use nalgebra::Cholesky;

use crate::engine::{SolveReport, SolveStatus};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Mat, Vector};
use crate::norms::{self, VectorNorm};
use crate::structures::SparsityStructure;

/// Proximable term applied to the residual `Au - y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxTerm {
    /// Indicator of `{ r : norm(r) <= radius }`.
    Ball { norm: VectorNorm, radius: f64 },
    /// `weight * norm(r)`.
    Scaled { norm: VectorNorm, weight: f64 },
}

impl ProxTerm {
    /// Value of the term; the indicator is reported as its constraint
    /// violation-free part, i.e. zero.
    pub fn value(&self, r: &[f64]) -> f64 {
        match *self {
            ProxTerm::Ball { .. } => 0.0,
            ProxTerm::Scaled { norm, weight } => weight * norm.eval(r),
        }
    }

    /// `argmin_z t * term(z) + 1/2 ||z - v||^2`.
    pub fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        match *self {
            ProxTerm::Ball { norm, radius } => norms::project_ball(v, norm, radius),
            ProxTerm::Scaled { norm, weight } => norms::prox_vector_norm(v, norm, t * weight),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitProblem {
    pub structure: SparsityStructure,
    pub b: Mat,
    pub a: Mat,
    pub y: Vector,
    pub term: ProxTerm,
}

#[derive(Debug, Clone, Copy)]
pub struct SplitOptions {
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Residual-balancing period for `rho`; 0 disables it.
    pub rebalance_every: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            rho: 1.0,
            tol: 1e-8,
            max_iter: 50_000,
            rebalance_every: 50,
            relaxation: 1.6,
        }
    }
}

pub const RHO_MIN: f64 = 1e-4;
pub const RHO_MAX: f64 = 1e4;

#[derive(Debug, Clone)]
pub struct SplitSolution {
    pub u: Vector,
    /// Scaled dual variables for the `w` and `r` blocks, unscaled by `rho`
    /// (so they are multipliers of the original constraints).
    pub dual_w: Vector,
    pub dual_r: Vector,
    pub rho: f64,
    pub report: SolveReport,
    /// `max(primal, dual)` residual sampled at every rebalancing point.
    pub residual_history: Vec<f64>,
}

impl SplitProblem {
    fn validate(&self, opts: &SplitOptions) -> Result<()> {
        let n = self.a.ncols();
        check_dim("coupling B columns", n, self.b.ncols())?;
        check_dim("coupling B rows", self.structure.dim_e(), self.b.nrows())?;
        check_dim("observation length", self.a.nrows(), self.y.len())?;
        if !(opts.rho > 0.0) || !(opts.tol > 0.0) || opts.max_iter == 0 {
            return Err(Error::InvalidInput("rho, tol and max_iter must be positive".into()));
        }
        if !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
            return Err(Error::InvalidInput("relaxation must lie in (0, 2)".into()));
        }
        match self.term {
            ProxTerm::Ball { radius, .. } if !(radius >= 0.0) => {
                Err(Error::InvalidInput("ball radius must be nonnegative".into()))
            }
            ProxTerm::Scaled { weight, .. } if !(weight > 0.0) => {
                Err(Error::InvalidInput("penalty weight must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn objective(&self, u: &Vector) -> f64 {
        let w = &self.b * u;
        let r = &self.a * u - &self.y;
        norms::structure_norm(&self.structure, &w, false) + self.term.value(r.as_slice())
    }
}

pub fn solve_split(sp: &SplitProblem, opts: &SplitOptions) -> Result<SplitSolution> {
    sp.validate(opts)?;
    let n = sp.a.ncols();
    let mut warnings = Vec::new();
    let normal = sp.b.transpose() * &sp.b + sp.a.transpose() * &sp.a;
    let chol = match Cholesky::new(normal.clone()) {
        Some(c) => c,
        None => {
            warnings.push("singular coupling matrix regularized by 1e-10 * I".to_string());
            Cholesky::new(normal + Mat::identity(n, n) * 1e-10)
                .ok_or_else(|| Error::InvalidInput("coupling matrix is not factorizable".into()))?
        }
    };
    let bt = sp.b.transpose();
    let at = sp.a.transpose();

    let mut rho = opts.rho;
    let mut u = Vector::zeros(n);
    let mut w = Vector::zeros(sp.b.nrows());
    let mut r = -sp.y.clone();
    r = Vector::from_vec(sp.term.prox(r.as_slice(), 1.0 / rho));
    let mut lam_w = Vector::zeros(w.len());
    let mut lam_r = Vector::zeros(r.len());
    let mut history = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let alpha = opts.relaxation;

    for it in 1..=opts.max_iter {
        iterations = it;
        let rhs = &bt * (&w - &lam_w) + &at * (&r + &sp.y - &lam_r);
        u = chol.solve(&rhs);
        let bu = &sp.b * &u;
        let au_y = &sp.a * &u - &sp.y;
        let hat_w = &bu * alpha + &w * (1.0 - alpha);
        let hat_r = &au_y * alpha + &r * (1.0 - alpha);

        let w_new = norms::prox_structure_norm(&sp.structure, &(&hat_w + &lam_w), 1.0 / rho);
        let r_new = Vector::from_vec(sp.term.prox((&hat_r + &lam_r).as_slice(), 1.0 / rho));
        lam_w += &hat_w - &w_new;
        lam_r += &hat_r - &r_new;

        let dw = &w_new - &w;
        let dr = &r_new - &r;
        w = w_new;
        r = r_new;

        let pres_w = &bu - &w;
        let pres_r = &au_y - &r;
        primal = (pres_w.norm_squared() + pres_r.norm_squared()).sqrt();
        dual = rho * (&bt * &dw + &at * &dr).norm();
        let primal_scale = 1.0 + bu.norm().max(w.norm()).max(au_y.norm()).max(r.norm());
        let dual_scale = 1.0 + rho * (&bt * &lam_w + &at * &lam_r).norm();
        let p_rel = primal / primal_scale;
        let d_rel = dual / dual_scale;

        if p_rel <= opts.tol && d_rel <= opts.tol {
            status = SolveStatus::Optimal;
            history.push(p_rel.max(d_rel));
            break;
        }
        if opts.rebalance_every > 0 && it % opts.rebalance_every == 0 {
            history.push(p_rel.max(d_rel));
            let new_rho = if p_rel > 10.0 * d_rel {
                (rho * 2.0).min(RHO_MAX)
            } else if d_rel > 10.0 * p_rel {
                (rho / 2.0).max(RHO_MIN)
            } else {
                rho
            };
            if new_rho != rho {
                lam_w *= rho / new_rho;
                lam_r *= rho / new_rho;
                rho = new_rho;
            }
        }
    }

    let objective = sp.objective(&u);
    Ok(SplitSolution {
        u,
        dual_w: lam_w * rho,
        dual_r: lam_r * rho,
        rho,
        report: SolveReport {
            status,
            objective,
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            warnings,
        },
        residual_history: history,
    })
}
