//! Verifiable certificates for plain and group structures with `phi = l1`:
//! find `H` with `W = B B^+ - H^T A B^+` minimizing
//! `max_l pi_s(Col_l(Omega[W]))`.

use rayon::prelude::*;

use super::{check_sensing, Certificate, Method};
use crate::engine::lp::{solve_lp, LpBuilder, LpOptions, Sense};
use crate::engine::SolveStatus;
use crate::error::{check_dim, Error, Result};
use crate::knapsack;
use crate::linalg::{self, Mat};
use crate::norms::{self, NormTag, PiVariant, VectorNorm};
use crate::structures::{build_structure, GroupStructure, RepresentationMap, SparsityStructure, StructureSpec};

#[derive(Debug, Clone, Copy, Default)]
pub struct SynthOptions {
    pub lp: LpOptions,
}

/// `Psi_s(H) = max_{phi(v) <= 1} ||H^T v||_{1,s}`; for `phi = l1` the
/// maximum sits at a signed unit vector, i.e. at a row of `H`.
pub fn psi_s(h: &Mat, structure: &SparsityStructure, s: f64, phi: NormTag) -> Result<f64> {
    if phi != NormTag::L1 {
        return Err(Error::Unsupported(format!(
            "Psi_s is only evaluated exactly for phi = l1, got {phi:?}"
        )));
    }
    check_dim("H columns", structure.dim_e(), h.ncols())?;
    Ok((0..h.nrows())
        .map(|i| norms::ps_seminorm(structure, &h.row(i).transpose(), s))
        .fold(0.0, f64::max))
}

/// How `Omega_kl` is modeled in the LP: exactly for the polyhedral pairs,
/// by a dominating polyhedral norm otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
enum OmegaModel {
    /// max |Q_ij|
    Entry,
    /// max over columns of the column's l1 norm
    ColMax,
    /// max over rows of the row's l1 norm
    RowMax,
    /// sum |Q_ij|
    Total,
}

fn omega_model(from: VectorNorm, to: VectorNorm, rows: usize, cols: usize) -> OmegaModel {
    use VectorNorm::*;
    if rows * cols == 1 {
        return OmegaModel::Entry;
    }
    match (from, to) {
        (L1, Linf) => OmegaModel::Entry,
        (L1, L1) | (L1, L2) => OmegaModel::ColMax,
        (Linf, Linf) | (L2, Linf) => OmegaModel::RowMax,
        _ => OmegaModel::Total,
    }
}

fn as_group(structure: &SparsityStructure) -> Result<GroupStructure> {
    match structure {
        SparsityStructure::Plain { n } => {
            let spec = StructureSpec::Group {
                n: *n,
                blocks: (0..*n).map(|i| vec![i]).collect(),
                weights: None,
                block_norms: vec![VectorNorm::L1; *n],
            };
            match build_structure(&spec)?.0 {
                SparsityStructure::Group(g) => Ok(g),
                _ => unreachable!(),
            }
        }
        SparsityStructure::Group(g) => Ok(g.clone()),
        SparsityStructure::LowRank(_) => Err(Error::Unsupported(
            "low-rank certificates are produced by certify_lowrank".into(),
        )),
    }
}

/// The affine map `H -> W = P0 - H^T C` and the LP variables of `H`.
struct AffineW<'a> {
    p0: &'a Mat,
    c: &'a Mat,
    /// LP variable of `H_ia`, if `H_ia` is a variable in this LP.
    h: &'a (dyn Fn(usize, usize) -> usize + Sync),
}

impl AffineW<'_> {
    /// Add `|W_ab| <= v`.
    fn abs_le(&self, lp: &mut LpBuilder, a: usize, b: usize, v: usize) {
        let m = self.c.nrows();
        let x: Vec<(usize, f64)> = (0..m)
            .filter(|&i| self.c[(i, b)] != 0.0)
            .map(|i| ((self.h)(i, a), self.c[(i, b)]))
            .collect();
        let p = self.p0[(a, b)];
        // x - P <= v
        let mut up = x.clone();
        up.push((v, -1.0));
        lp.row(up, Sense::Le, p);
        // P - x <= v
        let mut down: Vec<(usize, f64)> = x.into_iter().map(|(j, c)| (j, -c)).collect();
        down.push((v, -1.0));
        lp.row(down, Sense::Le, -p);
    }

    /// A variable bounding `Omega_kl` from above (tightly where the model is
    /// exact).
    fn omega(&self, lp: &mut LpBuilder, g: &GroupStructure, k: usize, l: usize) -> usize {
        let rows = g.block_range(k);
        let cols = g.block_range(l);
        let model = omega_model(g.block_norms[l], g.block_norms[k], rows.len(), cols.len());
        let w = lp.var(0.0, f64::INFINITY, 0.0);
        match model {
            OmegaModel::Entry => {
                for a in rows {
                    for b in cols.clone() {
                        self.abs_le(lp, a, b, w);
                    }
                }
            }
            OmegaModel::ColMax => {
                for b in cols {
                    let mut sum = vec![(w, -1.0)];
                    for a in rows.clone() {
                        let e = lp.var(0.0, f64::INFINITY, 0.0);
                        self.abs_le(lp, a, b, e);
                        sum.push((e, 1.0));
                    }
                    lp.row(sum, Sense::Le, 0.0);
                }
            }
            OmegaModel::RowMax => {
                for a in rows {
                    let mut sum = vec![(w, -1.0)];
                    for b in cols.clone() {
                        let e = lp.var(0.0, f64::INFINITY, 0.0);
                        self.abs_le(lp, a, b, e);
                        sum.push((e, 1.0));
                    }
                    lp.row(sum, Sense::Le, 0.0);
                }
            }
            OmegaModel::Total => {
                let mut sum = vec![(w, -1.0)];
                for a in rows {
                    for b in cols.clone() {
                        let e = lp.var(0.0, f64::INFINITY, 0.0);
                        self.abs_le(lp, a, b, e);
                        sum.push((e, 1.0));
                    }
                }
                lp.row(sum, Sense::Le, 0.0);
            }
        }
        w
    }
}

fn fits(g: &GroupStructure, l: usize, s: f64) -> bool {
    g.weights[l] <= s + knapsack::budget_slack(s)
}

/// No two distinct blocks fit together, so `pi_s(u) = 2 max_{l fits} |u_l|`
/// and the problem splits over row blocks of `W`.
fn singles_only(g: &GroupStructure, s: f64) -> bool {
    let mut w: Vec<f64> = (0..g.num_blocks()).filter(|&l| fits(g, l, s)).map(|l| g.weights[l]).collect();
    w.sort_by(f64::total_cmp);
    w.len() < 2 || w[0] + w[1] > s + knapsack::budget_slack(s)
}

fn lp_failure(status: SolveStatus) -> Error {
    Error::Unsupported(format!("certificate LP ended with status {status:?}"))
}

/// Synthesize `(H, W, gamma, beta)` for a plain or group structure by linear
/// programming. Plain is handled as singleton `l1` blocks of unit weight.
///
/// `Omega` entries are modeled exactly when the induced norm is polyhedral
/// (`l1 -> l1`, `l1 -> linf`, `linf -> linf`) and by a larger polyhedral
/// norm otherwise; `pi_s` by its LP relaxation, exact for unit weights and
/// integer `s`. The reported `gamma` is recomputed from the resulting `W`
/// with exact `pi_s` where available, so it never exceeds the LP value.
pub fn synth_certificate_group(
    a: &Mat,
    b: &RepresentationMap,
    structure: &SparsityStructure,
    s: f64,
    phi: NormTag,
    opts: &SynthOptions,
) -> Result<Certificate> {
    if phi != NormTag::L1 {
        return Err(Error::Unsupported(format!(
            "synthesized group certificates need phi = l1 for a computable beta, got {phi:?}"
        )));
    }
    check_sensing(a, structure)?;
    let g = as_group(structure)?;
    let n = g.n;
    let big_n = g.dim_e();
    check_dim("representation rows", structure.dim_e(), b.matrix.nrows())?;
    if linalg::rank(&b.matrix) < n {
        return Err(Error::Unsupported("representation map lacks full column rank".into()));
    }
    let m = a.nrows();
    let bp = linalg::pinv(&b.matrix);
    let c = a * &bp;
    let p0 = &b.matrix * &bp;
    let k_blocks = g.num_blocks();

    let mut h = Mat::zeros(m, big_n);
    let mut notes = Vec::new();
    if singles_only(&g, s) {
        let rows: Vec<usize> = (0..k_blocks).filter(|&k| fits(&g, k, s)).collect();
        let solved: Vec<Result<Vec<(usize, usize, f64)>>> = rows
            .par_iter()
            .map(|&k| {
                let range = g.block_range(k);
                let nk = range.len();
                let mut lp = LpBuilder::new();
                let base = lp.num_vars();
                for _ in 0..m * nk {
                    lp.free_var(0.0);
                }
                let start = range.start;
                let var = move |i: usize, a: usize| base + i * nk + (a - start);
                let aff = AffineW { p0: &p0, c: &c, h: &var };
                let tau = lp.var(0.0, f64::INFINITY, 1.0);
                for l in 0..k_blocks {
                    let w = aff.omega(&mut lp, &g, k, l);
                    lp.row(vec![(w, 1.0), (tau, -1.0)], Sense::Le, 0.0);
                }
                let sol = solve_lp(&lp.build(), &opts.lp)?;
                if sol.report.status != SolveStatus::Optimal {
                    return Err(lp_failure(sol.report.status));
                }
                Ok((0..m)
                    .flat_map(|i| range.clone().map(move |a| (i, a)))
                    .map(|(i, a)| (i, a, sol.x[var(i, a)]))
                    .collect())
            })
            .collect();
        for entries in solved {
            for (i, a, v) in entries? {
                h[(i, a)] = v;
            }
        }
        notes.push("decoupled per row block".into());
    } else {
        let mut lp = LpBuilder::new();
        for _ in 0..m * big_n {
            lp.free_var(0.0);
        }
        let var = |i: usize, a: usize| i * big_n + a;
        let aff = AffineW { p0: &p0, c: &c, h: &var };
        let gamma = lp.var(0.0, f64::INFINITY, 1.0);
        let caps: Vec<f64> = (0..k_blocks)
            .map(|k| (norms::floor_level(s / g.weights[k]) as f64).min(1.0))
            .collect();
        for l in 0..k_blocks {
            let theta = lp.var(0.0, f64::INFINITY, 0.0);
            let mut budget = vec![(theta, 2.0 * s), (gamma, -1.0)];
            for k in 0..k_blocks {
                let w = aff.omega(&mut lp, &g, k, l);
                let mu = lp.var(0.0, f64::INFINITY, 0.0);
                lp.row(vec![(w, 1.0), (theta, -g.weights[k]), (mu, -1.0)], Sense::Le, 0.0);
                if caps[k] > 0.0 {
                    budget.push((mu, 2.0 * caps[k]));
                }
            }
            lp.row(budget, Sense::Le, 0.0);
        }
        let sol = solve_lp(&lp.build(), &opts.lp)?;
        if sol.report.status != SolveStatus::Optimal {
            return Err(lp_failure(sol.report.status));
        }
        for i in 0..m {
            for a in 0..big_n {
                h[(i, a)] = sol.x[var(i, a)];
            }
        }
        notes.push("joint LP over all columns".into());
    }

    let w = &p0 - h.transpose() * &c;
    let omega = norms::omega(&g, &w)?;
    let mut exact = omega.exact;
    let mut gamma = 0.0f64;
    for l in 0..k_blocks {
        let col: Vec<f64> = omega.values.column(l).iter().copied().collect();
        let value = match norms::pi_s(&col, &g.weights, s, PiVariant::Exact) {
            Ok(v) => v,
            Err(_) => {
                exact = false;
                norms::pi_s(&col, &g.weights, s, PiVariant::Hat)?
            }
        };
        gamma = gamma.max(value);
    }
    let group_structure = SparsityStructure::Group(g);
    let beta = psi_s(&h, &group_structure, s, NormTag::L1)?;
    if !omega.exact {
        notes.push("Omega entries are upper bounds".into());
    }
    Ok(Certificate {
        method: Method::ColumnLp,
        gamma,
        beta,
        s,
        phi,
        valid: gamma < 1.0,
        exact,
        h: Some(h),
        w: Some(w),
        notes,
    })
}
