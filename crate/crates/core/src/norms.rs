//! Norms, conjugate norms, the sparsity seminorms that appear in the
//! recovery conditions, induced block norms and the proximal maps used by the
//! splitting solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack;
use crate::linalg::{self, Mat, Vector};
use crate::structures::{GroupStructure, SparsityStructure};

/// The vector norms available for blocks and for the noise norm `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorNorm {
    L1,
    L2,
    #[serde(alias = "l_inf", alias = "inf")]
    Linf,
}

impl VectorNorm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            VectorNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            VectorNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            VectorNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn dual(self) -> VectorNorm {
        match self {
            VectorNorm::L1 => VectorNorm::Linf,
            VectorNorm::L2 => VectorNorm::L2,
            VectorNorm::Linf => VectorNorm::L1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VectorNorm::L1 => "l1",
            VectorNorm::L2 => "l2",
            VectorNorm::Linf => "linf",
        }
    }
}

impl std::str::FromStr for VectorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(VectorNorm::L1),
            "l2" => Ok(VectorNorm::L2),
            "linf" | "l_inf" | "inf" => Ok(VectorNorm::Linf),
            other => Err(Error::InvalidInput(format!("unknown norm '{other}'"))),
        }
    }
}

/// Every norm the library evaluates, with its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    L1,
    L2,
    Linf,
    Nuclear,
    Spectral,
}

impl NormTag {
    pub fn dual(self) -> NormTag {
        match self {
            NormTag::L1 => NormTag::Linf,
            NormTag::L2 => NormTag::L2,
            NormTag::Linf => NormTag::L1,
            NormTag::Nuclear => NormTag::Spectral,
            NormTag::Spectral => NormTag::Nuclear,
        }
    }

    /// Evaluate on a matrix; vector norms act on the entries.
    pub fn eval(self, m: &Mat) -> f64 {
        match self {
            NormTag::L1 => VectorNorm::L1.eval(m.as_slice()),
            NormTag::L2 => VectorNorm::L2.eval(m.as_slice()),
            NormTag::Linf => VectorNorm::Linf.eval(m.as_slice()),
            NormTag::Nuclear => linalg::nuclear_norm(m),
            NormTag::Spectral => linalg::spectral_norm(m),
        }
    }
}

impl From<VectorNorm> for NormTag {
    fn from(v: VectorNorm) -> Self {
        match v {
            VectorNorm::L1 => NormTag::L1,
            VectorNorm::L2 => NormTag::L2,
            VectorNorm::Linf => NormTag::Linf,
        }
    }
}

/// Sum of the `s` largest magnitudes of `x` (the `||x||_{s,1}` norm).
pub fn sum_top(x: &[f64], s: usize) -> f64 {
    if s >= x.len() {
        return VectorNorm::L1.eval(x);
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    mags[..s].iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PiVariant {
    Exact,
    Hat,
}

/// The weighted sparsity norm
/// `pi_s(u) = 2 max { sum eta_l |u_l| : eta in {0,1}^K, sum chi_l eta_l <= s }`,
/// or its continuous upper bound (`Hat`).
pub fn pi_s(u: &[f64], chi: &[f64], s: f64, variant: PiVariant) -> Result<f64> {
    if u.len() != chi.len() {
        return Err(Error::DimensionMismatch {
            context: "pi_s weights",
            expected: u.len(),
            found: chi.len(),
        });
    }
    if chi.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidInput("pi_s weights must be positive".into()));
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidInput(format!("sparsity level must be >= 0, got {s}")));
    }
    let mags: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    match variant {
        PiVariant::Hat => Ok(2.0 * knapsack::relaxed(&mags, chi, s)),
        PiVariant::Exact => knapsack::solve_exact(&mags, chi, s)
            .map(|sel| 2.0 * sel.value)
            .ok_or_else(|| {
                Error::Unsupported(format!(
                    "exact pi_s needs integer weights or at most {} blocks (got {}); use the hat variant",
                    knapsack::BNB_MAX_ITEMS,
                    u.len()
                ))
            }),
    }
}

/// `pi_s` evaluated exactly when possible, otherwise by its upper bound.
pub(crate) fn pi_s_best(u: &[f64], chi: &[f64], s: f64) -> f64 {
    pi_s(u, chi, s, PiVariant::Exact)
        .or_else(|_| pi_s(u, chi, s, PiVariant::Hat))
        .expect("weights validated by the structure")
}

/// Sum of the `k` largest singular values of `z` (nuclear norm once `k`
/// reaches the smaller dimension).
pub fn sigma_sum(z: &Mat, k: usize) -> f64 {
    linalg::singular_values(z).iter().take(k).sum()
}

/// Block norms `||w^l||_(l)` of an E-vector.
pub fn block_norms(group: &GroupStructure, w: &Vector) -> Vec<f64> {
    (0..group.num_blocks())
        .map(|l| group.block_norms[l].eval(&w.as_slice()[group.block_range(l)]))
        .collect()
}

/// The structure norm `||w||`, or its conjugate when `dual` is set.
///
/// Panics when `w` does not live in the structure's representation space.
pub fn structure_norm(structure: &SparsityStructure, w: &Vector, dual: bool) -> f64 {
    assert_eq!(w.len(), structure.dim_e(), "vector is not in E");
    match structure {
        SparsityStructure::Plain { .. } => {
            if dual {
                VectorNorm::Linf.eval(w.as_slice())
            } else {
                VectorNorm::L1.eval(w.as_slice())
            }
        }
        SparsityStructure::Group(g) => {
            let per_block = (0..g.num_blocks()).map(|l| {
                let norm = g.block_norms[l];
                let norm = if dual { norm.dual() } else { norm };
                norm.eval(&w.as_slice()[g.block_range(l)])
            });
            if dual {
                per_block.fold(0.0, f64::max)
            } else {
                per_block.sum()
            }
        }
        SparsityStructure::LowRank(shape) => {
            let m = linalg::unvec(w, shape.p, shape.q);
            if dual {
                linalg::spectral_norm(&m)
            } else {
                linalg::nuclear_norm(&m)
            }
        }
    }
}

/// The seminorm `||.||_{P_s}` that dominates `||Pw|| + ||w|| - ||Pbar w||`
/// over the weight-`s` projectors: `2 ||z||_{s,1}` (plain), `pi_s` of the
/// block norms (group; the hat bound when exact evaluation is unsupported),
/// `Sigma_s + Sigma_{2s}` (low rank).
pub fn ps_seminorm(structure: &SparsityStructure, z: &Vector, s: f64) -> f64 {
    assert_eq!(z.len(), structure.dim_e(), "vector is not in E");
    match structure {
        SparsityStructure::Plain { .. } => 2.0 * sum_top(z.as_slice(), floor_level(s)),
        SparsityStructure::Group(g) => pi_s_best(&block_norms(g, z), &g.weights, s),
        SparsityStructure::LowRank(shape) => {
            let k = floor_level(s);
            if k == 0 {
                return 0.0;
            }
            let sv = linalg::singular_values(&linalg::unvec(z, shape.p, shape.q));
            sv.iter().take(k).sum::<f64>() + sv.iter().take(2 * k).sum::<f64>()
        }
    }
}

pub(crate) fn floor_level(s: f64) -> usize {
    if s <= 0.0 {
        0
    } else {
        (s + knapsack::budget_slack(s)).floor() as usize
    }
}

/// An induced norm value and whether it is exact (otherwise an upper bound).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedNorm {
    pub value: f64,
    pub exact: bool,
}

/// Largest dimension for which the hard induced norms are evaluated by
/// enumerating sign vectors.
const SIGN_ENUMERATION_MAX: usize = 16;

/// `max { ||Q u||_to : ||u||_from <= 1 }`.
pub fn induced_norm(q: &Mat, from: VectorNorm, to: VectorNorm) -> InducedNorm {
    use VectorNorm::*;
    let (rows, cols) = q.shape();
    if rows == 0 || cols == 0 {
        return InducedNorm { value: 0.0, exact: true };
    }
    let exact = |value| InducedNorm { value, exact: true };
    match (from, to) {
        (L1, _) => exact(
            q.column_iter()
                .map(|c| to.eval(c.clone_owned().as_slice()))
                .fold(0.0, f64::max),
        ),
        (_, Linf) => exact(
            q.row_iter()
                .map(|r| from.dual().eval(r.transpose().as_slice()))
                .fold(0.0, f64::max),
        ),
        (L2, L2) => exact(linalg::spectral_norm(q)),
        (Linf, _) if cols <= SIGN_ENUMERATION_MAX => {
            // A convex function peaks at a vertex of the unit cube.
            exact(max_over_signs(cols, |u| to.eval((q * u).as_slice())))
        }
        (L2, L1) if rows <= SIGN_ENUMERATION_MAX => {
            // ||Q||_{2->1} = ||Q^T||_{inf->2}.
            let qt = q.transpose();
            exact(max_over_signs(rows, |v| (&qt * v).norm()))
        }
        (Linf, L1) => {
            let sigma = linalg::spectral_norm(q);
            let row_l1: Vec<f64> = q.row_iter().map(|r| r.iter().map(|x| x.abs()).sum()).collect();
            let row_l2_sum: f64 = q.row_iter().map(|r| r.norm()).sum();
            let candidates = [
                q.iter().map(|x| x.abs()).sum::<f64>(),
                ((rows * cols) as f64).sqrt() * sigma,
                (rows as f64).sqrt() * VectorNorm::L2.eval(&row_l1),
                (cols as f64).sqrt() * row_l2_sum,
            ];
            InducedNorm {
                value: candidates.iter().copied().fold(f64::INFINITY, f64::min),
                exact: false,
            }
        }
        (Linf, L2) => {
            let sigma = linalg::spectral_norm(q);
            let row_l1: Vec<f64> = q.row_iter().map(|r| r.iter().map(|x| x.abs()).sum()).collect();
            InducedNorm {
                value: ((cols as f64).sqrt() * sigma).min(VectorNorm::L2.eval(&row_l1)),
                exact: false,
            }
        }
        (L2, L1) => {
            let sigma = linalg::spectral_norm(q);
            let row_l2_sum: f64 = q.row_iter().map(|r| r.norm()).sum();
            InducedNorm {
                value: ((rows as f64).sqrt() * sigma).min(row_l2_sum),
                exact: false,
            }
        }
    }
}

fn max_over_signs(dim: usize, mut f: impl FnMut(&Vector) -> f64) -> f64 {
    // The objective is even, so the first sign can be fixed.
    let mut u = Vector::from_element(dim, 1.0);
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << (dim - 1)) {
        for i in 1..dim {
            u[i] = if mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
        }
        best = best.max(f(&u));
    }
    best
}

/// `Omega[W]`: the `K x K` matrix of induced norms of the blocks of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Omega {
    pub values: Mat,
    /// `false` when some entry is an upper bound rather than the exact value.
    pub exact: bool,
}

pub fn omega(group: &GroupStructure, w: &Mat) -> Result<Omega> {
    let n = group.dim_e();
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "omega: W must be dim(E) x dim(E)",
            expected: n,
            found: if w.nrows() != n { w.nrows() } else { w.ncols() },
        });
    }
    let k = group.num_blocks();
    let mut values = Mat::zeros(k, k);
    let mut exact = true;
    for r in 0..k {
        let rr = group.block_range(r);
        for c in 0..k {
            let cr = group.block_range(c);
            let block = w.view((rr.start, cr.start), (rr.len(), cr.len())).into_owned();
            let ind = induced_norm(&block, group.block_norms[c], group.block_norms[r]);
            values[(r, c)] = ind.value;
            exact &= ind.exact;
        }
    }
    Ok(Omega { values, exact })
}

fn soft_threshold(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

/// `argmin_u tau ||u||_norm + 1/2 ||u - v||_2^2`.
pub fn prox_vector_norm(v: &[f64], norm: VectorNorm, tau: f64) -> Vec<f64> {
    match norm {
        VectorNorm::L1 => v.iter().map(|&x| soft_threshold(x, tau)).collect(),
        VectorNorm::L2 => {
            let n = VectorNorm::L2.eval(v);
            if n <= tau {
                vec![0.0; v.len()]
            } else {
                let scale = 1.0 - tau / n;
                v.iter().map(|x| x * scale).collect()
            }
        }
        VectorNorm::Linf => {
            // Moreau: prox of tau ||.||_inf is v minus the projection onto the
            // l1 ball of radius tau.
            let p = project_l1_ball(v, tau);
            v.iter().zip(p).map(|(a, b)| a - b).collect()
        }
    }
}

/// Proximal map of `tau ||.||` for the structure norm.
pub fn prox_structure_norm(structure: &SparsityStructure, w: &Vector, tau: f64) -> Vector {
    assert_eq!(w.len(), structure.dim_e(), "vector is not in E");
    match structure {
        SparsityStructure::Plain { .. } => w.map(|x| soft_threshold(x, tau)),
        SparsityStructure::Group(g) => {
            let mut out = w.clone();
            for l in 0..g.num_blocks() {
                let range = g.block_range(l);
                let shrunk = prox_vector_norm(&w.as_slice()[range.clone()], g.block_norms[l], tau);
                out.as_mut_slice()[range].copy_from_slice(&shrunk);
            }
            out
        }
        SparsityStructure::LowRank(shape) => {
            let d = linalg::svd(&linalg::unvec(w, shape.p, shape.q));
            let mut out = Mat::zeros(shape.p, shape.q);
            for (i, &s) in d.singular_values.iter().enumerate() {
                let t = s - tau;
                if t > 0.0 {
                    out += d.u.column(i) * d.v_t.row(i) * t;
                }
            }
            linalg::vec_of(&out)
        }
    }
}

fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if VectorNorm::L1.eval(v) <= radius {
        return v.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumulative += m;
        let t = (cumulative - radius) / (j + 1) as f64;
        if m - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}

/// Euclidean projection onto `{ u : phi(u) <= radius }`.
pub fn project_ball(v: &[f64], phi: VectorNorm, radius: f64) -> Vec<f64> {
    let radius = radius.max(0.0);
    match phi {
        VectorNorm::Linf => v.iter().map(|x| x.clamp(-radius, radius)).collect(),
        VectorNorm::L2 => {
            let n = VectorNorm::L2.eval(v);
            if n <= radius {
                v.to_vec()
            } else {
                v.iter().map(|x| x * radius / n).collect()
            }
        }
        VectorNorm::L1 => project_l1_ball(v, radius),
    }
}
