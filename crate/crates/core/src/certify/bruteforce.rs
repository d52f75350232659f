//! Exhaustive and search-based evaluation of the nullspace property.

use rayon::prelude::*;

use super::{check_sensing, normalized_sensing, NullspaceVerdict, VerdictStatus, GOOD_MARGIN};
use crate::engine::lp::{solve_lp, LpBuilder, LpOptions, Sense};
use crate::engine::SolveStatus;
use crate::error::Result;
use crate::linalg::{self, gaussian_vector, Mat, Vector};
use crate::norms::{self, VectorNorm};
use crate::recovery::norm_epigraph;
use crate::structures::{self, best_sparse_approx, GroupStructure, Projector, ProjectorFamily, SparsityStructure};
use crate::trial_rng;

#[derive(Debug, Clone, Copy)]
pub struct BruteForceOptions {
    /// Cap on the number of linear programs in the exact enumerations.
    pub max_lps: usize,
    pub ascent_starts: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    pub lp: LpOptions,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions {
            max_lps: 200_000,
            ascent_starts: 64,
            ascent_steps: 300,
            seed: 0,
            lp: LpOptions::default(),
        }
    }
}

pub const MAX_PLAIN_DIM: usize = 20;
pub const MAX_GROUP_BLOCKS: usize = 12;

fn unknown(lo: f64, why: String) -> NullspaceVerdict {
    NullspaceVerdict {
        status: VerdictStatus::Unknown,
        gamma_lo: lo,
        gamma_hi: 1.0,
        witness: None,
        projector: None,
        explanation: Some(why),
    }
}

fn exact_verdict(gamma: f64, witness: Vector, projector: Projector) -> NullspaceVerdict {
    if gamma < 0.5 - GOOD_MARGIN {
        NullspaceVerdict {
            status: VerdictStatus::CertifiedGood,
            gamma_lo: gamma,
            gamma_hi: gamma,
            witness: None,
            projector: None,
            explanation: None,
        }
    } else {
        NullspaceVerdict {
            status: VerdictStatus::CertifiedBad,
            gamma_lo: gamma,
            gamma_hi: gamma,
            witness: Some(witness),
            projector: Some(projector),
            explanation: None,
        }
    }
}

fn trivially_good() -> NullspaceVerdict {
    exact_verdict(0.0, Vector::zeros(0), Projector::Support(Vec::new()))
}

/// Evaluate the nullspace property of `A` for the structure at level `s`.
///
/// Plain: the exact `gamma_s(A) = max { ||x||_{s,1} : Ax = 0, ||x||_1 <= 1 }`
/// from one LP per signed support. Group with `l1`/`linf` blocks: the exact
/// analogue from one LP per maximal block set and dual extreme point. Group
/// with `l2` blocks and low rank: multi-start ascent, which can only prove
/// the property false.
pub fn gamma_s_bruteforce(
    a: &Mat,
    structure: &SparsityStructure,
    s: f64,
    opts: &BruteForceOptions,
) -> Result<NullspaceVerdict> {
    check_sensing(a, structure)?;
    let rep = structure.representation();
    let an = normalized_sensing(a, structure, &rep);
    let kernel = linalg::kernel_basis(&an);
    if kernel.ncols() == 0 {
        return Ok(trivially_good());
    }
    match structure {
        SparsityStructure::Plain { n } => plain(&an, *n, s, opts),
        SparsityStructure::Group(g) => {
            if g.num_blocks() > MAX_GROUP_BLOCKS {
                return Ok(unknown(
                    0.0,
                    format!("group enumeration is limited to {MAX_GROUP_BLOCKS} blocks, got {}", g.num_blocks()),
                ));
            }
            if g.block_norms.iter().any(|nm| *nm == VectorNorm::L2) {
                let (lo, z, p) = ratio_ascent(structure, &rep.matrix, &kernel, s, opts);
                if lo >= 0.5 {
                    return Ok(bad_from_search(lo, z, p));
                }
                return Ok(unknown(lo, "l2 blocks: ascent over the kernel gives only a lower bound".into()));
            }
            group_polyhedral(&an, structure, g, &rep.matrix, s, opts)
        }
        SparsityStructure::LowRank(_) => {
            let (lo, z, p) = ratio_ascent(structure, &Mat::identity(an.ncols(), an.ncols()), &kernel, s, opts);
            if lo >= 0.5 {
                // Witness in the caller's coordinates.
                let z_user = rep.matrix.transpose() * z;
                return Ok(bad_from_search(lo, z_user, p));
            }
            Ok(unknown(lo, "low rank: no kernel element with 2 Sigma_s(z) >= ||z||_* found".into()))
        }
    }
}

fn bad_from_search(lo: f64, z: Vector, p: Projector) -> NullspaceVerdict {
    NullspaceVerdict {
        status: VerdictStatus::CertifiedBad,
        gamma_lo: lo,
        gamma_hi: 1.0,
        witness: Some(z),
        projector: Some(p),
        explanation: Some("violation found by kernel search".into()),
    }
}

/// Deterministic parallel argmax: larger value wins, ties go to the lower index.
fn best_of<T: Send>(items: Vec<(f64, T)>) -> Option<(usize, f64, T)> {
    items
        .into_iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64, T)>, (i, (v, t))| match best {
            Some((_, bv, _)) if bv >= v => best,
            _ => Some((i, v, t)),
        })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn plain(a: &Mat, n: usize, s: f64, opts: &BruteForceOptions) -> Result<NullspaceVerdict> {
    let k = norms::floor_level(s).min(n);
    if k == 0 {
        return Ok(trivially_good());
    }
    if n > MAX_PLAIN_DIM {
        return Ok(unknown(0.0, format!("plain enumeration is limited to n <= {MAX_PLAIN_DIM}, got {n}")));
    }
    let count = binomial(n, k) * f64::powi(2.0, k as i32 - 1);
    if count > opts.max_lps as f64 {
        return Ok(unknown(0.0, format!("{count} LPs exceed the budget of {}", opts.max_lps)));
    }
    let supports = structures::combinations(n, k);
    let jobs: Vec<(usize, u64)> = supports
        .iter()
        .enumerate()
        .flat_map(|(i, _)| (0..1u64 << (k - 1)).map(move |m| (i, m)))
        .collect();
    let m = a.nrows();
    let results: Vec<(f64, Vector)> = jobs
        .par_iter()
        .map(|&(i, mask)| {
            let support = &supports[i];
            let mut lp = LpBuilder::new();
            let xp: Vec<usize> = (0..n).map(|_| lp.var(0.0, f64::INFINITY, 0.0)).collect();
            let xm: Vec<usize> = (0..n).map(|_| lp.var(0.0, f64::INFINITY, 0.0)).collect();
            for (pos, &j) in support.iter().enumerate() {
                // The first sign is fixed by the symmetry x -> -x.
                let sign = if pos > 0 && mask >> (pos - 1) & 1 == 1 { -1.0 } else { 1.0 };
                lp.set_cost(xp[j], -sign);
                lp.set_cost(xm[j], sign);
            }
            for r in 0..m {
                let mut coeffs = Vec::with_capacity(2 * n);
                for j in 0..n {
                    if a[(r, j)] != 0.0 {
                        coeffs.push((xp[j], a[(r, j)]));
                        coeffs.push((xm[j], -a[(r, j)]));
                    }
                }
                lp.row(coeffs, Sense::Eq, 0.0);
            }
            lp.row(xp.iter().chain(&xm).map(|&v| (v, 1.0)).collect(), Sense::Le, 1.0);
            let sol = solve_lp(&lp.build(), &opts.lp).expect("well-formed LP");
            debug_assert_eq!(sol.report.status, SolveStatus::Optimal);
            let x = Vector::from_fn(n, |j, _| sol.x[xp[j]] - sol.x[xm[j]]);
            (-sol.report.objective, x)
        })
        .collect();
    let (idx, gamma, x) = best_of(results).expect("at least one support");
    let support = supports[jobs[idx].0].clone();
    Ok(exact_verdict(gamma.max(0.0), x, Projector::Support(support)))
}

/// Extreme points of the dual unit ball of a block norm, as `(index, sign)`
/// choices: sign vectors for `l1`, signed unit vectors for `linf`.
fn dual_extreme_count(norm: VectorNorm, d: usize) -> usize {
    match norm {
        VectorNorm::L1 => 1 << d,
        VectorNorm::Linf => 2 * d,
        VectorNorm::L2 => unreachable!("l2 has no finite extreme point set"),
    }
}

fn dual_extreme_point(norm: VectorNorm, d: usize, choice: usize) -> Vec<f64> {
    match norm {
        VectorNorm::L1 => (0..d).map(|i| if choice >> i & 1 == 1 { -1.0 } else { 1.0 }).collect(),
        VectorNorm::Linf => {
            let mut g = vec![0.0; d];
            g[choice / 2] = if choice % 2 == 1 { -1.0 } else { 1.0 };
            g
        }
        VectorNorm::L2 => unreachable!(),
    }
}

fn group_polyhedral(
    a: &Mat,
    structure: &SparsityStructure,
    g: &GroupStructure,
    bm: &Mat,
    s: f64,
    opts: &BruteForceOptions,
) -> Result<NullspaceVerdict> {
    let ProjectorFamily::Finite(family) = structures::enumerate_projectors(structure, s) else {
        return Ok(unknown(0.0, "projector family is not enumerable".into()));
    };
    let sets: Vec<Vec<usize>> = family
        .into_iter()
        .filter_map(|p| match p {
            Projector::Blocks(set) if !set.is_empty() => Some(set),
            _ => None,
        })
        .collect();
    if sets.is_empty() {
        return Ok(trivially_good());
    }
    // Mixed-radix job indexing. The problem is invariant under z -> -z, which
    // negates every chosen extreme point, so the first block's leading sign
    // (lowest bit of its choice) can be fixed.
    let sizes = g.block_sizes();
    let radices: Vec<Vec<usize>> = sets
        .iter()
        .map(|set| {
            set.iter()
                .enumerate()
                .map(|(pos, &l)| {
                    let r = dual_extreme_count(g.block_norms[l], sizes[l]);
                    if pos == 0 { r / 2 } else { r }
                })
                .collect()
        })
        .collect();
    let counts: Vec<f64> = radices.iter().map(|r| r.iter().map(|&x| x as f64).product()).collect();
    let total: f64 = counts.iter().sum();
    if total > opts.max_lps as f64 {
        return Ok(unknown(0.0, format!("{total} LPs exceed the budget of {}", opts.max_lps)));
    }
    let mut jobs = Vec::with_capacity(total as usize);
    for (si, c) in counts.iter().enumerate() {
        for j in 0..*c as usize {
            jobs.push((si, j));
        }
    }
    let n = a.ncols();
    let results: Vec<(f64, Vector)> = jobs
        .par_iter()
        .map(|&(si, mut code)| {
            let set = &sets[si];
            let mut lp = LpBuilder::new();
            let z: Vec<usize> = (0..n).map(|_| lp.free_var(0.0)).collect();
            let t = norm_epigraph(&mut lp, &z, bm, structure, 0.0);
            lp.row(t.iter().map(|&v| (v, 1.0)).collect(), Sense::Le, 1.0);
            for r in 0..a.nrows() {
                lp.row((0..n).filter(|&j| a[(r, j)] != 0.0).map(|j| (z[j], a[(r, j)])).collect(), Sense::Eq, 0.0);
            }
            let mut cost = vec![0.0; n];
            for (pos, &l) in set.iter().enumerate() {
                let radix = radices[si][pos];
                let mut choice = code % radix;
                code /= radix;
                if pos == 0 {
                    // Lowest bit clear: first sign positive.
                    choice *= 2;
                }
                let gvec = dual_extreme_point(g.block_norms[l], sizes[l], choice);
                for (off, gi) in gvec.iter().enumerate() {
                    let row = g.block_range(l).start + off;
                    for j in 0..n {
                        cost[j] -= gi * bm[(row, j)];
                    }
                }
            }
            for j in 0..n {
                lp.set_cost(z[j], cost[j]);
            }
            let sol = solve_lp(&lp.build(), &opts.lp).expect("well-formed LP");
            debug_assert_eq!(sol.report.status, SolveStatus::Optimal);
            (-sol.report.objective, Vector::from_fn(n, |j, _| sol.x[z[j]]))
        })
        .collect();
    let (idx, gamma, z) = best_of(results).expect("at least one job");
    Ok(exact_verdict(gamma.max(0.0), z, Projector::Blocks(sets[jobs[idx].0].clone())))
}

fn norm_subgradient(norm: VectorNorm, v: &[f64]) -> Vec<f64> {
    match norm {
        VectorNorm::L1 => v.iter().map(|x| if *x > 0.0 { 1.0 } else if *x < 0.0 { -1.0 } else { 0.0 }).collect(),
        VectorNorm::L2 => {
            let nv = VectorNorm::L2.eval(v);
            if nv == 0.0 {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|x| x / nv).collect()
            }
        }
        VectorNorm::Linf => {
            let mut g = vec![0.0; v.len()];
            if let Some((i, x)) = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())) {
                if *x != 0.0 {
                    g[i] = x.signum();
                }
            }
            g
        }
    }
}

/// Ratio `||PBz|| / ||Bz||` at the best projector, with the gradient of the
/// ratio with respect to `w = Bz`.
fn ratio_and_gradient(structure: &SparsityStructure, w: &Vector, s: f64) -> (f64, Vector, Projector) {
    match structure {
        SparsityStructure::Group(g) => {
            let total = norms::structure_norm(structure, w, false);
            let approx = best_sparse_approx(structure, w, s).expect("dimensions checked");
            let Projector::Blocks(set) = &approx.projector else { unreachable!() };
            if total == 0.0 {
                return (0.0, Vector::zeros(w.len()), approx.projector);
            }
            let ratio = (total - approx.delta_x) / total;
            let mut grad = Vector::zeros(w.len());
            for l in 0..g.num_blocks() {
                let range = g.block_range(l);
                let sg = norm_subgradient(g.block_norms[l], &w.as_slice()[range.clone()]);
                let coef = if set.contains(&l) { 1.0 - ratio } else { -ratio };
                for (i, v) in range.zip(sg) {
                    grad[i] = coef * v / total;
                }
            }
            (ratio, grad, approx.projector)
        }
        SparsityStructure::LowRank(shape) => {
            let k = norms::floor_level(s).min(shape.q);
            let d = linalg::svd(&linalg::unvec(w, shape.p, shape.q));
            let total: f64 = d.singular_values.iter().sum();
            let right = d.v_t.rows(0, k).transpose();
            let projector = Projector::LowRank { left: d.u.columns(0, k).into_owned(), right };
            if total == 0.0 {
                return (0.0, Vector::zeros(w.len()), projector);
            }
            let top: f64 = d.singular_values.iter().take(k).sum();
            let ratio = top / total;
            let tol = 1e-12 * d.singular_values[0];
            let mut grad = Mat::zeros(shape.p, shape.q);
            for (i, &sv) in d.singular_values.iter().enumerate() {
                if sv <= tol {
                    break;
                }
                let coef = if i < k { 1.0 - ratio } else { -ratio };
                grad += d.u.column(i) * d.v_t.row(i) * (coef / total);
            }
            (ratio, linalg::vec_of(&grad), projector)
        }
        SparsityStructure::Plain { .. } => unreachable!("plain is handled exactly"),
    }
}

/// Multi-start normalized gradient ascent of the ratio over `z = N t`.
fn ratio_ascent(
    structure: &SparsityStructure,
    bm: &Mat,
    kernel: &Mat,
    s: f64,
    opts: &BruteForceOptions,
) -> (f64, Vector, Projector) {
    let d = kernel.ncols();
    let bn = bm * kernel;
    let bnt = bn.transpose();
    let starts = opts.ascent_starts + d;
    let runs: Vec<(f64, (Vector, Projector))> = (0..starts)
        .into_par_iter()
        .map(|start| {
            let mut t = if start < d {
                Vector::from_fn(d, |i, _| if i == start { 1.0 } else { 0.0 })
            } else {
                let mut rng = trial_rng(opts.seed, start as u64);
                gaussian_vector(&mut rng, d)
            };
            t /= t.norm().max(f64::MIN_POSITIVE);
            let (mut best, _, mut best_p) = ratio_and_gradient(structure, &(&bn * &t), s);
            let mut best_t = t.clone();
            for step in 1..=opts.ascent_steps {
                let (_, grad_w, _) = ratio_and_gradient(structure, &(&bn * &t), s);
                let g = &bnt * grad_w;
                let gn = g.norm();
                if gn < 1e-14 {
                    break;
                }
                t += g * (0.3 / (step as f64).sqrt() / gn);
                t /= t.norm();
                let (r, _, p) = ratio_and_gradient(structure, &(&bn * &t), s);
                if r > best {
                    best = r;
                    best_t = t.clone();
                    best_p = p;
                }
            }
            (best, (kernel * best_t, best_p))
        })
        .collect();
    let (_, value, (z, p)) = best_of(runs).expect("at least one start");
    (value, z, p)
}
