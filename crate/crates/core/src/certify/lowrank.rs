//! Verifiable conditions for nuclear-norm recovery.
//!
//! Operators `W : R^{p x q} -> R^{p x q}` are `pq x pq` matrices acting on
//! column-major vectorizations. `Theta[W]` is the `pq x pq` matrix with
//! `<Theta[W], h^T (x) z> = Tr((W z) h^T)` (Frobenius pairing), where
//! `h^T (x) z` has `p x q` blocks `h_{nu mu} z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_sensing, normalized_sensing, Certificate, Method};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Mat};
use crate::norms::{self, NormTag, VectorNorm};
use crate::recovery::vector_phi;
use crate::structures::{RepresentationMap, SparsityStructure};

fn check_square(context: &'static str, m: &Mat, p: usize, q: usize) -> Result<()> {
    check_dim(context, p * q, m.nrows())?;
    check_dim(context, p * q, m.ncols())
}

/// Sparsity level as a positive integer.
fn level(s: f64) -> Result<usize> {
    if s >= 1.0 && s.fract() == 0.0 && s.is_finite() {
        Ok(s as usize)
    } else {
        Err(Error::InvalidInput(format!("low-rank certificates need an integer s >= 1, got {s}")))
    }
}

/// `Theta[W]`: entry `(j p + k, i q + l)` is `W[i + j p, k + l p]`.
pub fn theta(w: &Mat, p: usize, q: usize) -> Result<Mat> {
    check_square("theta operator", w, p, q)?;
    let mut t = Mat::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            for k in 0..p {
                for l in 0..q {
                    t[(j * p + k, i * q + l)] = w[(i + j * p, k + l * p)];
                }
            }
        }
    }
    Ok(t)
}

/// Inverse (and adjoint) of [`theta`]; `theta` only permutes entries.
pub fn theta_inverse(t: &Mat, p: usize, q: usize) -> Result<Mat> {
    check_square("theta matrix", t, p, q)?;
    let mut w = Mat::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            for k in 0..p {
                for l in 0..q {
                    w[(i + j * p, k + l * p)] = t[(j * p + k, i * q + l)];
                }
            }
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rearrangement {
    /// `h^T (x) w -> h (x) w`, a `p^2 x q^2` matrix.
    Mprime,
    /// `h^T (x) w -> f(h) g(w)^T` with `f(h) = vec(h^T)`, `g(w) = vec(w)`.
    Mdprime,
}

impl Rearrangement {
    fn shape(self, p: usize, q: usize) -> (usize, usize) {
        match self {
            Rearrangement::Mprime => (p * p, q * q),
            Rearrangement::Mdprime => (p * q, p * q),
        }
    }

    /// Target position of source entry `(mu p + k, nu q + l)`.
    fn target(self, p: usize, q: usize, mu: usize, nu: usize, k: usize, l: usize) -> (usize, usize) {
        match self {
            Rearrangement::Mprime => (nu * p + k, mu * q + l),
            Rearrangement::Mdprime => (nu * q + mu, k + l * p),
        }
    }
}

/// Apply `M'` or `M''` to a `pq x pq` matrix.
pub fn rearrange(u: &Mat, p: usize, q: usize, which: Rearrangement) -> Result<Mat> {
    check_square("rearrangement input", u, p, q)?;
    let (r, c) = which.shape(p, q);
    let mut out = Mat::zeros(r, c);
    for mu in 0..q {
        for nu in 0..p {
            for k in 0..p {
                for l in 0..q {
                    out[which.target(p, q, mu, nu, k, l)] = u[(mu * p + k, nu * q + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Inverse (and adjoint) of [`rearrange`].
pub fn rearrange_inverse(x: &Mat, p: usize, q: usize, which: Rearrangement) -> Result<Mat> {
    let (r, c) = which.shape(p, q);
    check_dim("rearranged rows", r, x.nrows())?;
    check_dim("rearranged cols", c, x.ncols())?;
    let mut u = Mat::zeros(p * q, p * q);
    for mu in 0..q {
        for nu in 0..p {
            for k in 0..p {
                for l in 0..q {
                    u[(mu * p + k, nu * q + l)] = x[which.target(p, q, mu, nu, k, l)];
                }
            }
        }
    }
    Ok(u)
}

/// `Sigma_k(x)` and a subgradient `sum_{i<k} u_i v_i^T`.
fn sigma_with_subgradient(x: &Mat, k: usize) -> (f64, Mat) {
    let d = linalg::svd(x);
    let k = k.min(d.singular_values.len());
    let value = d.singular_values[..k].iter().sum();
    let g = d.u.columns(0, k) * d.v_t.rows(0, k);
    (value, g)
}

/// `Sigma_s(Theta[W]) + Sigma_{2s}(Theta[W])`: the relaxation of the
/// condition over the sets `{U : ||U||_* <= k, ||U||_2 <= 1}`.
pub fn opt_bar(w: &Mat, p: usize, q: usize, s: f64) -> Result<f64> {
    let s = level(s)?;
    let t = theta(w, p, q)?;
    let sv = linalg::singular_values(&t);
    Ok(sv.iter().take(s).sum::<f64>() + sv.iter().take(2 * s).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptStarOptions {
    pub iterations: usize,
    /// Step `c / sqrt(t)` with `c = step_scale * ||Theta||_F`.
    pub step_scale: f64,
}

impl Default for OptStarOptions {
    fn default() -> Self {
        Self {
            iterations: 2000,
            step_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptStar {
    /// Sum of the two support-function bounds.
    pub value: f64,
    /// Bounds for `k = s` and `k = 2s`.
    pub per_k: [f64; 2],
    /// `opt_bar`, the value at the zero splitting.
    pub bar: f64,
    pub iterations: usize,
}

/// Dual objective at a splitting `Theta = Theta_1 + Theta_2 + Theta_3`:
/// `Sigma_k(Theta_1) + Sigma_k(M'(Theta_2)) + sqrt(k) ||M''(Theta_3)||_2`.
/// Every splitting bounds the support function of the set
/// `Z*_k = { ||U||_* <= k, ||U||_2 <= 1, ||M'U||_* <= k, ||M'U||_2 <= 1, ||M''U||_* <= sqrt(k) }`
/// at `Theta` from above.
pub fn opt_star_split(t: &Mat, p: usize, q: usize, k: usize, t2: &Mat, t3: &Mat) -> Result<f64> {
    check_square("theta matrix", t, p, q)?;
    check_square("split part", t2, p, q)?;
    check_square("split part", t3, p, q)?;
    Ok(split_value(t, p, q, k, t2, t3).0)
}

/// Value and subgradients with respect to `(Theta_2, Theta_3)`.
fn split_value(t: &Mat, p: usize, q: usize, k: usize, t2: &Mat, t3: &Mat) -> (f64, Mat, Mat) {
    let (f1, g1) = sigma_with_subgradient(&(t - t2 - t3), k);
    let m2 = rearrange(t2, p, q, Rearrangement::Mprime).expect("square");
    let (f2, g2) = sigma_with_subgradient(&m2, k);
    let m3 = rearrange(t3, p, q, Rearrangement::Mdprime).expect("square");
    let (f3, g3) = sigma_with_subgradient(&m3, 1);
    let rk = (k as f64).sqrt();
    let d2 = rearrange_inverse(&g2, p, q, Rearrangement::Mprime).expect("shape") - &g1;
    let d3 = rearrange_inverse(&g3, p, q, Rearrangement::Mdprime).expect("shape") * rk - &g1;
    (f1 + f2 + rk * f3, d2, d3)
}

/// Normalized subgradient descent over `(Theta_2, Theta_3)` from zero with
/// best-iterate tracking. Every iterate is a valid upper bound.
fn support_star(t: &Mat, p: usize, q: usize, k: usize, opts: &OptStarOptions) -> f64 {
    let n = p * q;
    let mut t2 = Mat::zeros(n, n);
    let mut t3 = Mat::zeros(n, n);
    let c = opts.step_scale * t.norm();
    let mut best = f64::INFINITY;
    for it in 0..=opts.iterations {
        let (value, d2, d3) = split_value(t, p, q, k, &t2, &t3);
        best = best.min(value);
        let gnorm = (d2.norm_squared() + d3.norm_squared()).sqrt();
        if it == opts.iterations || gnorm < 1e-14 || c == 0.0 {
            break;
        }
        let step = c / ((it + 1) as f64).sqrt() / gnorm;
        t2 -= d2 * step;
        t3 -= d3 * step;
    }
    best
}

/// Upper bound on `max { Sigma_s(Wz) + Sigma_{2s}(Wz) : ||z||_* <= 1 }` via
/// the sets `Z*_s` and `Z*_{2s}`, each support function bounded separately.
pub fn opt_star(w: &Mat, p: usize, q: usize, s: f64, opts: &OptStarOptions) -> Result<OptStar> {
    let s = level(s)?;
    let t = theta(w, p, q)?;
    let sv = linalg::singular_values(&t);
    let bar = sv.iter().take(s).sum::<f64>() + sv.iter().take(2 * s).sum::<f64>();
    let a = support_star(&t, p, q, s, opts);
    let b = support_star(&t, p, q, 2 * s, opts);
    Ok(OptStar {
        value: a + b,
        per_k: [a, b],
        bar,
        iterations: opts.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowRankOptions {
    /// Descent iterations for `opt_star`; zero reports `opt_bar`.
    pub iterations: usize,
    pub step_scale: f64,
    /// Subgradient steps on `opt_bar` over `H` from each candidate.
    pub polish_steps: usize,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        Self {
            iterations: 2000,
            step_scale: 0.1,
            polish_steps: 0,
        }
    }
}

impl LowRankOptions {
    fn star(&self) -> OptStarOptions {
        OptStarOptions {
            iterations: self.iterations,
            step_scale: self.step_scale,
        }
    }
}

/// Candidate `H` matrices (`m x pq`) for a sensing matrix `A` in normalized
/// coordinates: `H^T = A^+`, and `H^T = c A^T` with `c` minimizing
/// `||I - c A^T A||_F`.
pub fn default_candidates(a: &Mat) -> Vec<Mat> {
    let mut out = vec![linalg::pinv(a).transpose()];
    let ata = a.transpose() * a;
    let denom = ata.norm_squared();
    if denom > 0.0 {
        out.push(a * (ata.trace() / denom));
    }
    out
}

/// `beta` for `H^T`: exact `max_i Sigma_s + Sigma_{2s}` of the columns when
/// `phi = l1`, otherwise `(sqrt(s) + sqrt(2s)) ||H^T||_{phi -> 2}`.
fn lowrank_beta(hs: &Mat, p: usize, q: usize, s: usize, phi: NormTag) -> Result<(f64, bool)> {
    if phi == NormTag::L1 {
        let beta = hs
            .column_iter()
            .map(|c| {
                let z = linalg::unvec(&c.into_owned(), p, q);
                let sv = linalg::singular_values(&z);
                sv.iter().take(s).sum::<f64>() + sv.iter().take(2 * s).sum::<f64>()
            })
            .fold(0.0, f64::max);
        return Ok((beta, true));
    }
    let ind = norms::induced_norm(hs, vector_phi(phi)?, VectorNorm::L2);
    let sf = s as f64;
    Ok(((sf.sqrt() + (2.0 * sf).sqrt()) * ind.value, false))
}

/// Subgradient descent on `H^T -> opt_bar(I - H^T A)`; returns the best
/// iterate.
fn polish(hs: &Mat, a: &Mat, p: usize, q: usize, s: usize, steps: usize) -> Mat {
    let n = p * q;
    let eval = |h: &Mat| {
        let t = theta(&(Mat::identity(n, n) - h * a), p, q).expect("square");
        let (f1, g1) = sigma_with_subgradient(&t, s);
        let (f2, g2) = sigma_with_subgradient(&t, 2 * s);
        (f1 + f2, g1 + g2)
    };
    let mut h = hs.clone();
    let mut best = (eval(&h).0, h.clone());
    let c = 0.1 * hs.norm().max(1.0);
    for t in 0..steps {
        let (value, g) = eval(&h);
        if value < best.0 {
            best = (value, h.clone());
        }
        let grad = -theta_inverse(&g, p, q).expect("square") * a.transpose();
        let gn = grad.norm();
        if gn < 1e-14 {
            break;
        }
        h -= grad * (c / ((t + 1) as f64).sqrt() / gn);
    }
    if eval(&h).0 < best.0 {
        best.1 = h;
    }
    best.1
}

/// Certificate for the nuclear-norm structure from a set of candidate `H`
/// (each `m x pq`, defaults from [`default_candidates`]); the candidate
/// with the smallest `gamma` wins, ties going to smaller `beta`.
pub fn certify_lowrank(
    a: &Mat,
    b: &RepresentationMap,
    structure: &SparsityStructure,
    s: f64,
    phi: NormTag,
    candidates: Option<&[Mat]>,
    opts: &LowRankOptions,
) -> Result<Certificate> {
    let SparsityStructure::LowRank(shape) = structure else {
        return Err(Error::Unsupported(format!(
            "low-rank certificates need a lowrank structure, got {}",
            structure.kind_name()
        )));
    };
    check_sensing(a, structure)?;
    let k = level(s)?;
    let (p, q) = (shape.p, shape.q);
    let n = p * q;
    let an = normalized_sensing(a, structure, b);
    let mut list: Vec<Mat> = match candidates {
        Some(c) if c.is_empty() => return Err(Error::InvalidInput("empty candidate list".into())),
        Some(c) => c.to_vec(),
        None => default_candidates(&an),
    };
    for h in &list {
        check_dim("candidate rows", a.nrows(), h.nrows())?;
        check_dim("candidate cols", n, h.ncols())?;
    }
    if opts.polish_steps > 0 {
        let polished: Vec<Mat> = list
            .iter()
            .map(|h| polish(&h.transpose(), &an, p, q, k, opts.polish_steps).transpose())
            .collect();
        list.extend(polished);
    }
    let evaluated: Vec<Result<(f64, f64, f64, bool, Mat)>> = list
        .par_iter()
        .map(|h| {
            let hs = h.transpose();
            let w = Mat::identity(n, n) - &hs * &an;
            let (gamma, bar) = if opts.iterations == 0 {
                let bar = opt_bar(&w, p, q, s)?;
                (bar, bar)
            } else {
                let star = opt_star(&w, p, q, s, &opts.star())?;
                (star.value, star.bar)
            };
            let (beta, beta_exact) = lowrank_beta(&hs, p, q, k, phi)?;
            Ok((gamma, bar, beta, beta_exact, w))
        })
        .collect();
    let mut best: Option<(usize, (f64, f64, f64, bool, Mat))> = None;
    for (i, r) in evaluated.into_iter().enumerate() {
        let r = r?;
        let better = match &best {
            None => true,
            Some((_, cur)) => r.0 < cur.0 || (r.0 == cur.0 && r.2 < cur.2),
        };
        if better {
            best = Some((i, r));
        }
    }
    let (idx, (gamma, bar, beta, beta_exact, w)) = best.expect("nonempty candidates");
    let method = if opts.iterations == 0 {
        Method::LowRankUBar
    } else {
        Method::LowRankUStar
    };
    let mut notes = vec![format!("candidate {idx}"), format!("gamma_bar = {bar:e}")];
    if !beta_exact {
        notes.push("beta is a Frobenius upper bound".into());
    }
    Ok(Certificate {
        method,
        gamma,
        beta,
        s,
        phi,
        valid: gamma < 1.0,
        exact: beta_exact && method == Method::LowRankUBar,
        h: Some(list.swap_remove(idx)),
        w: Some(w),
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadNews {
    /// `opt_bar(I - H^T A)`.
    pub lhs: f64,
    /// `min(2s sqrt(d / pq), sqrt(d))` with `d = dim Ker(A)`.
    pub floor: f64,
    pub kernel_dim: usize,
    pub holds: bool,
}

/// Compare `opt_bar(I - H^T A)` with the kernel-dimension floor that limits
/// the `opt_bar` relaxation. `a` and `h` are `m x pq`.
pub fn badnews_check(a: &Mat, h: &Mat, s: f64, p: usize, q: usize) -> Result<BadNews> {
    let n = p * q;
    check_dim("sensing matrix columns", n, a.ncols())?;
    check_dim("H rows", a.nrows(), h.nrows())?;
    check_dim("H cols", n, h.ncols())?;
    let w = Mat::identity(n, n) - h.transpose() * a;
    let lhs = opt_bar(&w, p, q, s)?;
    let d = n - linalg::rank(a);
    let df = d as f64;
    let floor = (2.0 * s * (df / n as f64).sqrt()).min(df.sqrt());
    Ok(BadNews {
        lhs,
        floor,
        kernel_dim: d,
        holds: lhs >= floor - 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{build_structure, StructureSpec};
    use crate::trial_rng;
    use nalgebra::dmatrix;
    use rand::Rng;

    /// `h^T (x) z` built from its block description.
    fn kron_t(h: &Mat, z: &Mat) -> Mat {
        let (p, q) = z.shape();
        let mut out = Mat::zeros(p * q, p * q);
        for mu in 0..q {
            for nu in 0..p {
                out.view_mut((mu * p, nu * q), (p, q)).copy_from(&(z * h[(nu, mu)]));
            }
        }
        out
    }

    fn vec_of(m: &Mat) -> crate::linalg::Vector {
        linalg::vec_of(m)
    }

    #[test]
    fn theta_identity_is_permutation() {
        let e = theta(&Mat::identity(4, 4), 2, 2).unwrap();
        for r in 0..4 {
            assert_eq!(e.row(r).sum(), 1.0);
            assert_eq!(e.column(r).sum(), 1.0);
        }
        // Block (mu, nu) has its single one at (nu, mu).
        for mu in 0..2 {
            for nu in 0..2 {
                assert_eq!(e[(mu * 2 + nu, nu * 2 + mu)], 1.0);
            }
        }
        assert_eq!(opt_bar(&Mat::identity(4, 4), 2, 2, 1.0).unwrap(), 3.0);
        assert_eq!(theta(&Mat::zeros(6, 6), 3, 2).unwrap(), Mat::zeros(6, 6));
        assert_eq!(opt_bar(&Mat::zeros(6, 6), 3, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_bilinearity() {
        let mut rng = trial_rng(40, 0);
        for _ in 0..100 {
            let p = rng.random_range(1..=4);
            let q = rng.random_range(1..=p);
            let w = linalg::gaussian_matrix(&mut rng, p * q, p * q);
            let h = linalg::gaussian_matrix(&mut rng, p, q);
            let z = linalg::gaussian_matrix(&mut rng, p, q);
            let t = theta(&w, p, q).unwrap();
            let lhs = linalg::frobenius_inner(&t, &kron_t(&h, &z));
            let wz = linalg::unvec(&(&w * vec_of(&z)), p, q);
            let rhs = (wz * h.transpose()).trace();
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            assert_eq!(theta_inverse(&t, p, q).unwrap(), w);
        }
    }

    #[test]
    fn rearrangement_examples() {
        let one = dmatrix![2.5];
        for which in [Rearrangement::Mprime, Rearrangement::Mdprime] {
            assert_eq!(rearrange(&one, 1, 1, which).unwrap(), one);
        }
        let (a, b, c, d) = (2.0, 3.0, 5.0, 7.0);
        let h = dmatrix![a; b];
        let z = dmatrix![c; d];
        let k = kron_t(&h, &z);
        assert_eq!(k, dmatrix![a * c, b * c; a * d, b * d]);
        assert_eq!(
            rearrange(&k, 2, 1, Rearrangement::Mprime).unwrap(),
            dmatrix![a * c; a * d; b * c; b * d]
        );
    }

    #[test]
    fn rearrangement_identities() {
        let mut rng = trial_rng(41, 0);
        for _ in 0..100 {
            let p = rng.random_range(1..=4);
            let q = rng.random_range(1..=p);
            let h = linalg::gaussian_matrix(&mut rng, p, q);
            let w = linalg::gaussian_matrix(&mut rng, p, q);
            let m = kron_t(&h, &w);
            let mp = rearrange(&m, p, q, Rearrangement::Mprime).unwrap();
            assert!((mp - h.kronecker(&w)).amax() < 1e-12);
            let f = linalg::vec_of(&h.transpose());
            let g = linalg::vec_of(&w);
            let mdp = rearrange(&m, p, q, Rearrangement::Mdprime).unwrap();
            assert!((mdp.clone() - &f * g.transpose()).amax() < 1e-12);
            assert_eq!(rearrange_inverse(&mdp, p, q, Rearrangement::Mdprime).unwrap(), m);
        }
    }

    #[test]
    fn mdprime_norm_bound() {
        let mut rng = trial_rng(42, 0);
        for _ in 0..100 {
            let p = rng.random_range(1..=4);
            let q = rng.random_range(1..=p);
            let k = rng.random_range(1..=q);
            let a = linalg::random_orthonormal(&mut rng, p, k);
            let b = linalg::random_orthonormal(&mut rng, q, k);
            let h = &a * b.transpose();
            let u = linalg::gaussian_vector(&mut rng, p).normalize();
            let v = linalg::gaussian_vector(&mut rng, q).normalize();
            let w = &u * v.transpose();
            let m = rearrange(&kron_t(&h, &w), p, q, Rearrangement::Mdprime).unwrap();
            assert!(linalg::nuclear_norm(&m) <= (k as f64).sqrt() + 1e-9);
        }
    }

    /// `Sigma_s(Wz) + Sigma_{2s}(Wz)` for unit rank-one `z`: a lower bound on
    /// every relaxation, computed without `Theta`.
    fn sampled_primal<R: Rng>(rng: &mut R, w: &Mat, p: usize, q: usize, s: usize, draws: usize) -> f64 {
        (0..draws)
            .map(|_| {
                let u = linalg::gaussian_vector(rng, p).normalize();
                let v = linalg::gaussian_vector(rng, q).normalize();
                let z = &u * v.transpose();
                let wz = linalg::unvec(&(w * linalg::vec_of(&z)), p, q);
                norms::sigma_sum(&wz, s) + norms::sigma_sum(&wz, 2 * s)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn opt_bar_dominates_samples() {
        let mut rng = trial_rng(43, 0);
        let w = linalg::gaussian_matrix(&mut rng, 6, 6);
        let bar = opt_bar(&w, 3, 2, 1.0).unwrap();
        let t = theta(&w, 3, 2).unwrap();
        for _ in 0..1000 {
            let mut total = 0.0;
            for k in [1, 2] {
                let a = linalg::random_orthonormal(&mut rng, 3, k);
                let b = linalg::random_orthonormal(&mut rng, 2, k);
                let h = &a * b.transpose();
                let u = linalg::gaussian_vector(&mut rng, 3).normalize();
                let v = linalg::gaussian_vector(&mut rng, 2).normalize();
                total += linalg::frobenius_inner(&t, &kron_t(&h, &(&u * v.transpose())));
            }
            assert!(total <= bar + 1e-9);
        }
    }

    #[test]
    fn opt_star_brackets() {
        assert_eq!(opt_star(&Mat::zeros(4, 4), 2, 2, 1.0, &Default::default()).unwrap().value, 0.0);
        let id = opt_star(&Mat::identity(4, 4), 2, 2, 1.0, &Default::default()).unwrap();
        assert!(id.value >= 2.0 - 1e-9 && id.value <= 3.0 + 1e-6, "{id:?}");
        let mut rng = trial_rng(44, 0);
        for _ in 0..10 {
            let p = rng.random_range(1..=3);
            let q = rng.random_range(1..=p);
            if p * q < 2 {
                continue;
            }
            let w = linalg::gaussian_matrix(&mut rng, p * q, p * q);
            let star = opt_star(&w, p, q, 1.0, &OptStarOptions { iterations: 300, ..Default::default() }).unwrap();
            let lo = sampled_primal(&mut rng, &w, p, q, 1, 500);
            assert!(star.value >= lo - 1e-6 && star.value <= star.bar + 1e-6);
            assert!((star.bar - opt_bar(&w, p, q, 1.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn split_at_zero_is_opt_bar() {
        let mut rng = trial_rng(45, 0);
        let w = linalg::gaussian_matrix(&mut rng, 9, 9);
        let t = theta(&w, 3, 3).unwrap();
        let z = Mat::zeros(9, 9);
        let v = opt_star_split(&t, 3, 3, 1, &z, &z).unwrap() + opt_star_split(&t, 3, 3, 2, &z, &z).unwrap();
        assert!((v - opt_bar(&w, 3, 3, 1.0).unwrap()).abs() < 1e-12);
    }

    fn lowrank(p: usize, q: usize) -> (SparsityStructure, RepresentationMap) {
        build_structure(&StructureSpec::LowRank { p, q, transposed: false }).unwrap()
    }

    #[test]
    fn certify_examples() {
        let (st, b) = lowrank(2, 2);
        let c = certify_lowrank(&Mat::identity(4, 4), &b, &st, 1.0, NormTag::L1, None, &Default::default()).unwrap();
        assert!(c.gamma.abs() < 1e-10 && c.valid);
        assert!(c.identity_residual(&Mat::identity(4, 4), &b).unwrap() < 1e-10);

        let zero = Mat::zeros(2, 4);
        let ubar = LowRankOptions { iterations: 0, ..Default::default() };
        let c = certify_lowrank(&zero, &b, &st, 1.0, NormTag::L1, None, &ubar).unwrap();
        assert_eq!(c.method, Method::LowRankUBar);
        assert!((c.gamma - 3.0).abs() < 1e-12 && !c.valid);
        assert_eq!(c.beta, 0.0);

        let (st3, b3) = lowrank(3, 2);
        let h0 = [Mat::zeros(2, 6)];
        let a = linalg::gaussian_matrix(&mut trial_rng(46, 0), 2, 6);
        let c = certify_lowrank(&a, &b3, &st3, 2.0, NormTag::L1, Some(&h0), &ubar).unwrap();
        assert_eq!(c.beta, 0.0);
        assert!((c.gamma - 6.0).abs() < 1e-10);
    }

    #[test]
    fn ustar_not_worse_than_ubar() {
        let (st, b) = lowrank(3, 3);
        let a = linalg::gaussian_matrix(&mut trial_rng(47, 0), 7, 9);
        let opts = LowRankOptions { iterations: 200, ..Default::default() };
        let c = certify_lowrank(&a, &b, &st, 1.0, NormTag::L1, None, &opts).unwrap();
        assert_eq!(c.method, Method::LowRankUStar);
        let bar = opt_bar(c.w.as_ref().unwrap(), 3, 3, 1.0).unwrap();
        assert!(c.gamma <= bar + 1e-6);
        assert!(c.identity_residual(&a, &b).unwrap() < 1e-8);
        let l2 = certify_lowrank(&a, &b, &st, 1.0, NormTag::L2, None, &opts).unwrap();
        assert!(!l2.exact && l2.beta >= c.beta - 1e-9);
    }

    #[test]
    fn transposed_identity_holds() {
        let (st, b) = build_structure(&StructureSpec::LowRank { p: 2, q: 3, transposed: false }).unwrap();
        let a = linalg::gaussian_matrix(&mut trial_rng(48, 0), 4, 6);
        let c = certify_lowrank(&a, &b, &st, 1.0, NormTag::L1, None, &LowRankOptions { iterations: 0, ..Default::default() })
            .unwrap();
        assert!(c.identity_residual(&a, &b).unwrap() < 1e-8);
    }

    #[test]
    fn polish_does_not_hurt() {
        let (st, b) = lowrank(2, 2);
        let a = linalg::gaussian_matrix(&mut trial_rng(49, 0), 3, 4);
        let base = LowRankOptions { iterations: 0, ..Default::default() };
        let plain = certify_lowrank(&a, &b, &st, 1.0, NormTag::L1, None, &base).unwrap();
        let pol = certify_lowrank(&a, &b, &st, 1.0, NormTag::L1, None, &LowRankOptions { polish_steps: 50, ..base }).unwrap();
        assert!(pol.gamma <= plain.gamma + 1e-12);
        assert!(pol.identity_residual(&a, &b).unwrap() < 1e-8);
    }

    #[test]
    fn badnews() {
        let r = badnews_check(&Mat::zeros(2, 4), &Mat::zeros(2, 4), 1.0, 2, 2).unwrap();
        assert_eq!(r.floor, 2.0);
        assert_eq!(r.lhs, 3.0);
        assert!(r.holds);
        let r = badnews_check(&Mat::identity(4, 4), &Mat::zeros(4, 4), 1.0, 2, 2).unwrap();
        assert_eq!(r.floor, 0.0);
        assert!(r.holds);
        let mut rng = trial_rng(50, 0);
        let a = linalg::gaussian_matrix(&mut rng, 5, 9);
        let r = badnews_check(&a, &linalg::pinv(&a).transpose(), 1.0, 3, 3).unwrap();
        assert_eq!(r.kernel_dim, 4);
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(opt_bar(&Mat::identity(4, 4), 2, 2, 1.5).is_err());
        assert!(theta(&Mat::identity(3, 3), 2, 2).is_err());
        let (st, b) = build_structure(&StructureSpec::Plain { n: 4 }).unwrap();
        assert!(certify_lowrank(&Mat::identity(4, 4), &b, &st, 1.0, NormTag::L1, None, &Default::default()).is_err());
    }
}
