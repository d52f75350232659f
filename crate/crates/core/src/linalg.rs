//! Dense linear-algebra helpers shared by every module.
//!
//! Matrices living in `R^{p x q}` are flattened column-major, which is the
//! native storage order of [`nalgebra::DMatrix`].

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Thin singular value decomposition with singular values sorted in
/// descending order and a deterministic sign convention: the first entry of
/// each left singular vector whose magnitude exceeds `1e-12` is positive.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub v_t: Mat,
}

const SVD_EPS: f64 = 1e-15;

pub fn svd(m: &Mat) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: Mat::zeros(rows, 0),
            singular_values: Vec::new(),
            v_t: Mat::zeros(0, cols),
        };
    }
    let raw = SVD::try_new(m.clone(), true, true, SVD_EPS, 0)
        .or_else(|| SVD::try_new(m.clone(), true, true, 1e-12, 0))
        .expect("SVD failed to converge");
    let u_raw = raw.u.expect("u requested");
    let vt_raw = raw.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .partial_cmp(&raw.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut u = Mat::zeros(rows, k);
    let mut v_t = Mat::zeros(k, cols);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u_raw.column(src).into_owned();
        let mut vrow = vt_raw.row(src).into_owned();
        if let Some(first) = ucol.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                ucol.neg_mut();
                vrow.neg_mut();
            }
        }
        u.set_column(dst, &ucol);
        v_t.set_row(dst, &vrow);
        singular_values.push(raw.singular_values[src].max(0.0));
    }
    Svd {
        u,
        singular_values,
        v_t,
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .try_svd(false, false, SVD_EPS, 0)
        .or_else(|| m.clone().try_svd(false, false, 1e-12, 0))
        .expect("SVD failed to converge")
        .singular_values
        .iter()
        .map(|x| x.max(0.0))
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn nuclear_norm(m: &Mat) -> f64 {
    singular_values(m).iter().sum()
}

fn rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    1e-10 * sigma_max.max(1.0) * (rows.max(cols) as f64).max(1.0)
}

/// Numerical rank (singular values above a scale-aware threshold).
pub fn rank(a: &Mat) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    let tol = rank_tol(top, a.nrows(), a.ncols());
    s.iter().filter(|&&x| x > tol).count()
}

/// Orthonormal basis of `Ker(a)` as the columns of an `n x d` matrix.
pub fn kernel_basis(a: &Mat) -> Mat {
    let (m, n) = a.shape();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    // Pad to at least n rows so the decomposition yields a full right basis.
    let rows = m.max(n);
    let mut padded = Mat::zeros(rows, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let d = svd(&padded);
    let top = d.singular_values.first().copied().unwrap_or(0.0);
    let tol = rank_tol(top, m, n);
    let r = d.singular_values.iter().filter(|&&x| x > tol).count();
    let k = n - r;
    let mut basis = Mat::zeros(n, k);
    for (j, i) in (r..n).enumerate() {
        basis.set_column(j, &d.v_t.row(i).transpose());
    }
    basis
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(a: &Mat) -> Mat {
    let (m, n) = a.shape();
    let d = svd(a);
    let top = d.singular_values.first().copied().unwrap_or(0.0);
    let tol = rank_tol(top, m, n);
    let mut out = Mat::zeros(n, m);
    for (i, &s) in d.singular_values.iter().enumerate() {
        if s > tol {
            out += d.v_t.row(i).transpose() * d.u.column(i).transpose() / s;
        }
    }
    out
}

/// Reshape a column-major vector into a `p x q` matrix.
pub fn unvec(v: &Vector, p: usize, q: usize) -> Mat {
    Mat::from_column_slice(p, q, v.as_slice())
}

/// Column-major vectorization.
pub fn vec_of(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `n x r` matrix with orthonormal columns drawn from a Gaussian matrix.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> Mat {
    assert!(r <= n, "cannot draw {r} orthonormal columns in dimension {n}");
    if r == 0 {
        return Mat::zeros(n, 0);
    }
    let g = gaussian_matrix(rng, n, r);
    let q = g.qr().q();
    q.columns(0, r).into_owned()
}

pub fn frobenius_inner(a: &Mat, b: &Mat) -> f64 {
    a.component_mul(b).sum()
}

/// Row-major nested vectors, the on-disk layout of matrices.
pub fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Inverse of [`rows_of`]; `None` for ragged input.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Serde adapter storing an optional matrix as row-major nested arrays.
pub(crate) mod opt_rows {
    use super::{from_rows, rows_of, Mat};
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Mat>, ser: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(rows_of).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Mat>, D::Error> {
        let rows: Option<Vec<Vec<f64>>> = Option::deserialize(de)?;
        rows.map(|r| from_rows(&r).ok_or_else(|| D::Error::custom("ragged matrix rows"))).transpose()
    }
}
