//! Sparsity structures: a norm on the representation space `E`, a weighted
//! family of projectors with complements, and the representation map
//! `B : X -> E`.
//!
//! Three instances are provided:
//!
//! * `Plain` - coordinate projectors on `R^n` with the `l1` norm;
//! * `Group` - possibly overlapping index blocks `V_l` with weights
//!   `chi_l`, `E = R(V_1) x ... x R(V_K)` and the sum of block norms;
//! * `LowRank` - `X = E = R^{p x q}` (`p >= q`), projectors
//!   `x -> P_left x P_right` and the nuclear norm.
//!
//! E-vectors of the low-rank structure are `p x q` matrices flattened
//! column-major.

use std::ops::Range;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::knapsack;
use crate::linalg::{self, Mat, Vector};
use crate::norms::{self, block_norms, structure_norm, VectorNorm};
use crate::trial_rng;

/// Serialized form of a structure; see `schemas/structure.schema.json`.
/// Block indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StructureSpec {
    Plain {
        n: usize,
    },
    Group {
        n: usize,
        blocks: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        block_norms: Vec<VectorNorm>,
    },
    LowRank {
        p: usize,
        q: usize,
        #[serde(default)]
        transposed: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub block_norms: Vec<VectorNorm>,
    offsets: Vec<usize>,
}

impl GroupStructure {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim_e(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Coordinates of block `l` inside an E-vector.
    pub fn block_range(&self, l: usize) -> Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    fn weight_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&l| self.weights[l]).sum()
    }
}

/// Shape of the low-rank structure, normalized so that `p >= q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowRankShape {
    pub p: usize,
    pub q: usize,
    /// The user supplied `q x p` data; inputs must be transposed on entry.
    pub transposed: bool,
}

impl LowRankShape {
    /// Permutation `vec(x^T) = Pi vec(x)` mapping user-shaped (`q x p`)
    /// column-major coordinates to normalized (`p x q`) ones.
    pub fn transpose_permutation(&self) -> Mat {
        let (p, q) = (self.p, self.q);
        let mut perm = Mat::zeros(p * q, p * q);
        // user matrix u is q x p; normalized x = u^T is p x q.
        for i in 0..q {
            for j in 0..p {
                let user = i + j * q;
                let norm = j + i * p;
                perm[(norm, user)] = 1.0;
            }
        }
        perm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StructureSpec", into = "StructureSpec")]
pub enum SparsityStructure {
    Plain { n: usize },
    Group(GroupStructure),
    LowRank(LowRankShape),
}

impl TryFrom<StructureSpec> for SparsityStructure {
    type Error = Error;

    fn try_from(spec: StructureSpec) -> Result<Self> {
        build_structure(&spec).map(|(s, _)| s)
    }
}

impl From<SparsityStructure> for StructureSpec {
    fn from(s: SparsityStructure) -> Self {
        s.spec()
    }
}

impl SparsityStructure {
    pub fn spec(&self) -> StructureSpec {
        match self {
            SparsityStructure::Plain { n } => StructureSpec::Plain { n: *n },
            SparsityStructure::Group(g) => StructureSpec::Group {
                n: g.n,
                blocks: g.blocks.clone(),
                weights: Some(g.weights.clone()),
                block_norms: g.block_norms.clone(),
            },
            SparsityStructure::LowRank(s) => StructureSpec::LowRank {
                p: s.p,
                q: s.q,
                transposed: s.transposed,
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SparsityStructure::Plain { .. } => "plain",
            SparsityStructure::Group(_) => "group",
            SparsityStructure::LowRank(_) => "lowrank",
        }
    }

    pub fn dim_x(&self) -> usize {
        match self {
            SparsityStructure::Plain { n } => *n,
            SparsityStructure::Group(g) => g.n,
            SparsityStructure::LowRank(s) => s.p * s.q,
        }
    }

    pub fn dim_e(&self) -> usize {
        match self {
            SparsityStructure::Plain { n } => *n,
            SparsityStructure::Group(g) => g.dim_e(),
            SparsityStructure::LowRank(s) => s.p * s.q,
        }
    }

    /// Weight of the identity projector: the sparsity level at which every
    /// vector is sparse.
    pub fn full_weight(&self) -> f64 {
        match self {
            SparsityStructure::Plain { n } => *n as f64,
            SparsityStructure::Group(g) => g.weights.iter().sum(),
            SparsityStructure::LowRank(s) => s.q as f64,
        }
    }

    /// The canonical representation map `B`.
    pub fn representation(&self) -> RepresentationMap {
        match self {
            SparsityStructure::Group(g) => {
                let mut b = Mat::zeros(g.dim_e(), g.n);
                let mut row = 0;
                for block in &g.blocks {
                    for &i in block {
                        b[(row, i)] = 1.0;
                        row += 1;
                    }
                }
                let identity = b.nrows() == b.ncols() && b == Mat::identity(g.n, g.n);
                RepresentationMap { matrix: b, identity }
            }
            _ => RepresentationMap {
                matrix: Mat::identity(self.dim_x(), self.dim_x()),
                identity: true,
            },
        }
    }
}

/// The representation map `B : X -> E` in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMap {
    pub matrix: Mat,
    /// `B` is the identity, so `Bx = x` can be skipped.
    pub identity: bool,
}

impl RepresentationMap {
    pub fn apply(&self, x: &Vector) -> Vector {
        if self.identity {
            x.clone()
        } else {
            &self.matrix * x
        }
    }
}

/// Validate a structure description and build its representation map.
/// Low-rank shapes with `p < q` are transposed rather than rejected.
pub fn build_structure(spec: &StructureSpec) -> Result<(SparsityStructure, RepresentationMap)> {
    let structure = match spec {
        StructureSpec::Plain { n } => {
            if *n == 0 {
                return Err(Error::InvalidStructure("plain structure needs n >= 1".into()));
            }
            SparsityStructure::Plain { n: *n }
        }
        StructureSpec::Group {
            n,
            blocks,
            weights,
            block_norms,
        } => {
            if *n == 0 || blocks.is_empty() {
                return Err(Error::InvalidStructure("group structure needs n >= 1 and at least one block".into()));
            }
            let k = blocks.len();
            let weights = weights.clone().unwrap_or_else(|| vec![1.0; k]);
            if weights.len() != k || block_norms.len() != k {
                return Err(Error::InvalidStructure(format!(
                    "{k} blocks but {} weights and {} block norms",
                    weights.len(),
                    block_norms.len()
                )));
            }
            let mut covered = vec![false; *n];
            for (l, block) in blocks.iter().enumerate() {
                if block.is_empty() {
                    return Err(Error::InvalidStructure(format!("block {l} is empty")));
                }
                let mut seen = std::collections::BTreeSet::new();
                for &i in block {
                    if i >= *n {
                        return Err(Error::InvalidStructure(format!("block {l} has index {i} >= n = {n}")));
                    }
                    if !seen.insert(i) {
                        return Err(Error::InvalidStructure(format!("block {l} repeats index {i}")));
                    }
                    covered[i] = true;
                }
            }
            if let Some(i) = covered.iter().position(|c| !c) {
                return Err(Error::InvalidStructure(format!("index {i} is not covered by any block")));
            }
            if let Some(l) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
                return Err(Error::InvalidStructure(format!(
                    "block {l} has nonpositive weight {}",
                    weights[l]
                )));
            }
            let mut offsets = Vec::with_capacity(k + 1);
            offsets.push(0);
            for block in blocks {
                offsets.push(offsets.last().unwrap() + block.len());
            }
            SparsityStructure::Group(GroupStructure {
                n: *n,
                blocks: blocks.clone(),
                weights,
                block_norms: block_norms.clone(),
                offsets,
            })
        }
        StructureSpec::LowRank { p, q, transposed } => {
            if *p == 0 || *q == 0 {
                return Err(Error::InvalidStructure("low-rank structure needs p, q >= 1".into()));
            }
            if p >= q {
                SparsityStructure::LowRank(LowRankShape {
                    p: *p,
                    q: *q,
                    transposed: *transposed,
                })
            } else {
                SparsityStructure::LowRank(LowRankShape {
                    p: *q,
                    q: *p,
                    transposed: !*transposed,
                })
            }
        }
    };
    let rep = structure.representation();
    Ok((structure, rep))
}

/// A member `P` of the projector family.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// Plain: coordinate projector onto a support set.
    Support(Vec<usize>),
    /// Group: projector onto the blocks in the set.
    Blocks(Vec<usize>),
    /// Low rank: `x -> (U_L U_L^T) x (U_R U_R^T)` for orthonormal bases.
    LowRank { left: Mat, right: Mat },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Direct,
    Complement,
}

impl Projector {
    /// The weight `nu(P)`.
    pub fn weight(&self, structure: &SparsityStructure) -> f64 {
        match (self, structure) {
            (Projector::Support(s), _) => s.len() as f64,
            (Projector::Blocks(set), SparsityStructure::Group(g)) => g.weight_of(set),
            (Projector::LowRank { left, right }, _) => left.ncols().max(right.ncols()) as f64,
            (Projector::Blocks(set), _) => set.len() as f64,
        }
    }

    pub fn validate(&self, structure: &SparsityStructure) -> Result<()> {
        match (self, structure) {
            (Projector::Support(s), SparsityStructure::Plain { n }) => {
                if s.iter().any(|&i| i >= *n) {
                    return Err(Error::InvalidInput("support index out of range".into()));
                }
                Ok(())
            }
            (Projector::Blocks(set), SparsityStructure::Group(g)) => {
                if set.iter().any(|&l| l >= g.num_blocks()) {
                    return Err(Error::InvalidInput("block index out of range".into()));
                }
                Ok(())
            }
            (Projector::LowRank { left, right }, SparsityStructure::LowRank(shape)) => {
                check_dim("projector left basis rows", shape.p, left.nrows())?;
                check_dim("projector right basis rows", shape.q, right.nrows())?;
                Ok(())
            }
            _ => Err(Error::InvalidInput(format!(
                "projector does not belong to a {} structure",
                structure.kind_name()
            ))),
        }
    }

    /// The identity projector of the structure.
    pub fn identity(structure: &SparsityStructure) -> Projector {
        match structure {
            SparsityStructure::Plain { n } => Projector::Support((0..*n).collect()),
            SparsityStructure::Group(g) => Projector::Blocks((0..g.num_blocks()).collect()),
            SparsityStructure::LowRank(s) => Projector::LowRank {
                left: Mat::identity(s.p, s.p),
                right: Mat::identity(s.q, s.q),
            },
        }
    }
}

/// Apply `P` (direct) or `Pbar` (complement). `Pbar = Id - P` for the plain
/// and group structures; for the low-rank structure
/// `Pbar(x) = (I - P_left) x (I - P_right)`, which is not `Id - P`.
pub fn project(structure: &SparsityStructure, proj: &Projector, w: &Vector, which: Which) -> Result<Vector> {
    check_dim("project: vector in E", structure.dim_e(), w.len())?;
    proj.validate(structure)?;
    Ok(apply_unchecked(structure, proj, w, which))
}

pub(crate) fn apply_unchecked(structure: &SparsityStructure, proj: &Projector, w: &Vector, which: Which) -> Vector {
    match (proj, structure) {
        (Projector::Support(set), _) => {
            let mut keep = vec![false; w.len()];
            for &i in set {
                keep[i] = true;
            }
            mask(w, &keep, which)
        }
        (Projector::Blocks(set), SparsityStructure::Group(g)) => {
            let mut keep = vec![false; w.len()];
            for &l in set {
                for i in g.block_range(l) {
                    keep[i] = true;
                }
            }
            mask(w, &keep, which)
        }
        (Projector::LowRank { left, right }, SparsityStructure::LowRank(shape)) => {
            let x = linalg::unvec(w, shape.p, shape.q);
            let pl = left * left.transpose();
            let pr = right * right.transpose();
            let out = match which {
                Which::Direct => &pl * x * &pr,
                Which::Complement => {
                    let il = Mat::identity(shape.p, shape.p) - pl;
                    let ir = Mat::identity(shape.q, shape.q) - pr;
                    il * x * ir
                }
            };
            linalg::vec_of(&out)
        }
        _ => panic!("projector does not match structure"),
    }
}

fn mask(w: &Vector, keep: &[bool], which: Which) -> Vector {
    let want = which == Which::Direct;
    Vector::from_iterator(
        w.len(),
        w.iter().zip(keep).map(|(&x, &k)| if k == want { x } else { 0.0 }),
    )
}

/// Result of enumerating `P_s`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectorFamily {
    Finite(Vec<Projector>),
    NotEnumerable,
}

/// Largest number of blocks for which group projectors are enumerated.
const MAX_ENUMERATED_BLOCKS: usize = 24;

/// The inclusion-maximal members of `P_s`. Smaller projectors are dominated
/// in every condition the library checks.
pub fn enumerate_projectors(structure: &SparsityStructure, s: f64) -> ProjectorFamily {
    match structure {
        SparsityStructure::Plain { n } => {
            let k = norms::floor_level(s).min(*n);
            ProjectorFamily::Finite(combinations(*n, k).into_iter().map(Projector::Support).collect())
        }
        SparsityStructure::Group(g) => {
            let k = g.num_blocks();
            if k > MAX_ENUMERATED_BLOCKS {
                return ProjectorFamily::NotEnumerable;
            }
            let slack = knapsack::budget_slack(s);
            let mut out = Vec::new();
            for mask in 0u32..(1u32 << k) {
                let set: Vec<usize> = (0..k).filter(|l| mask >> l & 1 == 1).collect();
                let weight = g.weight_of(&set);
                if weight > s + slack {
                    continue;
                }
                let maximal = (0..k)
                    .filter(|l| mask >> l & 1 == 0)
                    .all(|l| weight + g.weights[l] > s + slack);
                if maximal {
                    out.push(Projector::Blocks(set));
                }
            }
            ProjectorFamily::Finite(out)
        }
        SparsityStructure::LowRank(_) => ProjectorFamily::NotEnumerable,
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Best `s`-sparse approximation of an E-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseApprox {
    pub projector: Projector,
    /// `||w - Pw||` in the structure norm.
    pub delta_x: f64,
    /// `false` when the group selection came from the greedy fallback, in
    /// which case `delta_x` is an upper bound on the best achievable value.
    pub exact: bool,
}

pub fn best_sparse_approx(structure: &SparsityStructure, w: &Vector, s: f64) -> Result<SparseApprox> {
    check_dim("best_sparse_approx: vector in E", structure.dim_e(), w.len())?;
    match structure {
        SparsityStructure::Plain { n } => {
            let k = norms::floor_level(s).min(*n);
            let mut order: Vec<usize> = (0..*n).collect();
            order.sort_by(|&a, &b| {
                w[b].abs()
                    .partial_cmp(&w[a].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut support = order[..k].to_vec();
            support.sort_unstable();
            let delta_x = order[k..].iter().map(|&i| w[i].abs()).sum();
            Ok(SparseApprox {
                projector: Projector::Support(support),
                delta_x,
                exact: true,
            })
        }
        SparsityStructure::Group(g) => {
            let norms = block_norms(g, w);
            let selection = knapsack::solve_exact(&norms, &g.weights, s)
                .unwrap_or_else(|| knapsack::greedy(&norms, &g.weights, s));
            let delta_x = (0..g.num_blocks())
                .filter(|l| !selection.chosen.contains(l))
                .map(|l| norms[l])
                .sum();
            Ok(SparseApprox {
                projector: Projector::Blocks(selection.chosen),
                delta_x,
                exact: selection.exact,
            })
        }
        SparsityStructure::LowRank(shape) => {
            let k = norms::floor_level(s).min(shape.q);
            let d = linalg::svd(&linalg::unvec(w, shape.p, shape.q));
            let (left, right) = if k == shape.q {
                (d.u.columns(0, shape.q).into_owned(), Mat::identity(shape.q, shape.q))
            } else {
                (
                    d.u.columns(0, k).into_owned(),
                    d.v_t.rows(0, k).transpose(),
                )
            };
            let delta_x = d.singular_values[k..].iter().sum();
            Ok(SparseApprox {
                projector: Projector::LowRank { left, right },
                delta_x,
                exact: true,
            })
        }
    }
}

/// Draw a random member of the projector family (any weight).
pub fn random_projector<R: Rng + ?Sized>(structure: &SparsityStructure, rng: &mut R) -> Projector {
    match structure {
        SparsityStructure::Plain { n } => {
            let k = rng.random_range(0..=*n);
            let mut set = sample(rng, *n, k).into_vec();
            set.sort_unstable();
            Projector::Support(set)
        }
        SparsityStructure::Group(g) => {
            let k = rng.random_range(0..=g.num_blocks());
            let mut set = sample(rng, g.num_blocks(), k).into_vec();
            set.sort_unstable();
            Projector::Blocks(set)
        }
        SparsityStructure::LowRank(shape) => {
            let rl = rng.random_range(0..=shape.p);
            let rr = rng.random_range(0..=shape.q);
            Projector::LowRank {
                left: linalg::random_orthonormal(rng, shape.p, rl),
                right: linalg::random_orthonormal(rng, shape.q, rr),
            }
        }
    }
}

/// The axioms checked by [`verify_axioms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    /// `P^2 = P`.
    Idempotent,
    /// `Pbar P = 0`.
    ComplementAnnihilates,
    /// `||P^* f + Pbar^* g||_* <= max(||f||_*, ||g||_*)`.
    DualContraction,
}

#[derive(Debug, Clone)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub trial: usize,
    pub margin: f64,
    pub projector: Projector,
    pub f: Vector,
    pub g: Vector,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub trials: usize,
    /// Worst relative margin for A.1, A.2 and A.3 (negative means violated).
    pub worst_margin: [f64; 3],
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const AXIOM_TOL: f64 = 1e-9;

/// Randomized check of A.1-A.3 with the structure's own complement map.
pub fn verify_axioms(structure: &SparsityStructure, trials: usize, seed: u64) -> Result<AxiomReport> {
    verify_axioms_with(structure, trials, seed, &|st, p, w| apply_unchecked(st, p, w, Which::Complement))
}

/// Same as [`verify_axioms`] with a caller-supplied complement map, used to
/// exercise the checker on deliberately broken structures.
pub fn verify_axioms_with(
    structure: &SparsityStructure,
    trials: usize,
    seed: u64,
    complement: &(dyn Fn(&SparsityStructure, &Projector, &Vector) -> Vector + Sync),
) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let dim = structure.dim_e();
    let results: Vec<([f64; 3], Vec<AxiomViolation>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let proj = random_projector(structure, &mut rng);
            let p_mat = operator_matrix(dim, |v| apply_unchecked(structure, &proj, v, Which::Direct));
            let c_mat = operator_matrix(dim, |v| complement(structure, &proj, v));

            let w = linalg::gaussian_vector(&mut rng, dim);
            let scale = w.norm().max(1.0);
            let pw = &p_mat * &w;
            let a1 = -(&p_mat * &pw - &pw).norm() / scale;
            let a2 = -(&c_mat * &pw).norm() / scale;

            let mut f = linalg::gaussian_vector(&mut rng, dim);
            let mut g = linalg::gaussian_vector(&mut rng, dim);
            // Half the draws sit on the boundary case ||f||_* = ||g||_* = 1.
            if rng.random_bool(0.5) {
                let nf = structure_norm(structure, &f, true);
                let ng = structure_norm(structure, &g, true);
                if nf > 0.0 {
                    f /= nf;
                }
                if ng > 0.0 {
                    g /= ng;
                }
            }
            let lhs = structure_norm(structure, &(p_mat.tr_mul(&f) + c_mat.tr_mul(&g)), true);
            let rhs = structure_norm(structure, &f, true).max(structure_norm(structure, &g, true));
            let a3 = (rhs - lhs) / rhs.max(1.0);

            let margins = [a1, a2, a3];
            let axioms = [Axiom::Idempotent, Axiom::ComplementAnnihilates, Axiom::DualContraction];
            let violations = margins
                .iter()
                .zip(axioms)
                .filter(|(m, _)| **m < -AXIOM_TOL)
                .map(|(&margin, axiom)| AxiomViolation {
                    axiom,
                    trial,
                    margin,
                    projector: proj.clone(),
                    f: if axiom == Axiom::DualContraction { f.clone() } else { w.clone() },
                    g: g.clone(),
                })
                .collect();
            (margins, violations)
        })
        .collect();
    let mut worst = [f64::INFINITY; 3];
    let mut violations = Vec::new();
    for (margins, v) in results {
        for i in 0..3 {
            worst[i] = worst[i].min(margins[i]);
        }
        violations.extend(v);
    }
    Ok(AxiomReport {
        trials,
        worst_margin: worst,
        violations,
    })
}

fn operator_matrix(dim: usize, op: impl Fn(&Vector) -> Vector) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    let mut e = Vector::zeros(dim);
    for j in 0..dim {
        e[j] = 1.0;
        m.set_column(j, &op(&e));
        e[j] = 0.0;
    }
    m
}

/// Outcome of the randomized check of
/// `||w + Bz|| >= ||w|| + ||Pbar Bz|| - ||P Bz||` for `Pw = w`.
#[derive(Debug, Clone)]
pub struct PairingReport {
    pub trials: usize,
    pub worst_margin: f64,
    pub violations: usize,
}

pub fn verify_pairing(
    structure: &SparsityStructure,
    rep: &RepresentationMap,
    trials: usize,
    seed: u64,
) -> Result<PairingReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    check_dim("representation map rows", structure.dim_e(), rep.matrix.nrows())?;
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let proj = random_projector(structure, &mut rng);
            let u = linalg::gaussian_vector(&mut rng, structure.dim_e());
            let w = apply_unchecked(structure, &proj, &u, Which::Direct);
            let z = linalg::gaussian_vector(&mut rng, structure.dim_x());
            let bz = rep.apply(&z);
            let norm = |v: &Vector| structure_norm(structure, v, false);
            let lhs = norm(&(&w + &bz));
            let rhs = norm(&w) + norm(&apply_unchecked(structure, &proj, &bz, Which::Complement))
                - norm(&apply_unchecked(structure, &proj, &bz, Which::Direct));
            (lhs - rhs) / (norm(&w) + norm(&bz)).max(1.0)
        })
        .collect();
    Ok(PairingReport {
        trials,
        worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        violations: margins.iter().filter(|&&m| m < -AXIOM_TOL).count(),
    })
}
