//! Nullspace-property oracles and verifiable `(gamma, beta)` certificates.
//!
//! A certificate witnesses the condition
//! `||PBz|| + ||Bz|| - ||Pbar Bz|| <= beta phi(Az) + gamma ||Bz||` for all `z`
//! and all projectors of weight at most `s`. The constructive methods also
//! carry the pair `(H, W)` with `B = W B + H^T A`.

mod bruteforce;
mod condition;
mod group;
mod lowrank;

pub use bruteforce::{gamma_s_bruteforce, BruteForceOptions};
pub use condition::{check_condition_cs, CsOutcome};
pub use group::{psi_s, synth_certificate_group, SynthOptions};
pub use lowrank::{
    badnews_check, certify_lowrank, default_candidates, opt_bar, opt_star, opt_star_split, rearrange, rearrange_inverse, theta,
    theta_inverse, BadNews, LowRankOptions, OptStar, OptStarOptions, Rearrangement,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::linalg::{self, Mat, Vector};
use crate::norms::NormTag;
use crate::structures::{Projector, RepresentationMap, SparsityStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    ColumnLp,
    LowRankUBar,
    LowRankUStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub method: Method,
    pub gamma: f64,
    pub beta: f64,
    pub s: f64,
    pub phi: NormTag,
    /// `gamma < 1`.
    pub valid: bool,
    /// Whether `gamma` and `beta` were evaluated exactly; otherwise they are
    /// upper bounds, which keeps the certificate sound.
    pub exact: bool,
    /// `m x dim(E)`.
    #[serde(default, with = "linalg::opt_rows", skip_serializing_if = "Option::is_none")]
    pub h: Option<Mat>,
    /// `dim(E) x dim(E)`.
    #[serde(default, with = "linalg::opt_rows", skip_serializing_if = "Option::is_none")]
    pub w: Option<Mat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Certificate {
    /// `||B - W B - H^T A||_F`, or `None` when the matrices are not carried.
    pub fn identity_residual(&self, a: &Mat, b: &RepresentationMap) -> Option<f64> {
        let (h, w) = (self.h.as_ref()?, self.w.as_ref()?);
        Some((&b.matrix - w * &b.matrix - h.transpose() * a).norm())
    }

    /// Drop `H` and `W`, e.g. before writing a compact report.
    pub fn without_matrices(mut self) -> Self {
        self.h = None;
        self.w = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    CertifiedGood,
    CertifiedBad,
    Unknown,
}

/// Outcome of a brute-force nullspace check. `gamma_lo..=gamma_hi` brackets
/// `max { ||PBz|| : z in Ker A, ||Bz|| <= 1, P in P_s }`; the nullspace
/// property holds iff it is below `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceVerdict {
    pub status: VerdictStatus,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Kernel element with `||Pbar Bz|| <= ||PBz||` when certified bad.
    pub witness: Option<Vector>,
    pub projector: Option<Projector>,
    pub explanation: Option<String>,
}

impl NullspaceVerdict {
    pub fn exact(&self) -> bool {
        self.gamma_lo == self.gamma_hi
    }
}

/// Margin below `1/2` required for a strict certified-good verdict.
pub const GOOD_MARGIN: f64 = 1e-9;

/// The sensing matrix in normalized low-rank coordinates (`A B^T`, with `B`
/// a permutation), or unchanged for the other structures.
pub(crate) fn normalized_sensing(a: &Mat, structure: &SparsityStructure, b: &RepresentationMap) -> Mat {
    match structure {
        SparsityStructure::LowRank(_) if !b.identity => a * b.matrix.transpose(),
        _ => a.clone(),
    }
}

pub(crate) fn check_sensing(a: &Mat, structure: &SparsityStructure) -> Result<()> {
    check_dim("sensing matrix columns", structure.dim_x(), a.ncols())
}
