//! Randomized check of the condition
//! `||PBz|| + ||Bz|| - ||Pbar Bz|| <= beta phi(Az) + gamma ||Bz||`.

use rayon::prelude::*;

use super::check_sensing;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, gaussian_vector, Mat, Vector};
use crate::norms::{self, NormTag};
use crate::recovery::vector_phi;
use crate::structures::{best_sparse_approx, project, Projector, RepresentationMap, SparsityStructure, Which};
use crate::trial_rng;

/// Slack allowed before a sample counts as a violation (`||Bz|| = 1`).
pub const CS_SLACK: f64 = 1e-9;
const RANDOM_LOWRANK_PROJECTORS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum CsOutcome {
    Ok {
        trials: usize,
        /// Smallest `rhs - lhs` seen, with `z` scaled to `||Bz|| = 1`.
        worst_margin: f64,
    },
    Violation {
        trial: usize,
        z: Vector,
        projector: Projector,
        lhs: f64,
        rhs: f64,
    },
}

impl CsOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, CsOutcome::Ok { .. })
    }
}

fn lhs_of(structure: &SparsityStructure, p: &Projector, w: &Vector) -> f64 {
    let pw = project(structure, p, w, Which::Direct).expect("projector matches structure");
    let cw = project(structure, p, w, Which::Complement).expect("projector matches structure");
    norms::structure_norm(structure, &pw, false) + norms::structure_norm(structure, w, false)
        - norms::structure_norm(structure, &cw, false)
}

/// Sample `trials` points (half of them drawn from `Ker A`) and test the
/// condition against the worst projector of weight `<= s`: the exact
/// maximizer for plain and group structures, the top singular projectors
/// plus a few random ones for low rank.
#[allow(clippy::too_many_arguments)]
pub fn check_condition_cs(
    a: &Mat,
    b: &RepresentationMap,
    structure: &SparsityStructure,
    s: f64,
    gamma: f64,
    beta: f64,
    phi: NormTag,
    trials: usize,
    seed: u64,
) -> Result<CsOutcome> {
    check_sensing(a, structure)?;
    check_dim("representation rows", structure.dim_e(), b.matrix.nrows())?;
    let phi = vector_phi(phi)?;
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    let n = a.ncols();
    let kernel = linalg::kernel_basis(a);
    let k = norms::floor_level(s);
    let results: Vec<Option<(f64, Vector, Projector, f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let mut z = if i % 2 == 1 && kernel.ncols() > 0 {
                &kernel * gaussian_vector(&mut rng, kernel.ncols())
            } else {
                gaussian_vector(&mut rng, n)
            };
            let scale = norms::structure_norm(structure, &b.apply(&z), false);
            if scale <= 1e-300 {
                return None;
            }
            z /= scale;
            let w = b.apply(&z);
            let mut candidates = vec![best_sparse_approx(structure, &w, s).expect("dimensions checked").projector];
            if let SparsityStructure::LowRank(shape) = structure {
                let r = k.min(shape.q);
                for _ in 0..RANDOM_LOWRANK_PROJECTORS {
                    candidates.push(Projector::LowRank {
                        left: linalg::random_orthonormal(&mut rng, shape.p, r),
                        right: linalg::random_orthonormal(&mut rng, shape.q, r),
                    });
                }
            }
            let rhs = beta * phi.eval((a * &z).as_slice()) + gamma;
            let (lhs, p) = candidates
                .into_iter()
                .map(|p| (lhs_of(structure, &p, &w), p))
                .fold(None, |best: Option<(f64, Projector)>, (v, p)| match best {
                    Some((bv, _)) if bv >= v => best,
                    _ => Some((v, p)),
                })
                .expect("at least one candidate");
            Some((rhs - lhs, z, p, lhs, rhs))
        })
        .collect();
    let mut worst = f64::INFINITY;
    for (trial, r) in results.into_iter().enumerate() {
        let Some((margin, z, projector, lhs, rhs)) = r else { continue };
        if margin < -CS_SLACK {
            return Ok(CsOutcome::Violation { trial, z, projector, lhs, rhs });
        }
        worst = worst.min(margin);
    }
    Ok(CsOutcome::Ok { trials, worst_margin: worst })
}
