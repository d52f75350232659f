//! Recovery of sparse, block-sparse and low-rank representations by norm
//! minimization, closed-form error bounds, and brute-force as well as
//! efficiently verifiable certificates for the nullspace-type conditions
//! that make the recovery exact.
//!
//! The modules follow the pipeline: [`structures`] defines the sparsity
//! structure, [`norms`] every norm and proximal map, [`engine`] the LP and
//! splitting backends, [`recovery`] the two recovery programs and their error
//! bounds, and [`certify`] the certificates `(gamma, beta)`.

pub mod certify;
pub mod engine;
pub mod error;
mod knapsack;
pub mod linalg;
pub mod norms;
pub mod recovery;
pub mod structures;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic per-trial generator: trial `index` of a run seeded with
/// `seed` always sees the same stream, whatever thread executes it.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
