//! Seeded random sampling shared by the probabilistic checks.
//!
//! Every sampled verdict records the seed it was produced with so that
//! repeated runs are byte-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Default seed for all sampled checks. Overridable through the
/// `LCS_MECH_SEED` environment variable in the CLI.
pub const DEFAULT_SEED: u64 = 0x6c63_7331;

/// Default tolerance for sampled (floating-point) checks.
pub const SAMPLE_TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point with all coordinates uniform in `[-2, 2]`.
pub fn point_in_box(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()
}
