//! Seeded, splittable Gaussian noise source.
//!
//! Each trajectory owns an independent ChaCha8 stream selected by
//! `(seed, trajectory_index)`; ChaCha is counter based, so streams do not
//! overlap and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type SeededGenerator = ChaCha8Rng;

/// Generator for stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> SeededGenerator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Wiener increment with mean 0 and variance `dt`.
pub fn gaussian_increment(rng: &mut SeededGenerator, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::ContractViolation(format!(
            "Wiener increment needs dt > 0, got {dt}"
        )));
    }
    Ok(standard_normal(rng) * dt.sqrt())
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
