use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::image::ScalarImage;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    /// Relative L2 noise level, e.g. `0.05`.
    pub delta: T,
    pub seed: u64,
}

/// `n` i.i.d. samples of the uniform law on `[−1, 1]`, determined by `seed`.
pub fn uniform_noise<T: Real>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::lit(rng.random_range(-1.0..=1.0))).collect()
}

/// `img + δ·‖img‖/‖η‖·η`; the realized relative error is `δ` by construction.
pub fn add_relative_noise<T: Real>(img: &ScalarImage<T>, spec: NoiseSpec<T>) -> Result<ScalarImage<T>> {
    if !(spec.delta >= T::zero()) || !spec.delta.is_finite() {
        return Err(Error::InvalidInput(format!("noise level {} must be finite and non-negative", spec.delta)));
    }
    let mut out = img.clone();
    if spec.delta == T::zero() {
        return Ok(out);
    }
    let eta: Vec<T> = uniform_noise(img.values().len(), spec.seed);
    let eta_norm = eta.iter().fold(T::zero(), |acc, &e| acc + e * e).sqrt();
    if !(eta_norm > T::zero()) {
        return Ok(out);
    }
    let scale = spec.delta * img.norm() / eta_norm;
    for (v, e) in out.values_mut().iter_mut().zip(eta) {
        *v = *v + scale * e;
    }
    Ok(out)
}
