use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::projectors::ProjectorSet;
use crate::algebra::QuditDensityMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Detection counts per projector, aligned with a [`ProjectorSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    pub counts: Vec<u64>,
    /// Expected number of detections for a unit-probability projector.
    pub exposure: f64,
}

impl CountsTable {
    pub fn new(counts: Vec<u64>, exposure: f64) -> Result<Self> {
        if !(exposure > 0.0) || !exposure.is_finite() {
            return Err(Error::InvalidState(format!(
                "exposure must be positive, got {exposure}"
            )));
        }
        Ok(CountsTable { counts, exposure })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&n| n as f64).collect()
    }
}

/// One Poisson draw; a zero mean gives zero.
pub fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 || !mean.is_finite() {
        return 0;
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Expected counts `exposure · ⟨ψ_i|ρ|ψ_i⟩`.
pub fn expected_counts(
    rho: &QuditDensityMatrix,
    projectors: &ProjectorSet,
    exposure: f64,
) -> Vec<f64> {
    projectors
        .kets()
        .iter()
        .map(|k| exposure * linalg::expectation(rho.matrix(), k.amplitudes()).max(0.0))
        .collect()
}

pub fn simulate_counts_with<R: Rng + ?Sized>(
    rho: &QuditDensityMatrix,
    projectors: &ProjectorSet,
    exposure: f64,
    rng: &mut R,
) -> Result<CountsTable> {
    if rho.dim() != projectors.dim() {
        return Err(Error::DimensionMismatch {
            expected: projectors.dim(),
            found: rho.dim(),
        });
    }
    let counts = expected_counts(rho, projectors, exposure)
        .into_iter()
        .map(|m| poisson_draw(rng, m))
        .collect();
    CountsTable::new(counts, exposure)
}

/// Poisson counts for every projector, reproducible for a given seed.
pub fn simulate_counts(
    rho: &QuditDensityMatrix,
    projectors: &ProjectorSet,
    exposure: u64,
    seed: u64,
) -> Result<CountsTable> {
    if exposure == 0 {
        return Err(Error::InvalidState("exposure must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_counts_with(rho, projectors, exposure as f64, &mut rng)
}
