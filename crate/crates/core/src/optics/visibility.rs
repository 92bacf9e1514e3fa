use serde::{Deserialize, Serialize};

use crate::algebra::QuditDensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::c;

/// HOM visibilities of the two interfering source pairs.
///
/// `input` is the overlap between photon 1 and the channel photons (it
/// governs the first PBS); `aux` is the overlap between the auxiliary pair and
/// the main photons at the second pair of PBSs. Partial distinguishability is
/// modeled by tagging a source with probability `1 - V` and mixing the runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityModel {
    pub input: f64,
    pub aux: f64,
}

impl VisibilityModel {
    pub fn new(input: f64, aux: f64) -> Result<Self> {
        for v in [input, aux] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidState(format!("visibility {v} outside [0,1]")));
            }
        }
        Ok(VisibilityModel { input, aux })
    }

    pub fn perfect() -> Self {
        VisibilityModel {
            input: 1.0,
            aux: 1.0,
        }
    }

    /// One visibility for the whole setup. The mismatch is attributed to the
    /// input photon, which takes part in both interferences, so every coherence
    /// of the teleported state is damped by exactly `v`.
    pub fn shared(v: f64) -> Result<Self> {
        Self::new(v, 1.0)
    }

    /// Weighted tag configurations `(input_tagged, aux_tagged, weight)`.
    pub(crate) fn configurations(&self) -> Vec<(bool, bool, f64)> {
        let mut out = Vec::with_capacity(4);
        for (ti, wi) in [(false, self.input), (true, 1.0 - self.input)] {
            for (ta, wa) in [(false, self.aux), (true, 1.0 - self.aux)] {
                let w = wi * wa;
                if w > 0.0 {
                    out.push((ti, ta, w));
                }
            }
        }
        out
    }
}

/// Factor multiplying the (i, j) coherence of the teleported state.
///
/// Levels 0 and 1 leave the auxiliary PBSs in the same configuration and differ
/// only in which first-PBS output carries photon 1; level 2 additionally swaps
/// the auxiliary photons between outputs.
pub fn visibility_damping_factor(model: &VisibilityModel, coherence: (usize, usize)) -> f64 {
    let (i, j) = if coherence.0 <= coherence.1 {
        coherence
    } else {
        (coherence.1, coherence.0)
    };
    match (i, j) {
        _ if i == j => 1.0,
        (0, 1) => model.input,
        (0, 2) | (1, 2) => model.input * model.aux,
        _ => 0.0,
    }
}

/// `(1-p)·ρ + p·I/d`, the white-noise admixture used for multi-pair emission.
pub fn with_white_noise(rho: &QuditDensityMatrix, p: f64) -> QuditDensityMatrix {
    let d = rho.dim();
    let m = rho.matrix() * c(1.0 - p, 0.0) + crate::linalg::identity(d) * c(p / d as f64, 0.0);
    QuditDensityMatrix::unchecked(m)
}
