//! The ideal teleportation protocol: Bell decomposition of input ⊗ channel,
//! outcome probabilities, corrections and analytic success rates.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::algebra::{bell_state, weyl_operator, BellLabel, QuditPureState};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, I, ONE, ZERO};

/// Pure channel state Σ_k c_k |k⟩|k⟩ with real non-negative Schmidt coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub schmidt_coefficients: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(schmidt_coefficients: Vec<f64>) -> Result<Self> {
        if schmidt_coefficients.len() < 2 {
            return Err(Error::UnsupportedDimension(schmidt_coefficients.len()));
        }
        if schmidt_coefficients
            .iter()
            .any(|&x| !(x >= 0.0) || !x.is_finite())
        {
            return Err(Error::InvalidState(
                "Schmidt coefficients must be non-negative".into(),
            ));
        }
        let s: f64 = schmidt_coefficients.iter().map(|x| x * x).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("Σc² = {s}, expected 1")));
        }
        Ok(ChannelSpec {
            schmidt_coefficients,
        })
    }

    pub fn maximal(dim: usize) -> Self {
        ChannelSpec {
            schmidt_coefficients: vec![1.0 / (dim as f64).sqrt(); dim],
        }
    }

    /// (2|00⟩ + 2|11⟩ + |22⟩)/3, the channel used in the optical experiment.
    pub fn experimental() -> Self {
        ChannelSpec {
            schmidt_coefficients: vec![2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.schmidt_coefficients.len()
    }
}

/// One Bell outcome of the sender's measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBranch {
    pub label: BellLabel,
    pub probability: f64,
    /// Receiver's normalized state before correction; `None` if the branch never occurs.
    pub conditional_state: Option<QuditPureState>,
}

/// The ten states |φ1⟩…|φ10⟩ used as teleportation inputs in the experiment.
pub fn experiment_inputs() -> Vec<QuditPureState> {
    let r = c(0.5f64.sqrt(), 0.0);
    let s = c(1.0 / 3f64.sqrt(), 0.0);
    let z = ZERO;
    let raw: Vec<Vec<_>> = vec![
        vec![ONE, z, z],
        vec![z, ONE, z],
        vec![z, z, ONE],
        vec![r, r, z],
        vec![r, I * r, z],
        vec![r, z, r],
        vec![r, z, I * r],
        vec![z, r, r],
        vec![z, r, I * r],
        vec![s, s, s],
    ];
    raw.into_iter()
        .map(|a| QuditPureState::new(a).expect("normalized input"))
        .collect()
}

fn unnormalized_conditional(
    channel: &ChannelSpec,
    input: &QuditPureState,
    label: BellLabel,
) -> CVector {
    let d = channel.dim();
    let bell = bell_state(label, d);
    let alpha = input.amplitudes();
    let mut v = CVector::zeros(d);
    for j in 0..d {
        let k = (j + label.m) % d;
        v[k] += bell.amplitude(j, k).conj() * alpha[j] * channel.schmidt_coefficients[k];
    }
    v
}

fn check_dims(channel: &ChannelSpec, input: &QuditPureState) -> Result<()> {
    if channel.dim() != 3 {
        return Err(Error::UnsupportedDimension(channel.dim()));
    }
    if input.dim() != channel.dim() {
        return Err(Error::DimensionMismatch {
            expected: channel.dim(),
            found: input.dim(),
        });
    }
    Ok(())
}

/// Expands |input⟩₁ ⊗ |channel⟩₂₃ in the Bell basis of photons 1 and 2.
pub fn decompose_input(
    channel: &ChannelSpec,
    input: &QuditPureState,
) -> Result<Vec<OutcomeBranch>> {
    check_dims(channel, input)?;
    let d = channel.dim();
    Ok(BellLabel::all(d)
        .into_iter()
        .map(|label| {
            let v = unnormalized_conditional(channel, input, label);
            let p = v.norm_squared();
            let conditional_state = if p > 0.0 {
                QuditPureState::normalized(v.iter().copied().collect()).ok()
            } else {
                None
            };
            OutcomeBranch {
                label,
                probability: p,
                conditional_state,
            }
        })
        .collect())
}

/// The tripartite product |input⟩₁ ⊗ |channel⟩₂₃, index `i1·d² + i2·d + i3`.
pub fn tripartite_state(channel: &ChannelSpec, input: &QuditPureState) -> CVector {
    let d = channel.dim();
    let mut v = CVector::zeros(d * d * d);
    for i in 0..d {
        for k in 0..d {
            v[i * d * d + k * d + k] = input.amplitudes()[i] * channel.schmidt_coefficients[k];
        }
    }
    v
}

/// Σ √p |ψ_nm⟩₁₂ ⊗ |cond_nm⟩₃ over all branches.
pub fn reassemble(branches: &[OutcomeBranch], dim: usize) -> CVector {
    let mut v = CVector::zeros(dim * dim * dim);
    for b in branches {
        let Some(cond) = &b.conditional_state else {
            continue;
        };
        let bell = bell_state(b.label, dim);
        let w = b.probability.sqrt();
        for ab in 0..dim * dim {
            for k in 0..dim {
                v[ab * dim + k] += bell.amplitudes[ab] * cond.amplitudes()[k] * w;
            }
        }
    }
    v
}

/// The receiver's correction for outcome (n, m): U_nm, so that U_nm·cond_nm = input
/// for the maximal channel.
pub fn correction_unitary(label: BellLabel) -> CMatrix {
    weyl_operator(label, 3)
}

/// Runs the protocol for one outcome and returns the corrected receiver state.
pub fn teleport_ideal(
    channel: &ChannelSpec,
    input: &QuditPureState,
    label: BellLabel,
) -> Result<QuditPureState> {
    check_dims(channel, input)?;
    let v = unnormalized_conditional(channel, input, label);
    if v.norm_squared() < 1e-24 {
        return Err(Error::DegenerateOutcome {
            n: label.n,
            m: label.m,
        });
    }
    let out = correction_unitary(label) * v;
    QuditPureState::normalized(out.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Maximal channel, one Bell state resolved per measurement basis.
    MaximalSingleBasis,
    /// Non-maximal (2,2,1)/3 channel with the rebalancing projection basis.
    NonmaximalRebalanced,
}

/// Overall success probability of the post-selected optical Bell measurement.
pub fn success_probability(scheme: Scheme) -> Ratio<u64> {
    match scheme {
        // one of nine Bell states, times the 1/3 classical-term filter and the 1/2 ancilla projection
        Scheme::MaximalSingleBasis => Ratio::new(1, 9) * Ratio::new(1, 3) * Ratio::new(1, 2),
        // squared prefactor √2/6 of the retained six-photon term
        Scheme::NonmaximalRebalanced => Ratio::new(2, 36),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_validation() {
        assert!(ChannelSpec::new(vec![0.5, 0.5, 0.5]).is_err());
        assert!(ChannelSpec::new(vec![2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0]).is_ok());
        assert!(ChannelSpec::new(vec![-1.0, 0.0]).is_err());
    }

    #[test]
    fn maximal_channel_basis_input() {
        let br = decompose_input(&ChannelSpec::maximal(3), &QuditPureState::basis(3, 0)).unwrap();
        assert!((br[0].probability - 1.0 / 9.0).abs() < 1e-15);
        let cond = br[0].conditional_state.as_ref().unwrap();
        assert!((cond.amplitudes()[0] - ONE).norm() < 1e-15);
    }

    #[test]
    fn rational_success() {
        assert_eq!(
            success_probability(Scheme::MaximalSingleBasis),
            Ratio::new(1, 54)
        );
        assert_eq!(
            success_probability(Scheme::NonmaximalRebalanced),
            Ratio::new(1, 18)
        );
        assert_eq!(
            success_probability(Scheme::NonmaximalRebalanced)
                / success_probability(Scheme::MaximalSingleBasis),
            Ratio::from_integer(3)
        );
    }

    #[test]
    fn degenerate_branch() {
        // input |0⟩ with a channel missing |11⟩: outcome m=1 needs c_1
        let ch = ChannelSpec::new(vec![0.5f64.sqrt(), 0.0, 0.5f64.sqrt()]).unwrap();
        let err = teleport_ideal(&ch, &QuditPureState::basis(3, 0), BellLabel { n: 0, m: 1 });
        assert_eq!(err.unwrap_err(), Error::DegenerateOutcome { n: 0, m: 1 });
    }
}
