//! Qudit states and operator families: Gell-Mann matrices, Weyl operators,
//! Bell bases, the qutrit MUB family and fidelity/Bloch utilities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, CMatrix, CVector, C64, I, ONE, ZERO};

const NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-9;

/// A normalized pure state of a d-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditPureState {
    amplitudes: CVector,
}

impl QuditPureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let v = CVector::from_vec(amplitudes);
        if v.len() < 2 {
            return Err(Error::UnsupportedDimension(v.len()));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {n2}, expected 1"
            )));
        }
        Ok(QuditPureState { amplitudes: v })
    }

    /// Normalizes the given amplitudes; fails on a zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = CVector::from_vec(amplitudes);
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize zero vector".into()));
        }
        Self::new((v / c(n, 0.0)).iter().copied().collect())
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[k] = ONE;
        QuditPureState {
            amplitudes: CVector::from_vec(v),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> CMatrix {
        linalg::outer(&self.amplitudes)
    }

    pub fn density(&self) -> QuditDensityMatrix {
        QuditDensityMatrix {
            entries: self.projector(),
        }
    }

    pub fn inner(&self, other: &QuditPureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Hermitian, PSD, unit-trace d×d matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditDensityMatrix {
    entries: CMatrix,
}

impl QuditDensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::check(&entries)?;
        Ok(QuditDensityMatrix { entries })
    }

    fn check(m: &CMatrix) -> Result<()> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(Error::UnsupportedDimension(m.nrows()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let h = linalg::hermiticity_residual(m);
        if h > DENSITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {h:.2e})"
            )));
        }
        let tr = linalg::trace(m).re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidState(format!("trace {tr}, expected 1")));
        }
        let e = linalg::min_eigenvalue(m);
        if e < -DENSITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {e:.2e}")));
        }
        Ok(())
    }

    /// Wraps a matrix without checking positivity; used for linear-inversion
    /// estimates that may fall slightly outside the state space.
    pub fn unchecked(entries: CMatrix) -> Self {
        QuditDensityMatrix { entries }
    }

    pub fn is_physical(&self) -> bool {
        Self::check(&self.entries).is_ok()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        QuditDensityMatrix {
            entries: linalg::identity(dim) / c(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `p·self + (1-p)·other`.
    pub fn mix(&self, other: &QuditDensityMatrix, p: f64) -> Self {
        QuditDensityMatrix {
            entries: &self.entries * c(p, 0.0) + &other.entries * c(1.0 - p, 0.0),
        }
    }
}

/// Index pair (n, m) of a Bell state or Weyl operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellLabel {
    pub n: usize,
    pub m: usize,
}

impl BellLabel {
    pub fn new(n: usize, m: usize, dim: usize) -> Result<Self> {
        if n >= dim || m >= dim {
            return Err(Error::InvalidState(format!(
                "label ({n},{m}) out of range for d={dim}"
            )));
        }
        Ok(BellLabel { n, m })
    }

    /// All d² labels, ordered by n then m.
    pub fn all(dim: usize) -> Vec<BellLabel> {
        (0..dim)
            .flat_map(|n| (0..dim).map(move |m| BellLabel { n, m }))
            .collect()
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.n, self.m)
    }
}

/// Two-qudit pure state; amplitude of |i⟩|j⟩ stored at `i*dim + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    pub dim: usize,
    pub amplitudes: CVector,
}

impl BipartitePureState {
    pub fn new(dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: amplitudes.len(),
            });
        }
        let v = CVector::from_vec(amplitudes);
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {n2}, expected 1"
            )));
        }
        Ok(BipartitePureState { dim, amplitudes: v })
    }

    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        self.amplitudes[i * self.dim + j]
    }
}

fn omega(dim: usize) -> C64 {
    cis(2.0 * PI / dim as f64)
}

fn omega_pow(dim: usize, k: usize) -> C64 {
    cis(2.0 * PI * (k % dim) as f64 / dim as f64)
}

fn require_qutrit(dim: usize) -> Result<()> {
    if dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

/// `[I, λ1, …, λ8]` with the standard Gell-Mann matrices, Tr(λiλj) = 2δij.
pub fn gell_mann_basis(dim: usize) -> Result<Vec<CMatrix>> {
    require_qutrit(dim)?;
    let z = ZERO;
    let o = ONE;
    let s = 1.0 / 3f64.sqrt();
    let m = |v: [C64; 9]| CMatrix::from_row_slice(3, 3, &v);
    Ok(vec![
        linalg::identity(3),
        m([z, o, z, o, z, z, z, z, z]),
        m([z, -I, z, I, z, z, z, z, z]),
        m([o, z, z, z, -o, z, z, z, z]),
        m([z, z, o, z, z, z, o, z, z]),
        m([z, z, -I, z, z, z, I, z, z]),
        m([z, z, z, z, z, o, z, o, z]),
        m([z, z, z, z, z, -I, z, I, z]),
        m([c(s, 0.0), z, z, z, c(s, 0.0), z, z, z, c(-2.0 * s, 0.0)]),
    ])
}

/// Operator basis for the χ-matrix: σ0 = I and σa = √(3/2)·λa, so that
/// Tr(σk σl) = 3δkl for every pair including σ0.
pub fn process_basis() -> Vec<CMatrix> {
    let gm = gell_mann_basis(3).expect("qutrit basis");
    let scale = c((1.5f64).sqrt(), 0.0);
    gm.into_iter()
        .enumerate()
        .map(|(k, m)| if k == 0 { m } else { m * scale })
        .collect()
}

/// U_nm = Σ_k ω^{kn} |k⟩⟨k+m|.
pub fn weyl_operator(label: BellLabel, dim: usize) -> CMatrix {
    let mut u = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        u[(k, (k + label.m) % dim)] = omega_pow(dim, k * label.n);
    }
    u
}

/// The matrix layout used in the printed qutrit table of correction
/// operators: the transpose of [`weyl_operator`]. It equals the correction
/// when the Bell kets are read with the channel photon first.
pub fn weyl_operator_transposed(label: BellLabel, dim: usize) -> CMatrix {
    weyl_operator(label, dim).transpose()
}

/// |ψ_nm⟩ = d^{-1/2} Σ_j ω^{jn} |j⟩|j+m⟩.
pub fn bell_state(label: BellLabel, dim: usize) -> BipartitePureState {
    let norm = 1.0 / (dim as f64).sqrt();
    let mut amps = vec![ZERO; dim * dim];
    for j in 0..dim {
        amps[j * dim + (j + label.m) % dim] = omega_pow(dim, j * label.n) * norm;
    }
    BipartitePureState {
        dim,
        amplitudes: CVector::from_vec(amps),
    }
}

/// The twelve qutrit states of the four mutually unbiased bases, in the order
/// |0⟩,|1⟩,|2⟩, then the three Fourier-type bases.
pub fn mub_family(dim: usize) -> Result<Vec<QuditPureState>> {
    require_qutrit(dim)?;
    let w = omega(3);
    let w2 = w * w;
    let o = ONE;
    let s = c(1.0 / 3f64.sqrt(), 0.0);
    let f = |a: C64, b: C64, d: C64| QuditPureState {
        amplitudes: CVector::from_vec(vec![a * s, b * s, d * s]),
    };
    Ok(vec![
        QuditPureState::basis(3, 0),
        QuditPureState::basis(3, 1),
        QuditPureState::basis(3, 2),
        f(o, o, o),
        f(o, w, w2),
        f(o, w2, w),
        f(w, o, o),
        f(o, w, o),
        f(o, o, w),
        f(w2, o, o),
        f(o, w2, o),
        f(o, o, w2),
    ])
}

/// (|0⟩ + |1⟩ + |2⟩)/√3.
pub fn max_coherent_state() -> QuditPureState {
    phased_max_coherent(0.0, 0.0)
}

/// (|0⟩ + e^{iφ1}|1⟩ + e^{iφ2}|2⟩)/√3.
pub fn phased_max_coherent(phi1: f64, phi2: f64) -> QuditPureState {
    let s = 1.0 / 3f64.sqrt();
    QuditPureState {
        amplitudes: CVector::from_vec(vec![c(s, 0.0), cis(phi1) * s, cis(phi2) * s]),
    }
}

/// ⟨target|ρ|target⟩.
pub fn fidelity(rho: &QuditDensityMatrix, target: &QuditPureState) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: target.dim(),
        });
    }
    Ok(linalg::expectation(rho.matrix(), target.amplitudes()))
}

/// ⟨λ1⟩ … ⟨λ8⟩.
pub fn bloch_vector(rho: &QuditDensityMatrix) -> Result<[f64; 8]> {
    bloch_vector_of(rho.matrix())
}

pub fn bloch_vector_of(m: &CMatrix) -> Result<[f64; 8]> {
    require_qutrit(m.nrows())?;
    let gm = gell_mann_basis(3)?;
    let mut out = [0.0; 8];
    for (k, lam) in gm.iter().skip(1).enumerate() {
        out[k] = linalg::trace(&(m * lam)).re;
    }
    Ok(out)
}

/// ρ = I/3 + ½ Σ ⟨λi⟩ λi.
pub fn density_from_bloch(b: &[f64; 8]) -> CMatrix {
    let gm = gell_mann_basis(3).expect("qutrit basis");
    let mut m = linalg::identity(3) / c(3.0, 0.0);
    for (k, lam) in gm.iter().skip(1).enumerate() {
        m += lam * c(0.5 * b[k], 0.0);
    }
    m
}

/// ⌈log₂ d⌉ − 1 auxiliary entangled pairs for a d-dimensional Bell measurement.
pub fn aux_pairs_needed(dim: usize) -> Result<usize> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let bits = usize::BITS - (dim - 1).leading_zeros();
    Ok(bits as usize - 1)
}
