//! Genuine-qutrit certification: fidelity witness, linear and nonlinear Bloch
//! criteria, and the white-noise robustness μ against mixtures of states each
//! supported on a two-level subspace.
//!
//! The qubit-mixture program reduces exactly: each off-diagonal of R belongs to
//! one block, so only the six diagonal allocations are free. With a1 = x the
//! remaining allocations are fixed at their tightest values and feasibility is
//! `max_x (R11 − |R01|²/x)(R22 − |R02|²/(R00 − x)) ≥ |R12|²`, a one-dimensional
//! log-concave maximization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{bloch_vector, max_coherent_state, phased_max_coherent, QuditDensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::tomography::{apply_process, ProcessMatrix};

/// Gell-Mann index triples (1-based) of the eight linear criteria.
pub const LINEAR_TRIPLES: [[usize; 3]; 8] = [
    [1, 4, 6],
    [1, 4, 7],
    [1, 5, 6],
    [1, 5, 7],
    [2, 4, 6],
    [2, 4, 7],
    [2, 5, 6],
    [2, 5, 7],
];

/// μ above this counts as genuine.
pub const VERDICT_THRESHOLD: f64 = 1e-7;
const FEAS_TOL: f64 = 1e-12;
const BISECTION_WIDTH: f64 = 1e-9;

fn check_qutrit(rho: &QuditDensityMatrix) -> Result<()> {
    if rho.dim() != 3 {
        return Err(Error::UnsupportedDimension(rho.dim()));
    }
    Ok(())
}

/// |⟨λa⟩ + ⟨λb⟩ + ⟨λc⟩| for each triple in [`LINEAR_TRIPLES`].
pub fn linear_criteria(rho: &QuditDensityMatrix) -> Result<[f64; 8]> {
    check_qutrit(rho)?;
    let b = bloch_vector(rho)?;
    let mut out = [0.0; 8];
    for (o, t) in out.iter_mut().zip(LINEAR_TRIPLES) {
        *o = t.iter().map(|&k| b[k - 1]).sum::<f64>().abs();
    }
    Ok(out)
}

pub fn nonlinear_criterion(rho: &QuditDensityMatrix) -> Result<f64> {
    check_qutrit(rho)?;
    let b = bloch_vector(rho)?;
    Ok(b[0].hypot(b[1]) + b[3].hypot(b[4]) + b[5].hypot(b[6]))
}

/// Overlap with the maximally coherent state; above 2/3 certifies.
pub fn fidelity_witness(rho: &QuditDensityMatrix) -> Result<f64> {
    check_qutrit(rho)?;
    Ok(linalg::expectation(
        rho.matrix(),
        max_coherent_state().amplitudes(),
    ))
}

/// Three blocks supported on the {0,1}, {0,2} and {1,2} subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition {
    pub sigma_01: CMatrix,
    pub sigma_02: CMatrix,
    pub sigma_12: CMatrix,
}

impl SubspaceDecomposition {
    pub fn total(&self) -> CMatrix {
        &self.sigma_01 + &self.sigma_02 + &self.sigma_12
    }

    pub fn blocks(&self) -> [&CMatrix; 3] {
        [&self.sigma_01, &self.sigma_02, &self.sigma_12]
    }

    /// Largest violation of positivity, support, and the reconstruction of `target`.
    pub fn residual(&self, target: &CMatrix) -> f64 {
        let mut r = linalg::max_abs(&(self.total() - target));
        for (blk, outside) in self.blocks().into_iter().zip([2, 1, 0]) {
            r = r.max(-linalg::min_eigenvalue(blk));
            for k in 0..3 {
                r = r
                    .max(blk[(outside, k)].norm())
                    .max(blk[(k, outside)].norm());
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GenuineQutrit,
    QubitSimulable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub linear_values: [f64; 8],
    pub nonlinear_lhs: f64,
    pub fidelity_witness: f64,
    pub mu: f64,
    pub decomposition: Option<SubspaceDecomposition>,
    pub verdict: Verdict,
}

/// Golden-section maximization of a unimodal function on [lo, hi].
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let cands = [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)];
    cands.into_iter().fold(
        (lo, f64::NEG_INFINITY),
        |best, p| if p.1 > best.1 { p } else { best },
    )
}

/// Decomposition of a Hermitian matrix into the three two-level blocks, if one exists.
pub fn subspace_decomposition(r: &CMatrix) -> Option<SubspaceDecomposition> {
    let r = linalg::hermitian_part(r);
    let (r00, r11, r22) = (r[(0, 0)].re, r[(1, 1)].re, r[(2, 2)].re);
    if r00 < -FEAS_TOL || r11 < -FEAS_TOL || r22 < -FEAS_TOL {
        return None;
    }
    let (r00, r11, r22) = (r00.max(0.0), r11.max(0.0), r22.max(0.0));
    let q01 = r[(0, 1)].norm_sqr();
    let q02 = r[(0, 2)].norm_sqr();
    let q12 = r[(1, 2)].norm_sqr();
    let lo = if q01 > 0.0 {
        if r11 <= 0.0 {
            return None;
        }
        q01 / r11
    } else {
        0.0
    };
    let hi = if q02 > 0.0 {
        if r22 <= 0.0 {
            return None;
        }
        r00 - q02 / r22
    } else {
        r00
    };
    if lo > hi + FEAS_TOL {
        return None;
    }
    let hi = hi.max(lo);
    let alloc = |x: f64| {
        let b1 = if q01 > 0.0 { q01 / x } else { 0.0 };
        let a2 = r00 - x;
        let b2 = if q02 > 0.0 { q02 / a2 } else { 0.0 };
        (b1, a2, b2, r11 - b1, r22 - b2)
    };
    let phi = |x: f64| {
        let (_, _, _, a3, b3) = alloc(x);
        if !(a3 >= 0.0 && b3 >= 0.0) {
            return f64::NEG_INFINITY;
        }
        a3 * b3
    };
    let (x, best) = if hi - lo <= 0.0 {
        (lo, phi(lo))
    } else {
        golden_max(phi, lo, hi)
    };
    if !(best >= q12 - FEAS_TOL * (1.0 + q12)) {
        return None;
    }
    let (b1, a2, b2, a3, b3) = alloc(x);
    let block = |i: usize, j: usize, a: f64, b: f64| {
        let mut m = CMatrix::zeros(3, 3);
        m[(i, i)] = c(a.max(0.0), 0.0);
        m[(j, j)] = c(b.max(0.0), 0.0);
        m[(i, j)] = r[(i, j)];
        m[(j, i)] = r[(j, i)];
        m
    };
    Some(SubspaceDecomposition {
        sigma_01: block(0, 1, x, b1),
        sigma_02: block(0, 2, a2, b2),
        sigma_12: block(1, 2, a3, b3),
    })
}

fn noisy(rho: &QuditDensityMatrix, mu: f64) -> CMatrix {
    linalg::identity(3) * c(mu / 3.0, 0.0) + rho.matrix() * c(1.0 - mu, 0.0)
}

/// The plain qubit-mixture program: a decomposition of ρ itself, if any.
pub fn qubit_mixture_feasibility(
    rho: &QuditDensityMatrix,
) -> Result<Option<SubspaceDecomposition>> {
    check_qutrit(rho)?;
    Ok(subspace_decomposition(rho.matrix()))
}

/// Minimal μ ∈ [−1, 1] with μ·I/3 + (1−μ)ρ a qubit mixture, and the
/// decomposition found there.
pub fn robustness_mu(rho: &QuditDensityMatrix) -> Result<(f64, SubspaceDecomposition)> {
    check_qutrit(rho)?;
    let Some(top) = subspace_decomposition(&noisy(rho, 1.0)) else {
        return Err(Error::Solver {
            message: "white noise itself is not decomposable".into(),
            residual: linalg::hermiticity_residual(rho.matrix()),
        });
    };
    if let Some(d) = subspace_decomposition(&noisy(rho, -1.0)) {
        return Ok((-1.0, d));
    }
    let (mut lo, mut hi, mut best) = (-1.0, 1.0, top);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        match subspace_decomposition(&noisy(rho, mid)) {
            Some(d) => {
                hi = mid;
                best = d;
            }
            None => lo = mid,
        }
    }
    Ok((hi, best))
}

pub fn certify(rho: &QuditDensityMatrix) -> Result<CertificationReport> {
    let (mu, decomposition) = robustness_mu(rho)?;
    Ok(CertificationReport {
        linear_values: linear_criteria(rho)?,
        nonlinear_lhs: nonlinear_criterion(rho)?,
        fidelity_witness: fidelity_witness(rho)?,
        mu,
        decomposition: Some(decomposition),
        verdict: if mu > VERDICT_THRESHOLD {
            Verdict::GenuineQutrit
        } else {
            Verdict::QubitSimulable
        },
    })
}

/// Phases for the maximally coherent input family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub n1: usize,
    pub n2: usize,
    /// Closed: kπ/(n−1), endpoints 0 and π included. Half-open: kπ/n.
    pub closed: bool,
}

impl PhaseGrid {
    pub fn new(n1: usize, n2: usize, closed: bool) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidState(
                "phase grid needs at least one point per axis".into(),
            ));
        }
        Ok(PhaseGrid { n1, n2, closed })
    }

    fn axis(&self, n: usize) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        (0..n)
            .map(|k| match (self.closed, n) {
                (_, 1) => 0.0,
                (true, _) => k as f64 * pi / (n - 1) as f64,
                (false, _) => k as f64 * pi / n as f64,
            })
            .collect()
    }

    pub fn phases1(&self) -> Vec<f64> {
        self.axis(self.n1)
    }

    pub fn phases2(&self) -> Vec<f64> {
        self.axis(self.n2)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub i: usize,
    pub j: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_genuine: usize,
    pub n_simulable: usize,
    /// States with |μ| within the verdict threshold, counted as simulable.
    pub n_borderline: usize,
    pub mean_mu_of_genuine: f64,
    pub std_mu_of_genuine: f64,
    pub points: Vec<GridPoint>,
}

/// Certifies every grid state after it passes through χ.
pub fn batch_certification(chi: &ProcessMatrix, grid: &PhaseGrid) -> Result<BatchSummary> {
    let (p1, p2) = (grid.phases1(), grid.phases2());
    let coords: Vec<(usize, usize)> = (0..grid.n1)
        .flat_map(|i| (0..grid.n2).map(move |j| (i, j)))
        .collect();
    let points = coords
        .par_iter()
        .map(|&(i, j)| {
            let input = phased_max_coherent(p1[i], p2[j]);
            let out = apply_process(chi, &input.density());
            let (mu, _) = robustness_mu(&out).map_err(|e| Error::Solver {
                message: format!("grid point ({i},{j}): {e}"),
                residual: f64::NAN,
            })?;
            Ok(GridPoint {
                i,
                j,
                phi1: p1[i],
                phi2: p2[j],
                mu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(points))
}

pub fn summarize(points: Vec<GridPoint>) -> BatchSummary {
    let genuine: Vec<f64> = points
        .iter()
        .map(|p| p.mu)
        .filter(|&m| m > VERDICT_THRESHOLD)
        .collect();
    let n_borderline = points
        .iter()
        .filter(|p| p.mu.abs() <= VERDICT_THRESHOLD)
        .count();
    let n = genuine.len();
    let mean = if n > 0 {
        genuine.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let std = if n > 1 {
        (genuine.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    BatchSummary {
        n_genuine: n,
        n_simulable: points.len() - n,
        n_borderline,
        mean_mu_of_genuine: mean,
        std_mu_of_genuine: std,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::QuditPureState;

    #[test]
    fn max_coherent_values() {
        let rho = max_coherent_state().density();
        let lin = linear_criteria(&rho).unwrap();
        assert!((lin[0] - 2.0).abs() < 1e-12);
        assert!((nonlinear_criterion(&rho).unwrap() - 2.0).abs() < 1e-12);
        assert!((fidelity_witness(&rho).unwrap() - 1.0).abs() < 1e-12);
        let (mu, _) = robustness_mu(&rho).unwrap();
        assert!((mu - 0.5).abs() < 1e-6, "{mu}");
        assert!(qubit_mixture_feasibility(&rho).unwrap().is_none());
    }

    #[test]
    fn diagonal_states_are_simulable() {
        for rho in [
            QuditDensityMatrix::maximally_mixed(3),
            QuditPureState::basis(3, 0).density(),
        ] {
            assert!(linear_criteria(&rho)
                .unwrap()
                .iter()
                .all(|v| v.abs() < 1e-12));
            assert!(nonlinear_criterion(&rho).unwrap().abs() < 1e-12);
            let r = certify(&rho).unwrap();
            assert_eq!(r.verdict, Verdict::QubitSimulable);
            assert!(r.mu <= 1e-9);
        }
        let (mu, _) = robustness_mu(&QuditPureState::basis(3, 0).density()).unwrap();
        assert!(mu.abs() < 1e-6);
    }

    #[test]
    fn half_noise_sits_on_boundary() {
        let rho = max_coherent_state()
            .density()
            .mix(&QuditDensityMatrix::maximally_mixed(3), 0.5);
        let d = qubit_mixture_feasibility(&rho)
            .unwrap()
            .expect("boundary state is feasible");
        assert!(d.residual(rho.matrix()) < 1e-7);
    }

    #[test]
    fn qubit_dimension_rejected() {
        let rho = QuditDensityMatrix::maximally_mixed(2);
        assert!(matches!(
            linear_criteria(&rho),
            Err(Error::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn grid_conventions() {
        let closed = PhaseGrid::new(20, 20, true).unwrap();
        let open = PhaseGrid::new(20, 20, false).unwrap();
        assert!((closed.phases1()[19] - std::f64::consts::PI).abs() < 1e-15);
        assert!((open.phases1()[1] - std::f64::consts::PI / 20.0).abs() < 1e-15);
        assert_eq!(PhaseGrid::new(1, 1, true).unwrap().phases2(), vec![0.0]);
        assert!(PhaseGrid::new(0, 3, true).is_err());
    }
}
