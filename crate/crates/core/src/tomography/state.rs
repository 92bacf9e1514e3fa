use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::counts::CountsTable;
use super::projectors::ProjectorSet;
use crate::algebra::QuditDensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::optim::{bfgs, BfgsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMethod {
    Linear,
    Mle,
}

/// Reconstructs a qutrit state from counts on the canonical nine projectors.
pub fn reconstruct_state(counts: &CountsTable, method: StateMethod) -> Result<QuditDensityMatrix> {
    reconstruct_state_with(counts, &ProjectorSet::canonical(), method)
}

pub fn reconstruct_state_with(
    counts: &CountsTable,
    projectors: &ProjectorSet,
    method: StateMethod,
) -> Result<QuditDensityMatrix> {
    if counts.counts.len() != projectors.len() {
        return Err(Error::DimensionMismatch {
            expected: projectors.len(),
            found: counts.counts.len(),
        });
    }
    if counts.total() == 0 {
        return Err(Error::InsufficientData("all counts are zero".into()));
    }
    let unnorm = if projectors.is_canonical() {
        canonical_linear(counts)?
    } else {
        least_squares_linear(counts, projectors)?
    };
    let tr = linalg::trace(&unnorm).re;
    if !(tr > 0.0) {
        return Err(Error::InsufficientData(
            "linear estimate has non-positive trace".into(),
        ));
    }
    match method {
        StateMethod::Linear => Ok(QuditDensityMatrix::unchecked(unnorm / c(tr, 0.0))),
        StateMethod::Mle => mle(counts, projectors, &unnorm),
    }
}

/// Diagonal from the three basis counts normalized to their sum; coherences
/// from the (j+k) and (j+ik) projectors. Returned with trace N = n0+n1+n2.
fn canonical_linear(counts: &CountsTable) -> Result<CMatrix> {
    let n = counts.as_f64();
    let total = n[0] + n[1] + n[2];
    if total <= 0.0 {
        return Err(Error::InsufficientData(
            "no counts in the computational basis".into(),
        ));
    }
    let p: Vec<f64> = n.iter().map(|x| x / total).collect();
    let mut rho = CMatrix::zeros(3, 3);
    for k in 0..3 {
        rho[(k, k)] = c(p[k], 0.0);
    }
    // (index of j+k, index of j+ik) for the pairs 01, 02, 12
    for (j, k, re_idx, im_idx) in [(0, 1, 3, 4), (0, 2, 5, 6), (1, 2, 7, 8)] {
        let half = 0.5 * (p[j] + p[k]);
        let z = c(p[re_idx] - half, half - p[im_idx]);
        rho[(j, k)] = z;
        rho[(k, j)] = z.conj();
    }
    Ok(rho * c(total, 0.0))
}

fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = c(1.0, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut re = CMatrix::zeros(d, d);
            re[(j, k)] = c(1.0, 0.0);
            re[(k, j)] = c(1.0, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(d, d);
            im[(j, k)] = c(0.0, 1.0);
            im[(k, j)] = c(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

/// Unconstrained least-squares fit of a Hermitian X with n_i ≈ ⟨ψ_i|X|ψ_i⟩.
fn least_squares_linear(counts: &CountsTable, projectors: &ProjectorSet) -> Result<CMatrix> {
    let d = projectors.dim();
    let basis = hermitian_basis(d);
    let a = DMatrix::from_fn(projectors.len(), basis.len(), |i, k| {
        linalg::expectation(&basis[k], projectors.kets()[i].amplitudes())
    });
    let b = DVector::from_vec(counts.as_f64());
    let svd = a.svd(true, true);
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
    if rank < basis.len() {
        return Err(Error::IllPosed(format!(
            "projector set spans {rank} of {} state parameters",
            basis.len()
        )));
    }
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::Solver {
        message: e.to_string(),
        residual: f64::NAN,
    })?;
    let mut m = CMatrix::zeros(d, d);
    for (k, bm) in basis.iter().enumerate() {
        m += bm * c(x[k], 0.0);
    }
    Ok(m)
}

fn lower_from_params(x: &[f64], d: usize) -> CMatrix {
    let mut l = CMatrix::zeros(d, d);
    let mut idx = d;
    for k in 0..d {
        l[(k, k)] = c(x[k], 0.0);
    }
    for i in 1..d {
        for j in 0..i {
            l[(i, j)] = c(x[idx], x[idx + 1]);
            idx += 2;
        }
    }
    l
}

fn params_from_lower(l: &CMatrix) -> Vec<f64> {
    let d = l.nrows();
    let mut x: Vec<f64> = (0..d).map(|k| l[(k, k)].re).collect();
    for i in 1..d {
        for j in 0..i {
            x.push(l[(i, j)].re);
            x.push(l[(i, j)].im);
        }
    }
    x
}

/// Poisson negative log-likelihood Σ λ_i − n_i ln λ_i for intensities λ_i = ⟨ψ_i|X|ψ_i⟩.
pub fn poisson_nll(x: &CMatrix, projectors: &ProjectorSet, counts: &[f64]) -> f64 {
    let mut f = 0.0;
    for (k, n) in projectors.kets().iter().zip(counts) {
        let lam = linalg::expectation(x, k.amplitudes());
        if *n > 0.0 {
            if lam <= 0.0 {
                return f64::INFINITY;
            }
            f += lam - n * lam.ln();
        } else {
            f += lam;
        }
    }
    f
}

fn reproduces_exactly(x: &CMatrix, projectors: &ProjectorSet, counts: &[f64]) -> bool {
    projectors
        .kets()
        .iter()
        .zip(counts)
        .all(|(k, n)| (linalg::expectation(x, k.amplitudes()) - n).abs() <= 1e-9 * n.max(1.0))
}

fn mle(
    counts: &CountsTable,
    projectors: &ProjectorSet,
    linear: &CMatrix,
) -> Result<QuditDensityMatrix> {
    let d = projectors.dim();
    let n = counts.as_f64();
    let h = linalg::hermitian_part(linear);
    let tr = linalg::trace(&h).re;

    // A physical estimate that reproduces every count is already the maximizer.
    let (vals, vecs) = linalg::eigh(&h);
    if vals[0] >= -1e-12 * tr && reproduces_exactly(&h, projectors, &n) {
        let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let m = linalg::from_eigen(&clipped, &vecs);
        let t = linalg::trace(&m).re;
        return QuditDensityMatrix::new(linalg::hermitian_part(&(m / c(t, 0.0))));
    }

    // seed: PSD part of the linear estimate, mixed with a little white noise
    let seed = linalg::psd_projection(&h) * c(0.99, 0.0)
        + linalg::identity(d) * c(0.01 * tr / d as f64, 0.0);
    let l0 = seed
        .clone()
        .cholesky()
        .map(|ch| ch.l())
        .ok_or_else(|| Error::Solver {
            message: "seed is not positive definite".into(),
            residual: linalg::min_eigenvalue(&seed),
        })?;
    let kets: Vec<_> = projectors
        .kets()
        .iter()
        .map(|k| k.amplitudes().clone())
        .collect();
    let res = bfgs(&params_from_lower(&l0), BfgsOptions::default(), |x| {
        let l = lower_from_params(x, d);
        let mut f = 0.0;
        let mut g = CMatrix::zeros(d, d);
        for (k, &nk) in kets.iter().zip(&n) {
            let y = l.adjoint() * k;
            let lam = y.norm_squared();
            if nk > 0.0 {
                if lam <= 0.0 {
                    return (f64::INFINITY, vec![0.0; x.len()]);
                }
                f += lam - nk * lam.ln();
            } else {
                f += lam;
            }
            let w = if nk > 0.0 { 1.0 - nk / lam } else { 1.0 };
            g += (k * y.adjoint()) * c(w, 0.0);
        }
        let mut grad: Vec<f64> = (0..d).map(|i| 2.0 * g[(i, i)].re).collect();
        for i in 1..d {
            for j in 0..i {
                grad.push(2.0 * g[(i, j)].re);
                grad.push(2.0 * g[(i, j)].im);
            }
        }
        (f, grad)
    });
    if !res.f.is_finite() {
        return Err(Error::Solver {
            message: "likelihood diverged".into(),
            residual: res.f,
        });
    }
    let l = lower_from_params(&res.x, d);
    let x = &l * l.adjoint();
    let t = linalg::trace(&x).re;
    QuditDensityMatrix::new(linalg::hermitian_part(&(x / c(t, 0.0))))
}

/// Counts that exactly match `exposure · ⟨ψ_i|ρ|ψ_i⟩` when these are integers.
pub fn exact_counts(rho: &CMatrix, projectors: &ProjectorSet, exposure: f64) -> CountsTable {
    let counts = projectors
        .kets()
        .iter()
        .map(|k| {
            (exposure * linalg::expectation(rho, k.amplitudes()))
                .round()
                .max(0.0) as u64
        })
        .collect();
    CountsTable { counts, exposure }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::QuditPureState;
    use crate::linalg::I;

    #[test]
    fn noiseless_round_trip_both_methods() {
        let r = c(0.5f64.sqrt(), 0.0);
        for psi in [
            QuditPureState::basis(3, 0),
            QuditPureState::new(vec![r, r, c(0.0, 0.0)]).unwrap(),
        ] {
            let t = exact_counts(&psi.projector(), &ProjectorSet::canonical(), 1000.0);
            for m in [StateMethod::Linear, StateMethod::Mle] {
                let est = reconstruct_state(&t, m).unwrap();
                assert!(
                    linalg::max_abs(&(est.matrix() - psi.projector())) < 1e-9,
                    "{m:?}"
                );
            }
        }
    }

    #[test]
    fn mle_is_physical_for_unphysical_linear() {
        // counts inconsistent with any state: strong coherence with small populations
        let t = CountsTable::new(vec![50, 50, 0, 100, 50, 40, 25, 40, 25], 100.0).unwrap();
        let lin = reconstruct_state(&t, StateMethod::Linear).unwrap();
        assert!(!lin.is_physical());
        let ml = reconstruct_state(&t, StateMethod::Mle).unwrap();
        assert!(ml.is_physical());
        assert!(poisson_nll(
            &(ml.matrix() * c(100.0, 0.0)),
            &ProjectorSet::canonical(),
            &t.as_f64()
        )
        .is_finite());
    }

    #[test]
    fn general_set_matches_canonical_on_exact_data() {
        let psi = QuditPureState::normalized(vec![c(0.3, 0.1), c(-0.5, 0.2), I * 0.7]).unwrap();
        let rho = psi
            .density()
            .mix(&QuditDensityMatrix::maximally_mixed(3), 0.8);
        let mub = ProjectorSet::mub();
        let expected: Vec<f64> = mub
            .kets()
            .iter()
            .map(|k| 1e6 * linalg::expectation(rho.matrix(), k.amplitudes()))
            .collect();
        let x = least_squares_linear(
            &CountsTable::new(expected.iter().map(|v| v.round() as u64).collect(), 1e6).unwrap(),
            &mub,
        )
        .unwrap();
        let est = &x / c(linalg::trace(&x).re, 0.0);
        assert!(linalg::max_abs(&(est - rho.matrix())) < 1e-5);
    }

    #[test]
    fn zero_counts_rejected() {
        let t = CountsTable::new(vec![0; 9], 10.0).unwrap();
        assert!(matches!(
            reconstruct_state(&t, StateMethod::Mle),
            Err(Error::InsufficientData(_))
        ));
    }
}
