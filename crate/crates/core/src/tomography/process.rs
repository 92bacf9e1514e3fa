use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::projectors::ProjectorSet;
use crate::algebra::{mub_family, process_basis, QuditDensityMatrix, QuditPureState};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

const DIM: usize = 3;
const NB: usize = 9;
const HERM_TOL: f64 = 1e-9;
const TP_TOL: f64 = 1e-6;

/// χ over the basis σ0 = I, σa = √(3/2)λa:  E(ρ) = Σ χ_lk σ_l ρ σ_k.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    entries: CMatrix,
}

impl ProcessMatrix {
    /// Checks Hermiticity, positivity and trace preservation.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let p = Self::unchecked(entries);
        let h = linalg::hermiticity_residual(&p.entries);
        if h > HERM_TOL {
            return Err(Error::InvalidState(format!(
                "χ not Hermitian (residual {h:.2e})"
            )));
        }
        let e = linalg::min_eigenvalue(&p.entries);
        if e < -HERM_TOL {
            return Err(Error::InvalidState(format!(
                "χ has negative eigenvalue {e:.2e}"
            )));
        }
        let tp = p.tp_residual();
        if tp > TP_TOL {
            return Err(Error::InvalidState(format!(
                "χ not trace preserving (residual {tp:.2e})"
            )));
        }
        Ok(p)
    }

    /// No checks; used for printed or intermediate matrices.
    pub fn unchecked(entries: CMatrix) -> Self {
        assert_eq!(entries.shape(), (NB, NB), "χ must be 9×9");
        ProcessMatrix { entries }
    }

    pub fn ideal() -> Self {
        let mut m = CMatrix::zeros(NB, NB);
        m[(0, 0)] = c(1.0, 0.0);
        ProcessMatrix { entries: m }
    }

    /// I/9: the completely depolarizing channel in this basis.
    pub fn depolarizing() -> Self {
        ProcessMatrix {
            entries: linalg::identity(NB) / c(NB as f64, 0.0),
        }
    }

    /// `p·χ_ideal + (1-p)·I/9`.
    pub fn noisy_identity(p: f64) -> Self {
        ProcessMatrix {
            entries: Self::ideal().entries * c(p, 0.0)
                + Self::depolarizing().entries * c(1.0 - p, 0.0),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    /// max |Σ χ_lk σ_k σ_l − I|.
    pub fn tp_residual(&self) -> f64 {
        let sb = basis();
        let mut s = CMatrix::zeros(DIM, DIM);
        for l in 0..NB {
            for k in 0..NB {
                s += &sb.prod[k * NB + l] * self.entries[(l, k)];
            }
        }
        linalg::max_abs(&(s - linalg::identity(DIM)))
    }

    pub fn is_physical(&self) -> bool {
        linalg::hermiticity_residual(&self.entries) <= HERM_TOL
            && linalg::min_eigenvalue(&self.entries) >= -HERM_TOL
            && self.tp_residual() <= TP_TOL
    }
}

struct Basis {
    sigma: Vec<CMatrix>,
    /// prod[a*9+b] = σa σb
    prod: Vec<CMatrix>,
    /// T: vec(χ) (index l*9+k) ↦ vec(Σ χ_lk σ_k σ_l), 9×81
    tp_map: CMatrix,
    tp_pinv: CMatrix,
}

fn basis() -> &'static Basis {
    static B: OnceLock<Basis> = OnceLock::new();
    B.get_or_init(|| {
        let sigma = process_basis();
        let mut prod = Vec::with_capacity(NB * NB);
        for a in 0..NB {
            for b in 0..NB {
                prod.push(&sigma[a] * &sigma[b]);
            }
        }
        let mut tp_map = CMatrix::zeros(DIM * DIM, NB * NB);
        for l in 0..NB {
            for k in 0..NB {
                let m = &prod[k * NB + l];
                for (r, z) in m.iter().enumerate() {
                    tp_map[(r, l * NB + k)] = *z;
                }
            }
        }
        let tp_pinv = linalg::pinv(&tp_map).expect("tp map pseudo-inverse");
        Basis {
            sigma,
            prod,
            tp_map,
            tp_pinv,
        }
    })
}

fn flatten(m: &CMatrix) -> CVector {
    // row-major: index l*9+k
    CVector::from_iterator(
        NB * NB,
        (0..NB).flat_map(|l| (0..NB).map(move |k| m[(l, k)])),
    )
}

fn unflatten(v: &CVector) -> CMatrix {
    CMatrix::from_fn(NB, NB, |l, k| v[l * NB + k])
}

/// Σ χ_lk σ_l ρ σ_k without any normalization.
pub fn apply_process_raw(chi: &ProcessMatrix, rho: &CMatrix) -> CMatrix {
    let sb = basis();
    let left: Vec<CMatrix> = sb.sigma.iter().map(|s| s * rho).collect();
    let mut out = CMatrix::zeros(DIM, DIM);
    for l in 0..NB {
        for k in 0..NB {
            let w = chi.entries[(l, k)];
            if w.norm() == 0.0 {
                continue;
            }
            out += &left[l] * &sb.sigma[k] * w;
        }
    }
    out
}

/// Output of the process, symmetrized and renormalized to unit trace.
pub fn apply_process(chi: &ProcessMatrix, rho: &QuditDensityMatrix) -> QuditDensityMatrix {
    let out = linalg::hermitian_part(&apply_process_raw(chi, rho.matrix()));
    let tr = linalg::trace(&out).re;
    QuditDensityMatrix::unchecked(out / c(tr, 0.0))
}

/// Tr(χ_ideal χ) = Re χ00.
pub fn process_fidelity(chi: &ProcessMatrix) -> f64 {
    chi.entries[(0, 0)].re
}

/// (f·d + 1)/(d + 1).
pub fn average_fidelity_from_process(f_process: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let d = dim as f64;
    Ok((f_process * d + 1.0) / (d + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubFidelities {
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Fidelity of every MUB state with its image under χ.
pub fn mub_fidelities(chi: &ProcessMatrix) -> MubFidelities {
    let values: Vec<f64> = mub_family(3)
        .expect("qutrit")
        .iter()
        .map(|psi| {
            let out = apply_process(chi, &psi.density());
            linalg::expectation(out.matrix(), psi.amplitudes())
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    MubFidelities { values, mean }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputOutputPair {
    pub input: QuditPureState,
    pub output: QuditDensityMatrix,
}

impl InputOutputPair {
    pub fn new(input: QuditPureState, output: QuditDensityMatrix) -> Result<Self> {
        if input.dim() != output.dim() {
            return Err(Error::DimensionMismatch {
                expected: input.dim(),
                found: output.dim(),
            });
        }
        Ok(InputOutputPair { input, output })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessObjective {
    /// Poisson likelihood of the projector probabilities of each output state.
    Likelihood,
    /// Σ‖E(ρ_in) − ρ_out‖² in Frobenius norm.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessFit {
    pub chi: ProcessMatrix,
    /// Σ_i ‖E(ρ_in,i) − ρ_out,i‖_F² at the solution for pair data.
    pub residual: f64,
    pub objective_value: f64,
    pub iterations: usize,
}

/// Reconstructs χ from input/output pairs with the likelihood objective on the
/// canonical projectors.
pub fn reconstruct_process(pairs: &[InputOutputPair]) -> Result<ProcessFit> {
    reconstruct_process_with(
        pairs,
        ProcessObjective::Likelihood,
        &ProjectorSet::canonical(),
    )
}

/// Data for the likelihood objective: p_ij = v_ij† χ v_ij against f_ij.
struct ProbabilityModel {
    vs: Vec<CVector>,
    freqs: Vec<f64>,
}

impl ProbabilityModel {
    fn new(inputs: &[QuditPureState], freqs: Vec<Vec<f64>>, projectors: &ProjectorSet) -> Self {
        let sb = basis();
        let mut vs = Vec::new();
        let mut fl = Vec::new();
        for (phi, row) in inputs.iter().zip(freqs) {
            let s_phi: Vec<CVector> = sb.sigma.iter().map(|s| s * phi.amplitudes()).collect();
            for (psi, f) in projectors.kets().iter().zip(row) {
                // v_a = conj(⟨ψ|σa|φ⟩)
                let v = CVector::from_iterator(
                    NB,
                    s_phi.iter().map(|sp| psi.amplitudes().dotc(sp).conj()),
                );
                vs.push(v);
                fl.push(f);
            }
        }
        ProbabilityModel { vs, freqs: fl }
    }

    fn probs(&self, chi: &CMatrix) -> Vec<f64> {
        self.vs
            .iter()
            .map(|v| (v.adjoint() * chi * v)[(0, 0)].re)
            .collect()
    }

    fn nll(&self, chi: &CMatrix) -> f64 {
        let mut f = 0.0;
        for (p, &y) in self.probs(chi).into_iter().zip(&self.freqs) {
            if y > 0.0 {
                if p <= 0.0 {
                    return f64::INFINITY;
                }
                f += p - y * p.ln();
            } else {
                f += p;
            }
        }
        f
    }

    fn grad(&self, chi: &CMatrix) -> CMatrix {
        let mut g = CMatrix::zeros(NB, NB);
        for (v, &y) in self.vs.iter().zip(&self.freqs) {
            let p = (v.adjoint() * chi * v)[(0, 0)].re;
            let w = if y > 0.0 { 1.0 - y / p } else { 1.0 };
            g += v * v.adjoint() * c(w, 0.0);
        }
        g
    }

    /// Unconstrained Hermitian χ solving the linear system p = f in least squares.
    fn linear_solution(&self) -> Result<CMatrix> {
        let hb = hermitian_basis_9();
        let a = DMatrix::from_fn(self.vs.len(), hb.len(), |i, k| {
            (self.vs[i].adjoint() * &hb[k] * &self.vs[i])[(0, 0)].re
        });
        let svd = a.svd(true, true);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-9 * svd.singular_values.max())
            .count();
        if rank < hb.len() {
            return Err(Error::IllPosed(format!(
                "inputs and projectors determine {rank} of {} process parameters",
                hb.len()
            )));
        }
        let x = svd
            .solve(&DVector::from_column_slice(&self.freqs), 1e-14)
            .map_err(|e| Error::Solver {
                message: e.to_string(),
                residual: f64::NAN,
            })?;
        let mut m = CMatrix::zeros(NB, NB);
        for (k, b) in hb.iter().enumerate() {
            m += b * c(x[k], 0.0);
        }
        Ok(m)
    }
}

fn hermitian_basis_9() -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(NB * NB);
    for k in 0..NB {
        let mut m = CMatrix::zeros(NB, NB);
        m[(k, k)] = c(1.0, 0.0);
        out.push(m);
    }
    for j in 0..NB {
        for k in j + 1..NB {
            let mut re = CMatrix::zeros(NB, NB);
            re[(j, k)] = c(1.0, 0.0);
            re[(k, j)] = c(1.0, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(NB, NB);
            im[(j, k)] = c(0.0, 1.0);
            im[(k, j)] = c(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

/// Projection onto the trace-preservation affine subspace.
pub fn project_tp(chi: &CMatrix) -> CMatrix {
    let sb = basis();
    let x = flatten(chi);
    let r = &sb.tp_map * &x - linalg::vec_of(&linalg::identity(DIM));
    let y = x - &sb.tp_pinv * r;
    linalg::hermitian_part(&unflatten(&y))
}

/// Dykstra alternating projection onto PSD ∩ TP.
pub fn project_cptp(chi: &CMatrix) -> CMatrix {
    let mut x = linalg::hermitian_part(chi);
    let mut p = CMatrix::zeros(NB, NB);
    let mut q = CMatrix::zeros(NB, NB);
    for _ in 0..20_000 {
        let y = linalg::psd_projection(&(&x + &p));
        p = &x + &p - &y;
        let xn = project_tp(&(&y + &q));
        q = &y + &q - &xn;
        let change = linalg::max_abs(&(&xn - &x));
        x = xn;
        if change < 1e-13 && linalg::min_eigenvalue(&x) > -1e-11 {
            break;
        }
    }
    x
}

fn frob_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Accelerated projected gradient with backtracking and adaptive restart on a
/// convex objective over PSD ∩ TP.
fn projected_gradient<F, G>(
    start: CMatrix,
    mut f: F,
    mut grad: G,
    max_iter: usize,
) -> (CMatrix, f64, usize)
where
    F: FnMut(&CMatrix) -> f64,
    G: FnMut(&CMatrix) -> CMatrix,
{
    let mut x = start;
    let mut fx = f(&x);
    let mut x_prev = x.clone();
    let mut momentum = 1.0f64;
    let mut step = 1e-2;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let mut y = &x + (&x - &x_prev) * c(beta, 0.0);
        let mut fy = f(&y);
        if !fy.is_finite() {
            y = x.clone();
            fy = fx;
        }
        let g = grad(&y);
        let mut accepted = None;
        for _ in 0..60 {
            let xt = project_cptp(&(&y - &g * c(step, 0.0)));
            let ft = f(&xt);
            let d = &xt - &y;
            let bound = fy + frob_inner(&g, &d) + linalg::frobenius(&d).powi(2) / (2.0 * step);
            if ft.is_finite() && ft <= bound + 1e-15 * fy.abs() {
                accepted = Some((xt, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((xt, ft)) = accepted else {
            break;
        };
        if ft > fx {
            if beta == 0.0 {
                // a plain step no longer descends: converged to rounding
                break;
            }
            // momentum overshot: restart from the last iterate
            x_prev = x.clone();
            momentum = 1.0;
            continue;
        }
        let moved = linalg::max_abs(&(&xt - &x));
        let improvement = fx - ft;
        x_prev = std::mem::replace(&mut x, xt);
        fx = ft;
        momentum = next_momentum;
        step *= 1.2;
        if improvement <= 1e-13 * (1.0 + fx.abs()) && moved < 1e-9 {
            break;
        }
    }
    (x, fx, it)
}

fn frobenius_residual(chi: &ProcessMatrix, pairs: &[InputOutputPair]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            linalg::frobenius(&(apply_process_raw(chi, &p.input.projector()) - p.output.matrix()))
                .powi(2)
        })
        .sum()
}

/// Reconstructs χ from input/output pairs with the chosen objective, always
/// returning a Hermitian, PSD, trace-preserving matrix.
pub fn reconstruct_process_with(
    pairs: &[InputOutputPair],
    objective: ProcessObjective,
    projectors: &ProjectorSet,
) -> Result<ProcessFit> {
    if pairs
        .iter()
        .any(|p| p.input.dim() != DIM || p.output.dim() != DIM)
    {
        return Err(Error::UnsupportedDimension(
            pairs
                .iter()
                .map(|p| p.input.dim())
                .find(|&d| d != DIM)
                .unwrap_or(0),
        ));
    }
    let inputs: Vec<QuditPureState> = pairs.iter().map(|p| p.input.clone()).collect();
    let freqs: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| {
            projectors
                .kets()
                .iter()
                .map(|k| linalg::expectation(p.output.matrix(), k.amplitudes()).max(0.0))
                .collect()
        })
        .collect();
    let model = ProbabilityModel::new(&inputs, freqs, projectors);
    let linear = model.linear_solution()?;

    let exact = ProcessMatrix::unchecked(linear.clone());
    let fits_data = model
        .probs(&linear)
        .iter()
        .zip(&model.freqs)
        .all(|(p, f)| (p - f).abs() < 1e-10);
    if fits_data && linalg::min_eigenvalue(&linear) >= -1e-10 && exact.tp_residual() < 1e-9 {
        // a physical χ reproducing every output is optimal for both objectives
        let residual = frobenius_residual(&exact, pairs);
        let value = match objective {
            ProcessObjective::Likelihood => model.nll(&linear),
            ProcessObjective::LeastSquares => residual,
        };
        return Ok(ProcessFit {
            chi: exact,
            residual,
            objective_value: value,
            iterations: 0,
        });
    }

    let start =
        project_cptp(&linear) * c(0.98, 0.0) + ProcessMatrix::depolarizing().entries * c(0.02, 0.0);
    let (x, value, iterations) = match objective {
        ProcessObjective::Likelihood => {
            projected_gradient(start, |x| model.nll(x), |x| model.grad(x), 20_000)
        }
        ProcessObjective::LeastSquares => {
            let lsq = LeastSquaresModel::new(pairs);
            projected_gradient(start, |x| lsq.value(x), |x| lsq.grad(x), 20_000)
        }
    };
    let chi = ProcessMatrix::unchecked(linalg::hermitian_part(&x));
    if !chi.is_physical() {
        return Err(Error::Solver {
            message: "χ fit left the physical set".into(),
            residual: chi.tp_residual().max(-linalg::min_eigenvalue(chi.matrix())),
        });
    }
    let residual = frobenius_residual(&chi, pairs);
    Ok(ProcessFit {
        chi,
        residual,
        objective_value: value,
        iterations,
    })
}

/// Reconstructs χ from per-input projector frequencies (e.g. counts normalized by
/// exposure). `residual` is then Σ (p_ij − f_ij)² over the data.
pub fn reconstruct_process_from_frequencies(
    inputs: &[QuditPureState],
    freqs: Vec<Vec<f64>>,
    projectors: &ProjectorSet,
) -> Result<ProcessFit> {
    let model = ProbabilityModel::new(inputs, freqs, projectors);
    let linear = model.linear_solution()?;
    let start =
        project_cptp(&linear) * c(0.98, 0.0) + ProcessMatrix::depolarizing().entries * c(0.02, 0.0);
    let (x, value, iterations) =
        projected_gradient(start, |x| model.nll(x), |x| model.grad(x), 20_000);
    let chi = ProcessMatrix::unchecked(linalg::hermitian_part(&x));
    let residual = model
        .probs(chi.matrix())
        .iter()
        .zip(&model.freqs)
        .map(|(p, f)| (p - f).powi(2))
        .sum();
    Ok(ProcessFit {
        residual,
        chi,
        objective_value: value,
        iterations,
    })
}

struct LeastSquaresModel {
    /// per pair: rows vec(σl ρ σk) as columns of a 9×81 matrix
    designs: Vec<CMatrix>,
    targets: Vec<CVector>,
}

impl LeastSquaresModel {
    fn new(pairs: &[InputOutputPair]) -> Self {
        let sb = basis();
        let mut designs = Vec::new();
        let mut targets = Vec::new();
        for p in pairs {
            let rho = p.input.projector();
            let mut a = CMatrix::zeros(DIM * DIM, NB * NB);
            for l in 0..NB {
                let left = &sb.sigma[l] * &rho;
                for k in 0..NB {
                    let m = &left * &sb.sigma[k];
                    a.set_column(l * NB + k, &linalg::vec_of(&m));
                }
            }
            designs.push(a);
            targets.push(linalg::vec_of(p.output.matrix()));
        }
        LeastSquaresModel { designs, targets }
    }

    fn value(&self, chi: &CMatrix) -> f64 {
        let x = flatten(chi);
        self.designs
            .iter()
            .zip(&self.targets)
            .map(|(a, y)| (a * &x - y).norm_squared())
            .sum()
    }

    fn grad(&self, chi: &CMatrix) -> CMatrix {
        let x = flatten(chi);
        let mut g = CVector::zeros(NB * NB);
        for (a, y) in self.designs.iter().zip(&self.targets) {
            g += a.adjoint() * (a * &x - y);
        }
        linalg::hermitian_part(&(unflatten(&g) * c(2.0, 0.0)))
    }
}
