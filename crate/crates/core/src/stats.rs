//! Poisson Monte Carlo error propagation and the simulation studies built on it.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial index),
//! so results do not depend on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{phased_max_coherent, QuditPureState};
use crate::cert::{robustness_mu, PhaseGrid};
use crate::error::{Error, Result};
use crate::linalg;
use crate::teleport::experiment_inputs;
use crate::tomography::{
    apply_process, expected_counts, mub_fidelities, poisson_draw,
    reconstruct_process_from_frequencies, reconstruct_process_with, reconstruct_state_with,
    CountsTable, InputOutputPair, ProcessMatrix, ProcessObjective, ProjectorSet, StateMethod,
};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleEnsemble {
    pub n_trials: usize,
    pub seed: u64,
    /// Statistic of every successful trial, in trial order.
    pub samples: Vec<f64>,
    /// Trials whose pipeline failed and were left out.
    pub excluded: usize,
}

impl ResampleEnsemble {
    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    /// Sample standard deviation; the reported error.
    pub fn std(&self) -> f64 {
        sample_std(&self.samples)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Redraws every count as Poisson(observed) and evaluates `statistic` on each
/// redrawn collection.
pub fn poisson_resample<F>(
    counts: &[CountsTable],
    n_trials: usize,
    seed: u64,
    statistic: F,
) -> Result<ResampleEnsemble>
where
    F: Fn(&[CountsTable]) -> Result<f64> + Sync,
{
    let means: Vec<Vec<f64>> = counts.iter().map(CountsTable::as_f64).collect();
    resample_from_means(&means, counts, n_trials, seed, statistic)
}

/// Like [`poisson_resample`] with explicit Poisson means per count, aligned with
/// `template`; passing fitted expected counts gives a parametric bootstrap.
pub fn resample_from_means<F>(
    means: &[Vec<f64>],
    template: &[CountsTable],
    n_trials: usize,
    seed: u64,
    statistic: F,
) -> Result<ResampleEnsemble>
where
    F: Fn(&[CountsTable]) -> Result<f64> + Sync,
{
    if n_trials < 2 {
        return Err(Error::InvalidState(format!(
            "need at least 2 trials, got {n_trials}"
        )));
    }
    if means.len() != template.len()
        || means
            .iter()
            .zip(template)
            .any(|(m, t)| m.len() != t.counts.len())
    {
        return Err(Error::DimensionMismatch {
            expected: template.len(),
            found: means.len(),
        });
    }
    let results: Vec<Option<f64>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let drawn: Vec<CountsTable> = means
                .iter()
                .zip(template)
                .map(|(m, t)| CountsTable {
                    counts: m.iter().map(|&l| poisson_draw(&mut rng, l)).collect(),
                    exposure: t.exposure,
                })
                .collect();
            statistic(&drawn).ok().filter(|v| v.is_finite())
        })
        .collect();
    let samples: Vec<f64> = results.iter().flatten().copied().collect();
    Ok(ResampleEnsemble {
        n_trials,
        seed,
        excluded: n_trials - samples.len(),
        samples,
    })
}

/// Counts for each input state sent through χ and measured on `projectors`.
pub fn simulate_process_counts<R: rand::Rng + ?Sized>(
    chi: &ProcessMatrix,
    inputs: &[QuditPureState],
    projectors: &ProjectorSet,
    exposure: f64,
    rng: &mut R,
) -> Vec<CountsTable> {
    inputs
        .iter()
        .map(|phi| {
            let out = apply_process(chi, &phi.density());
            CountsTable {
                counts: expected_counts(&out, projectors, exposure)
                    .into_iter()
                    .map(|m| poisson_draw(rng, m))
                    .collect(),
                exposure,
            }
        })
        .collect()
}

/// Fits χ to counts directly: Poisson likelihood of n/exposure for each input and setting.
pub fn process_from_counts(
    inputs: &[QuditPureState],
    counts: &[CountsTable],
    projectors: &ProjectorSet,
) -> Result<ProcessMatrix> {
    let freqs = counts
        .iter()
        .map(|t| {
            if t.total() == 0 {
                return Err(Error::InsufficientData(
                    "an input state has no counts".into(),
                ));
            }
            Ok(t.as_f64().iter().map(|n| n / t.exposure).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(reconstruct_process_from_frequencies(inputs, freqs, projectors)?.chi)
}

/// Fits χ in two steps: a likelihood state estimate per input, then a
/// likelihood process fit to those states.
pub fn process_via_states(
    inputs: &[QuditPureState],
    counts: &[CountsTable],
    projectors: &ProjectorSet,
) -> Result<ProcessMatrix> {
    let pairs = inputs
        .iter()
        .zip(counts)
        .map(|(phi, t)| {
            InputOutputPair::new(
                phi.clone(),
                reconstruct_state_with(t, projectors, StateMethod::Mle)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reconstruct_process_with(&pairs, ProcessObjective::Likelihood, projectors)?.chi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyStatistic {
    AverageFidelity,
    MeanMu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub x_grid: Vec<usize>,
    /// Mean of the statistic over trials at each grid point.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged_value: f64,
    pub excluded: usize,
}

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let x: Vec<f64> = self.x_grid.iter().map(|&n| n as f64).collect();
        crate::io::series_csv(&x, &self.values, &self.errors)
    }
}

/// `n` states spread evenly over the closed 20×20 family of maximally coherent inputs.
pub fn evenly_sampled_states(n: usize) -> Vec<QuditPureState> {
    let grid = PhaseGrid {
        n1: 20,
        n2: 20,
        closed: true,
    };
    let (p1, p2) = (grid.phases1(), grid.phases2());
    let total = grid.len();
    (0..n)
        .map(|k| {
            let idx = k * total / n.max(1);
            phased_max_coherent(p1[idx / grid.n2], p2[idx % grid.n2])
        })
        .collect()
}

/// Statistical error of the statistic averaged over n sampled input states.
/// Each trial re-fits χ from Poisson tomography data of the nine experiment
/// inputs, and all grid points share that trial's χ.
pub fn convergence_study(
    chi: &ProcessMatrix,
    statistic: StudyStatistic,
    n_states_grid: &[usize],
    trials: usize,
    seed: u64,
    exposure: f64,
) -> Result<StudyResult> {
    if n_states_grid.is_empty()
        || n_states_grid.windows(2).any(|w| w[0] >= w[1])
        || n_states_grid[0] == 0
    {
        return Err(Error::InvalidState(
            "state grid must be non-empty, positive and ascending".into(),
        ));
    }
    if trials < 2 {
        return Err(Error::InvalidState("need at least 2 trials".into()));
    }
    let inputs: Vec<QuditPureState> = experiment_inputs().into_iter().take(9).collect();
    let projectors = ProjectorSet::canonical();
    let samples: Vec<Vec<QuditPureState>> = n_states_grid
        .iter()
        .map(|&n| evenly_sampled_states(n))
        .collect();
    let per_trial: Vec<Option<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let counts = simulate_process_counts(chi, &inputs, &projectors, exposure, &mut rng);
            let fit = process_via_states(&inputs, &counts, &projectors).ok()?;
            samples
                .iter()
                .map(|states| state_statistic(&fit, states, statistic))
                .collect::<Result<Vec<f64>>>()
                .ok()
        })
        .collect();
    let ok: Vec<&Vec<f64>> = per_trial.iter().flatten().collect();
    if ok.len() < 2 {
        return Err(Error::Solver {
            message: "fewer than two trials succeeded".into(),
            residual: f64::NAN,
        });
    }
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for k in 0..n_states_grid.len() {
        let col: Vec<f64> = ok.iter().map(|v| v[k]).collect();
        values.push(mean(&col));
        errors.push(sample_std(&col));
    }
    Ok(StudyResult {
        x_grid: n_states_grid.to_vec(),
        converged_value: *errors.last().expect("non-empty"),
        values,
        errors,
        excluded: trials - ok.len(),
    })
}

fn state_statistic(
    chi: &ProcessMatrix,
    states: &[QuditPureState],
    statistic: StudyStatistic,
) -> Result<f64> {
    let vals = states
        .iter()
        .map(|psi| {
            let out = apply_process(chi, &psi.density());
            match statistic {
                StudyStatistic::AverageFidelity => {
                    Ok(linalg::expectation(out.matrix(), psi.amplitudes()))
                }
                StudyStatistic::MeanMu => robustness_mu(&out).map(|(m, _)| m),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&vals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    /// The rate is the total over all settings of one input state.
    PerState,
    /// Every setting receives the full rate.
    PerSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignStudy {
    pub mean_mub: f64,
    pub err_mub: f64,
    pub mean_nonmub: f64,
    pub err_nonmub: f64,
    pub trials_mub: Vec<f64>,
    pub trials_nonmub: Vec<f64>,
}

/// The channel assumed by the design study: 0.55 of the identity plus white noise.
pub fn design_study_channel() -> ProcessMatrix {
    ProcessMatrix::noisy_identity(0.55)
}

/// Compares process tomography with the twelve MUB states as inputs and
/// projectors against the nine experiment settings, by the mean MUB fidelity
/// of the reconstructed χ.
pub fn mub_design_study(
    rate: u64,
    trials: usize,
    seed: u64,
    convention: RateConvention,
) -> Result<DesignStudy> {
    if rate == 0 {
        return Err(Error::InvalidState("rate must be positive".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidState("need at least 2 trials".into()));
    }
    let chi = design_study_channel();
    let run = |set: ProjectorSet, inputs: Vec<QuditPureState>, salt: u64| -> Result<Vec<f64>> {
        let exposure = match convention {
            RateConvention::PerState => rate as f64 / set.len() as f64,
            RateConvention::PerSetting => rate as f64,
        };
        let vals: Vec<Option<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(seed ^ salt, trial);
                let counts = simulate_process_counts(&chi, &inputs, &set, exposure, &mut rng);
                let fit = process_via_states(&inputs, &counts, &set).ok()?;
                Some(mub_fidelities(&fit).mean)
            })
            .collect();
        let ok: Vec<f64> = vals.into_iter().flatten().collect();
        if ok.len() < 2 {
            return Err(Error::Solver {
                message: "fewer than two design-study trials succeeded".into(),
                residual: f64::NAN,
            });
        }
        Ok(ok)
    };
    let mub = ProjectorSet::mub();
    let mub_inputs = mub.kets().to_vec();
    let trials_mub = run(mub, mub_inputs, 0x6d75_6273)?;
    let canonical = ProjectorSet::canonical();
    let canonical_inputs = canonical.kets().to_vec();
    let trials_nonmub = run(canonical, canonical_inputs, 0x6e6f_6e6d)?;
    Ok(DesignStudy {
        mean_mub: mean(&trials_mub),
        err_mub: sample_std(&trials_mub),
        mean_nonmub: mean(&trials_nonmub),
        err_nonmub: sample_std(&trials_nonmub),
        trials_mub,
        trials_nonmub,
    })
}
