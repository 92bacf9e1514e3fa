use qutrit_tele::algebra::{QuditDensityMatrix, QuditPureState};
use qutrit_tele::fixtures;
use qutrit_tele::io::AdjustmentLog;
use qutrit_tele::linalg::{self, c};
use qutrit_tele::stats::*;
use qutrit_tele::teleport::experiment_inputs;
use qutrit_tele::tomography::*;

fn test_state() -> (QuditPureState, QuditDensityMatrix) {
    let psi = QuditPureState::normalized(vec![c(1.0, 0.0), c(0.5, 0.5), c(-0.3, 0.8)]).unwrap();
    let rho = psi
        .density()
        .mix(&QuditDensityMatrix::maximally_mixed(3), 0.8);
    (psi, rho)
}

fn linear_fidelity(
    psi: &QuditPureState,
) -> impl Fn(&[CountsTable]) -> qutrit_tele::Result<f64> + Sync + '_ {
    move |t: &[CountsTable]| {
        let est = reconstruct_state(&t[0], StateMethod::Linear)?;
        Ok(linalg::expectation(est.matrix(), psi.amplitudes()))
    }
}

#[test]
fn resampling_is_seed_deterministic() {
    let (psi, rho) = test_state();
    let t = vec![simulate_counts(&rho, &ProjectorSet::canonical(), 200, 1).unwrap()];
    let a = poisson_resample(&t, 50, 42, linear_fidelity(&psi)).unwrap();
    let b = poisson_resample(&t, 50, 42, linear_fidelity(&psi)).unwrap();
    assert_eq!(a, b);
    let other = poisson_resample(&t, 50, 43, linear_fidelity(&psi)).unwrap();
    assert_ne!(a.samples, other.samples);
}

#[test]
fn resample_mean_tracks_point_estimate() {
    let (psi, rho) = test_state();
    let t = vec![simulate_counts(&rho, &ProjectorSet::canonical(), 500, 2).unwrap()];
    let point = linear_fidelity(&psi)(&t).unwrap();
    let e = poisson_resample(&t, 400, 9, linear_fidelity(&psi)).unwrap();
    assert_eq!(e.excluded, 0);
    assert!((e.mean() - point).abs() < 3.0 * e.std() / (e.samples.len() as f64).sqrt());
}

#[test]
fn doubling_exposure_scales_error_by_root_two() {
    let (psi, rho) = test_state();
    let set = ProjectorSet::canonical();
    let std_at = |exposure: f64| {
        let means = vec![expected_counts(&rho, &set, exposure)];
        let template = vec![CountsTable::new(vec![0; 9], exposure).unwrap()];
        resample_from_means(&means, &template, 600, 17, linear_fidelity(&psi))
            .unwrap()
            .std()
    };
    let ratio = std_at(200.0) / std_at(400.0);
    let root2 = 2f64.sqrt();
    assert!(ratio > 0.8 * root2 && ratio < 1.2 * root2, "{ratio}");
}

#[test]
fn process_fidelity_error_on_synthetic_data() {
    let chi = fixtures::printed_chi(&mut AdjustmentLog::default()).unwrap();
    let set = ProjectorSet::canonical();
    let inputs: Vec<_> = experiment_inputs().into_iter().take(9).collect();
    let counts = simulate_process_counts(&chi, &inputs, &set, 150.0, &mut trial_rng(3, 0));
    let e = poisson_resample(&counts, 100, 5, |t| {
        Ok(process_fidelity(&process_via_states(&inputs, t, &set)?))
    })
    .unwrap();
    // printed error bar 0.037, accepted within ±50%
    assert!(
        e.std() > 0.5 * 0.037 && e.std() < 1.5 * 0.037,
        "{}",
        e.std()
    );
}

#[test]
fn convergence_curves_plateau() {
    let chi = fixtures::printed_chi(&mut AdjustmentLog::default()).unwrap();
    let grid = [1, 5, 20, 100, 200, 400];
    for stat in [StudyStatistic::AverageFidelity, StudyStatistic::MeanMu] {
        let s = convergence_study(&chi, stat, &grid, 24, 2, 150.0).unwrap();
        assert!(s.errors.iter().all(|&e| e > 0.0));
        let n = s.errors.len();
        let rel = (s.errors[n - 1] - s.errors[n - 2]).abs() / s.errors[n - 2];
        assert!(rel < 0.1, "{stat:?}: {:?}", s.errors);
        assert!(s.errors[n - 1] < s.errors[0]);
        assert_eq!(s.to_csv().lines().count(), grid.len() + 1);
    }
}

#[test]
fn convergence_study_shares_trials_across_grid() {
    let chi = ProcessMatrix::noisy_identity(0.6);
    let single =
        convergence_study(&chi, StudyStatistic::AverageFidelity, &[1], 6, 4, 150.0).unwrap();
    let wider =
        convergence_study(&chi, StudyStatistic::AverageFidelity, &[1, 10], 6, 4, 150.0).unwrap();
    assert_eq!(single.errors[0], wider.errors[0]);
    assert!(
        convergence_study(&chi, StudyStatistic::AverageFidelity, &[5, 2], 6, 4, 150.0).is_err()
    );
}

#[test]
fn design_study_high_rate_limit() {
    let d = mub_design_study(10_000_000, 3, 1, RateConvention::PerSetting).unwrap();
    assert!((d.mean_mub - 0.7).abs() < 2e-3);
    assert!((d.mean_nonmub - 0.7).abs() < 2e-3);
}

#[test]
fn design_study_is_deterministic() {
    let a = mub_design_study(150, 3, 8, RateConvention::PerState).unwrap();
    let b = mub_design_study(150, 3, 8, RateConvention::PerState).unwrap();
    assert_eq!(a, b);
    assert!(mub_design_study(0, 3, 8, RateConvention::PerState).is_err());
}
