mod common;

use common::{generic_amplitudes, printed_stage, stage_deviation};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qutrit_tele::algebra::{fidelity, QuditPureState};
use qutrit_tele::optics::circuit::{bob_state, initial_state};
use qutrit_tele::optics::visibility::with_white_noise;
use qutrit_tele::optics::{
    build_hdbsm_circuit, run_teleportation, visibility_damping_factor, Arm, FockState,
    OpticalElement, OpticalMode, Pol, PostSelectionPattern, StageName, VisibilityModel,
};
use qutrit_tele::teleport::{experiment_inputs, ChannelSpec};
use qutrit_tele::Error;

fn generic_input() -> QuditPureState {
    let (a, b, g) = generic_amplitudes();
    QuditPureState::new(vec![a, b, g]).unwrap()
}

#[test]
fn every_stage_matches_printed_kets() {
    let (a, b, g) = generic_amplitudes();
    let input = generic_input();
    for stage in StageName::ALL {
        let run = run_teleportation(
            &input,
            &ChannelSpec::experimental(),
            &VisibilityModel::perfect(),
            Some(stage),
        )
        .unwrap();
        let state = run.stage_state.unwrap();
        let dev = stage_deviation(&state, &printed_stage(stage, a, b, g));
        assert!(dev < 1e-9, "{stage}: deviation {dev}");
    }
}

#[test]
fn pbs1_keeps_five_classical_terms() {
    let input = generic_input();
    let run = run_teleportation(
        &input,
        &ChannelSpec::maximal(3),
        &VisibilityModel::perfect(),
        Some(StageName::Pbs1),
    )
    .unwrap();
    let st = run.stage_state.unwrap();
    let mut pairs: Vec<(usize, usize)> = st
        .terms()
        .map(|(p, _)| {
            let bob = p.iter().find(|m| m.arm == Arm::Bob).unwrap();
            let a = p.iter().find(|m| m.arm == Arm::A).unwrap();
            let k = qutrit_tele::optics::mode::logical_level(bob).unwrap();
            let i = qutrit_tele::optics::mode::logical_level(a).unwrap();
            // photon in arm A came from the input when H, from the channel when V
            if a.pol == Pol::H {
                (i, k)
            } else {
                (k, i)
            }
        })
        .collect();
    pairs.sort();
    pairs.dedup();
    assert_eq!(pairs, vec![(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)]);
}

#[test]
fn success_probability_is_one_eighteenth() {
    for input in experiment_inputs().iter().chain([generic_input()].iter()) {
        let run = run_teleportation(
            input,
            &ChannelSpec::experimental(),
            &VisibilityModel::perfect(),
            None,
        )
        .unwrap();
        assert!((run.success_probability - 1.0 / 18.0).abs() < 1e-12);
        assert!((fidelity(&run.rho, input).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn noise_terms_cancel_after_aux_selection() {
    // |0⟩ through a |22⟩ channel produces only the classical term |02⟩; |2⟩ through |00⟩ gives |20⟩
    let cases = [
        (
            QuditPureState::basis(3, 0),
            ChannelSpec::new(vec![0.0, 0.0, 1.0]).unwrap(),
        ),
        (
            QuditPureState::basis(3, 2),
            ChannelSpec::new(vec![1.0, 0.0, 0.0]).unwrap(),
        ),
    ];
    for (input, channel) in cases {
        let circuit = build_hdbsm_circuit(3).unwrap();
        let init = initial_state(&input, &channel, 0).unwrap();
        let before = circuit.run(&init, 0, Some(StageName::Bd2Bd4)).unwrap();
        assert!(before.stage_state.unwrap().norm_sqr() > 1e-3);
        let out = circuit.run(&init, 0, Some(StageName::AuxPbs)).unwrap();
        let after = out.stage_state.unwrap();
        let worst = after.terms().map(|(_, a)| a.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }
}

#[test]
fn unsupported_dimension_and_stage() {
    assert!(matches!(build_hdbsm_circuit(4), Err(Error::OutOfScope(_))));
    assert!(matches!(
        "BD9".parse::<StageName>(),
        Err(Error::UnknownStage(_))
    ));
    assert_eq!("hwp1_4".parse::<StageName>().unwrap(), StageName::Hwp14);
}

#[test]
fn element_examples() {
    let arms = Arm::ALL;
    let h = OpticalMode::new(Arm::Input, 0, Pol::H);
    let one = FockState::new(&arms, vec![(vec![h], C64::new(1.0, 0.0))]).unwrap();
    let pbs = OpticalElement::Pbs {
        in_x: Arm::Input,
        in_y: Arm::Channel,
        out_x: Arm::A,
        out_y: Arm::B,
    };
    let t = one.apply(&pbs).unwrap();
    assert_eq!(t.amplitude(&[h.with_arm(Arm::A)]), C64::new(1.0, 0.0));
    let d = one
        .apply(&OpticalElement::hwp(Arm::Input, 0, 22.5))
        .unwrap();
    let r = 0.5f64.sqrt();
    assert!(
        (d.amplitude(&[h]).re - r).abs() < 1e-15
            && (d.amplitude(&[h.with_pol(Pol::V)]).re - r).abs() < 1e-15
    );
    let s = one
        .apply(&OpticalElement::hwp(Arm::Input, 0, 45.0))
        .unwrap();
    assert!((s.amplitude(&[h.with_pol(Pol::V)]).re - 1.0).abs() < 1e-15);
    assert_eq!(s.len(), 1);
}

/// Single-photon transfer matrix of an element restricted to a finite mode set.
fn transfer_matrix(e: &OpticalElement, modes: &[OpticalMode]) -> nalgebra::DMatrix<C64> {
    let mut u = nalgebra::DMatrix::zeros(modes.len(), modes.len());
    for (j, m) in modes.iter().enumerate() {
        let img = e
            .transfer(m)
            .unwrap_or_else(|| vec![(*m, C64::new(1.0, 0.0))]);
        for (out, amp) in img {
            let i = modes
                .iter()
                .position(|x| *x == out)
                .expect("closed mode set");
            u[(i, j)] += amp;
        }
    }
    u
}

#[test]
fn elements_are_unitary_on_acted_modes() {
    let mut modes = Vec::new();
    for arm in [Arm::A, Arm::B] {
        for rail in 0..3 {
            for pol in [Pol::H, Pol::V] {
                modes.push(OpticalMode::new(arm, rail, pol));
            }
        }
    }
    let elements = [
        OpticalElement::Pbs {
            in_x: Arm::A,
            in_y: Arm::B,
            out_x: Arm::A,
            out_y: Arm::B,
        },
        OpticalElement::hwp(Arm::A, 1, 22.5),
        OpticalElement::hwp(Arm::B, 0, 13.0),
        OpticalElement::PhaseShift {
            arm: Arm::A,
            rail: Some(2),
            pol: None,
            phase: 0.7,
        },
    ];
    for e in &elements {
        let u = transfer_matrix(e, &modes);
        let dev = (u.adjoint() * &u - nalgebra::DMatrix::identity(modes.len(), modes.len()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12, "{e:?}");
    }
}

#[test]
fn norm_is_conserved_before_post_selection() {
    let input = generic_input();
    let init = initial_state(&input, &ChannelSpec::experimental(), 0).unwrap();
    let circuit = build_hdbsm_circuit(3).unwrap();
    let mut st = init.clone();
    for stage in &circuit.stages {
        for op in &stage.ops {
            if let qutrit_tele::optics::circuit::StageOp::Element(e) = op {
                let next = st.apply(e).unwrap();
                assert!((next.norm_sqr() - st.norm_sqr()).abs() < 1e-12);
                st = next;
            }
        }
    }
    // bunching-free path: all photons kept, including the trigger
    assert_eq!(st.photons(), 4);
}

#[test]
fn post_select_renormalizes() {
    let input = generic_input();
    let init = initial_state(&input, &ChannelSpec::experimental(), 0).unwrap();
    let pbs = OpticalElement::Pbs {
        in_x: Arm::Input,
        in_y: Arm::Channel,
        out_x: Arm::A,
        out_y: Arm::B,
    };
    let after = init.apply(&pbs).unwrap();
    let (st, p) = after.post_select(&PostSelectionPattern::one_per_arm(&[Arm::A, Arm::B]));
    assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
    let (a, b, g) = generic_amplitudes();
    let expect = (a.norm_sqr() * 5.0 + b.norm_sqr() * 4.0 + g.norm_sqr() * 5.0) / 9.0;
    assert!((p - expect).abs() < 1e-12);
}

#[test]
fn basis_inputs_ignore_visibility() {
    for v in [1.0, 0.9, 0.5, 0.0] {
        let vis = VisibilityModel::new(v, v).unwrap();
        for k in 0..3 {
            let input = QuditPureState::basis(3, k);
            let run = run_teleportation(&input, &ChannelSpec::experimental(), &vis, None).unwrap();
            assert!((fidelity(&run.rho, &input).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}

/// Brute-force check of the closed-form damping factors against the tagged
/// Fock simulation.
#[test]
fn damping_factor_matches_tagged_simulation() {
    let input = QuditPureState::new(vec![C64::new(1.0 / 3f64.sqrt(), 0.0); 3]).unwrap();
    for (vi, va) in [(1.0, 1.0), (0.927, 1.0), (0.9, 0.8), (0.0, 0.5), (0.6, 0.0)] {
        let vis = VisibilityModel::new(vi, va).unwrap();
        let run = run_teleportation(&input, &ChannelSpec::experimental(), &vis, None).unwrap();
        let m = run.rho.matrix();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let got = m[(i, j)].re / (1.0 / 3.0);
            assert!(
                (got - visibility_damping_factor(&vis, (i, j))).abs() < 1e-12,
                "{vi},{va},{i}{j}: {got}"
            );
        }
        for k in 0..3 {
            assert!((m[(k, k)].re - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((run.success_probability - 1.0 / 18.0).abs() < 1e-12);
    }
    let shared = VisibilityModel::shared(0.927).unwrap();
    for pair in [(0, 1), (0, 2), (1, 2)] {
        assert!((visibility_damping_factor(&shared, pair) - 0.927).abs() < 1e-15);
    }
    assert_eq!(
        visibility_damping_factor(&VisibilityModel::perfect(), (0, 2)),
        1.0
    );
    assert_eq!(
        visibility_damping_factor(&VisibilityModel::new(0.0, 0.0).unwrap(), (0, 1)),
        0.0
    );
}

#[test]
fn bob_state_needs_bob_photon() {
    let h = OpticalMode::new(Arm::A, 0, Pol::H);
    let st = FockState::new(&Arm::ALL, vec![(vec![h], C64::new(1.0, 0.0))]).unwrap();
    assert!(bob_state(&[st]).is_err());
}

#[test]
fn white_noise_mixture() {
    let rho = QuditPureState::basis(3, 0).density();
    let noisy = with_white_noise(&rho, 0.2);
    assert!((noisy.matrix()[(0, 0)].re - (0.8 + 0.2 / 3.0)).abs() < 1e-15);
    assert!(noisy.is_physical());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fidelity_monotone_in_visibility(re in prop::array::uniform3(-1.0f64..1.0), im in prop::array::uniform3(-1.0f64..1.0), v_hi in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let amps: Vec<C64> = (0..3).map(|k| C64::new(re[k], im[k])).collect();
        prop_assume!(amps.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
        let input = QuditPureState::normalized(amps).unwrap();
        let v_lo = v_hi * frac;
        let f = |v: f64| {
            let run = run_teleportation(&input, &ChannelSpec::experimental(), &VisibilityModel::new(v, v).unwrap(), None).unwrap();
            fidelity(&run.rho, &input).unwrap()
        };
        prop_assert!(f(v_lo) <= f(v_hi) + 1e-12);
    }
}
