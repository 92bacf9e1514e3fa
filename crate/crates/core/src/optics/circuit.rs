use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::element::OpticalElement;
use super::fock::{FockState, Pattern, PostSelectionPattern};
use super::mode::{logical_level, logical_mode, Arm, ModeSelector, OpticalMode, Pol};
use super::visibility::VisibilityModel;
use crate::algebra::{QuditDensityMatrix, QuditPureState};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::teleport::ChannelSpec;

const INPUT_TAG: u8 = 1;
const AUX_TAG: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageName {
    #[serde(rename = "INPUT")]
    Input,
    #[serde(rename = "PBS1")]
    Pbs1,
    #[serde(rename = "BD1_BD3")]
    Bd1Bd3,
    #[serde(rename = "HWPS")]
    Hwps,
    #[serde(rename = "BD2_BD4")]
    Bd2Bd4,
    #[serde(rename = "AUX_PBS")]
    AuxPbs,
    #[serde(rename = "HWP1_4")]
    Hwp14,
    #[serde(rename = "PROJ")]
    Proj,
}

impl StageName {
    pub const ALL: [StageName; 8] = [
        StageName::Input,
        StageName::Pbs1,
        StageName::Bd1Bd3,
        StageName::Hwps,
        StageName::Bd2Bd4,
        StageName::AuxPbs,
        StageName::Hwp14,
        StageName::Proj,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StageName::Input => "INPUT",
            StageName::Pbs1 => "PBS1",
            StageName::Bd1Bd3 => "BD1_BD3",
            StageName::Hwps => "HWPS",
            StageName::Bd2Bd4 => "BD2_BD4",
            StageName::AuxPbs => "AUX_PBS",
            StageName::Hwp14 => "HWP1_4",
            StageName::Proj => "PROJ",
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StageName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownStage(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StageOp {
    Element(OpticalElement),
    /// Adds the auxiliary polarization-entangled pair.
    InjectAux(FockState),
    Select(PostSelectionPattern),
    /// Resolves H/V in each arm; patterns with an odd number of V get `odd_correction`.
    ParityMeasurement {
        arms: Vec<Arm>,
        odd_correction: OpticalElement,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub name: StageName,
    pub ops: Vec<StageOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdbsmCircuit {
    pub stages: Vec<Stage>,
}

fn aux_pair() -> FockState {
    let r = c(0.5f64.sqrt(), 0.0);
    let hc = OpticalMode::new(Arm::C, 0, Pol::H);
    let hd = OpticalMode::new(Arm::D, 0, Pol::H);
    FockState::new(
        &Arm::ALL,
        vec![
            (vec![hc, hd], r),
            (vec![hc.with_pol(Pol::V), hd.with_pol(Pol::V)], r),
        ],
    )
    .expect("aux pair")
}

/// The qutrit Bell-measurement circuit as named stages.
pub fn build_hdbsm_circuit(dim: usize) -> Result<HdbsmCircuit> {
    if dim != 3 {
        return Err(Error::OutOfScope(format!(
            "optical Bell measurement is only constructed for d = 3 (got {dim})"
        )));
    }
    use OpticalElement as E;
    use StageOp::*;
    let ab = [Arm::A, Arm::B];

    let pbs1 = vec![
        Element(E::Pbs {
            in_x: Arm::Input,
            in_y: Arm::Channel,
            out_x: Arm::A,
            out_y: Arm::B,
        }),
        Select(PostSelectionPattern::one_per_arm(&ab)),
    ];

    let mut bd13 = Vec::new();
    for arm in ab {
        bd13.push(Element(E::hwp(arm, 2, 45.0)));
        bd13.push(Element(E::Bd { arm, shift: -1 }));
        bd13.push(Element(E::hwp(arm, 0, 45.0)));
        bd13.push(Element(E::hwp(arm, 1, 45.0)));
    }

    let hwps = ab
        .iter()
        .map(|&arm| Element(E::hwp(arm, 0, 22.5)))
        .collect();

    let mut bd24 = Vec::new();
    for arm in ab {
        bd24.push(Element(E::hwp(arm, 1, 45.0)));
        bd24.push(Element(E::Bd { arm, shift: -1 }));
    }
    bd24.push(Select(PostSelectionPattern::new(vec![
        (ModeSelector::rail(Arm::A, 0), 1),
        (ModeSelector::rail(Arm::B, 0), 1),
    ])?));

    let aux = vec![
        InjectAux(aux_pair()),
        Element(E::Pbs {
            in_x: Arm::A,
            in_y: Arm::C,
            out_x: Arm::A,
            out_y: Arm::C,
        }),
        Element(E::Pbs {
            in_x: Arm::B,
            in_y: Arm::D,
            out_x: Arm::B,
            out_y: Arm::D,
        }),
        Select(PostSelectionPattern::one_per_arm(&[
            Arm::A,
            Arm::B,
            Arm::C,
            Arm::D,
        ])),
    ];

    let hwp14 = [Arm::A, Arm::B, Arm::C, Arm::D]
        .iter()
        .map(|&arm| {
            Element(E::Hwp {
                arm,
                rail: None,
                angle_deg: 22.5,
            })
        })
        .collect();

    let proj = vec![ParityMeasurement {
        arms: vec![Arm::A, Arm::B, Arm::C, Arm::D],
        odd_correction: E::PhaseShift {
            arm: Arm::Bob,
            rail: Some(2),
            pol: None,
            phase: PI,
        },
    }];

    Ok(HdbsmCircuit {
        stages: vec![
            Stage {
                name: StageName::Pbs1,
                ops: pbs1,
            },
            Stage {
                name: StageName::Bd1Bd3,
                ops: bd13,
            },
            Stage {
                name: StageName::Hwps,
                ops: hwps,
            },
            Stage {
                name: StageName::Bd2Bd4,
                ops: bd24,
            },
            Stage {
                name: StageName::AuxPbs,
                ops: aux,
            },
            Stage {
                name: StageName::Hwp14,
                ops: hwp14,
            },
            Stage {
                name: StageName::Proj,
                ops: proj,
            },
        ],
    })
}

fn retag(state: &FockState, tag: u8) -> FockState {
    let terms = state
        .terms()
        .map(|(p, a)| (p.iter().map(|m| m.tagged(tag)).collect::<Pattern>(), *a))
        .collect();
    FockState::new(&Arm::ALL, terms).expect("retag keeps arms")
}

/// Photon 1 in the input arm, the channel pair shared between the channel arm
/// and Bob, and the H-polarized trigger photon.
pub fn initial_state(
    input: &QuditPureState,
    channel: &ChannelSpec,
    input_tag: u8,
) -> Result<FockState> {
    if input.dim() != 3 || channel.dim() != 3 {
        return Err(Error::OutOfScope(
            "the optical circuit encodes qutrits only".into(),
        ));
    }
    let mut terms = Vec::new();
    let trig = OpticalMode::new(Arm::Trigger, 0, Pol::H);
    for (i, &a) in input.amplitudes().iter().enumerate() {
        for (k, &ck) in channel.schmidt_coefficients.iter().enumerate() {
            let amp = a * ck;
            if amp.norm() == 0.0 {
                continue;
            }
            terms.push((
                vec![
                    logical_mode(Arm::Input, i).tagged(input_tag),
                    logical_mode(Arm::Channel, k),
                    logical_mode(Arm::Bob, k),
                    trig,
                ],
                amp,
            ));
        }
    }
    FockState::new(&Arm::ALL, terms)
}

fn parity_patterns(arms: &[Arm]) -> Vec<Vec<Pol>> {
    (0..1usize << arms.len())
        .map(|bits| {
            (0..arms.len())
                .map(|k| {
                    if bits >> (arms.len() - 1 - k) & 1 == 1 {
                        Pol::V
                    } else {
                        Pol::H
                    }
                })
                .collect()
        })
        .collect()
}

/// Result of pushing one Fock configuration through the circuit.
#[derive(Debug, Clone)]
pub struct CircuitOutput {
    /// Heralded branches after the final projection, one per detection pattern.
    pub branches: Vec<FockState>,
    /// Unnormalized state right after the requested stage.
    pub stage_state: Option<FockState>,
}

impl HdbsmCircuit {
    pub fn stage(&self, name: StageName) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Runs `initial` through all stages, keeping amplitudes unnormalized so
    /// their squared norm is the heralding probability.
    pub fn run(
        &self,
        initial: &FockState,
        aux_tag: u8,
        capture: Option<StageName>,
    ) -> Result<CircuitOutput> {
        let mut state = initial.clone();
        let mut stage_state = (capture == Some(StageName::Input)).then(|| state.clone());
        let mut branches = Vec::new();
        for stage in &self.stages {
            for op in &stage.ops {
                match op {
                    StageOp::Element(e) => state = state.apply(e)?,
                    StageOp::InjectAux(pair) => state = state.product(&retag(pair, aux_tag)),
                    StageOp::Select(p) => state = state.project(p),
                    StageOp::ParityMeasurement {
                        arms,
                        odd_correction,
                    } => {
                        let mut combined: Vec<(Pattern, C64)> = Vec::new();
                        for pols in parity_patterns(arms) {
                            let sel = arms
                                .iter()
                                .zip(&pols)
                                .map(|(&a, &p)| (ModeSelector::pol(a, p), 1))
                                .collect();
                            let mut b = state.project(&PostSelectionPattern::new(sel)?);
                            if pols.iter().filter(|&&p| p == Pol::V).count() % 2 == 1 {
                                b = b.apply(odd_correction)?;
                            }
                            combined.extend(b.terms().map(|(p, a)| (p.clone(), *a)));
                            branches.push(b);
                        }
                        state = FockState::new(&Arm::ALL, combined)?;
                    }
                }
            }
            if capture == Some(stage.name) {
                stage_state = Some(state.clone());
            }
        }
        Ok(CircuitOutput {
            branches,
            stage_state,
        })
    }
}

/// Unnormalized reduced state of Bob's photon, summed over heralded branches.
/// Everything other than Bob's photon (including distinguishability tags) is
/// traced out.
pub fn bob_state(branches: &[FockState]) -> Result<CMatrix> {
    let mut rho = CMatrix::zeros(3, 3);
    for b in branches {
        let mut by_env: BTreeMap<Pattern, [C64; 3]> = BTreeMap::new();
        for (p, a) in b.terms() {
            let mut env = Vec::with_capacity(p.len());
            let mut level = None;
            for m in p {
                if m.arm == Arm::Bob {
                    level = logical_level(m);
                    if level.is_none() {
                        return Err(Error::InvalidState(format!(
                            "Bob's photon left the qutrit encoding: {m:?}"
                        )));
                    }
                } else {
                    env.push(*m);
                }
            }
            let Some(k) = level else {
                return Err(Error::InvalidState("no photon in Bob's arm".into()));
            };
            by_env.entry(env).or_insert([c(0.0, 0.0); 3])[k] += a;
        }
        for v in by_env.values() {
            for i in 0..3 {
                for j in 0..3 {
                    rho[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
    }
    Ok(rho)
}

#[derive(Debug, Clone)]
pub struct TeleportationRun {
    pub rho: QuditDensityMatrix,
    pub success_probability: f64,
    /// State after the requested stage for fully indistinguishable photons.
    pub stage_state: Option<FockState>,
}

/// Simulates the full six-photon experiment for one input state.
pub fn run_teleportation(
    input: &QuditPureState,
    channel: &ChannelSpec,
    visibility: &VisibilityModel,
    stage: Option<StageName>,
) -> Result<TeleportationRun> {
    let circuit = build_hdbsm_circuit(input.dim())?;
    let mut rho = CMatrix::zeros(3, 3);
    let mut stage_state = None;
    for (ti, ta, w) in visibility.configurations() {
        let init = initial_state(input, channel, if ti { INPUT_TAG } else { 0 })?;
        let capture = if !ti && !ta { stage } else { None };
        let out = circuit.run(&init, if ta { AUX_TAG } else { 0 }, capture)?;
        if capture.is_some() {
            stage_state = out.stage_state;
        }
        rho += bob_state(&out.branches)? * c(w, 0.0);
    }
    if stage.is_some() && stage_state.is_none() {
        // perfect-overlap configuration has zero weight; run it just for inspection
        let init = initial_state(input, channel, 0)?;
        stage_state = circuit.run(&init, 0, stage)?.stage_state;
    }
    let p = crate::linalg::trace(&rho).re;
    if p <= 0.0 {
        return Err(Error::DegenerateOutcome { n: 0, m: 0 });
    }
    let rho = QuditDensityMatrix::unchecked(crate::linalg::hermitian_part(&(rho / c(p, 0.0))));
    Ok(TeleportationRun {
        rho,
        success_probability: p,
        stage_state,
    })
}
