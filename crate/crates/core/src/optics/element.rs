use serde::{Deserialize, Serialize};

use super::mode::{Arm, OpticalMode, Pol};
use crate::linalg::{c, cis, C64};

/// Linear-optical element. Every element is a permutation or a 2×2 unitary
/// on the modes it touches and the identity elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpticalElement {
    /// Polarizing beam splitter: H transmits (`in_x` → `out_x`, `in_y` → `out_y`),
    /// V reflects (`in_x` → `out_y`, `in_y` → `out_x`). Rail and tag are kept.
    Pbs {
        in_x: Arm,
        in_y: Arm,
        out_x: Arm,
        out_y: Arm,
    },
    /// Beam displacer: V moves by `shift` rails, H passes.
    Bd { arm: Arm, shift: i8 },
    /// Half-wave plate at `angle_deg` on one rail (or all rails if `None`).
    Hwp {
        arm: Arm,
        rail: Option<i8>,
        angle_deg: f64,
    },
    /// Phase `phase` on the selected modes.
    PhaseShift {
        arm: Arm,
        rail: Option<i8>,
        pol: Option<Pol>,
        phase: f64,
    },
}

impl OpticalElement {
    pub fn hwp(arm: Arm, rail: i8, angle_deg: f64) -> Self {
        OpticalElement::Hwp {
            arm,
            rail: Some(rail),
            angle_deg,
        }
    }

    /// Arms this element reads from or writes to.
    pub fn arms(&self) -> Vec<Arm> {
        match *self {
            OpticalElement::Pbs {
                in_x,
                in_y,
                out_x,
                out_y,
            } => vec![in_x, in_y, out_x, out_y],
            OpticalElement::Bd { arm, .. }
            | OpticalElement::Hwp { arm, .. }
            | OpticalElement::PhaseShift { arm, .. } => {
                vec![arm]
            }
        }
    }

    /// Image of one creation operator: a†_mode → Σ coeff · a†_out.
    /// `None` means the mode is untouched.
    pub fn transfer(&self, m: &OpticalMode) -> Option<Vec<(OpticalMode, C64)>> {
        let one = c(1.0, 0.0);
        match *self {
            OpticalElement::Pbs {
                in_x,
                in_y,
                out_x,
                out_y,
            } => {
                let out = match (m.arm == in_x, m.arm == in_y, m.pol) {
                    (true, _, Pol::H) => out_x,
                    (true, _, Pol::V) => out_y,
                    (_, true, Pol::H) => out_y,
                    (_, true, Pol::V) => out_x,
                    _ => return None,
                };
                Some(vec![(m.with_arm(out), one)])
            }
            OpticalElement::Bd { arm, shift } => {
                if m.arm != arm || m.pol != Pol::V {
                    return None;
                }
                Some(vec![(m.with_rail(m.rail + shift), one)])
            }
            OpticalElement::Hwp {
                arm,
                rail,
                angle_deg,
            } => {
                if m.arm != arm || rail.is_some_and(|r| r != m.rail) {
                    return None;
                }
                let t = 2.0 * angle_deg.to_radians();
                let (cs, sn) = (t.cos(), t.sin());
                let (h, v) = match m.pol {
                    Pol::H => (cs, sn),
                    Pol::V => (sn, -cs),
                };
                let mut out = Vec::with_capacity(2);
                if h.abs() > 1e-15 {
                    out.push((m.with_pol(Pol::H), c(h, 0.0)));
                }
                if v.abs() > 1e-15 {
                    out.push((m.with_pol(Pol::V), c(v, 0.0)));
                }
                Some(out)
            }
            OpticalElement::PhaseShift {
                arm,
                rail,
                pol,
                phase,
            } => {
                if m.arm != arm
                    || rail.is_some_and(|r| r != m.rail)
                    || pol.is_some_and(|p| p != m.pol)
                {
                    return None;
                }
                Some(vec![(*m, cis(phase))])
            }
        }
    }
}
