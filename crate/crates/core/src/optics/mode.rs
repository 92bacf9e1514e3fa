use serde::{Deserialize, Serialize};

/// Spatial arm of the setup. `Input`/`Channel` are photons 1 and 2 before the
/// first PBS, `A`–`D` are the measurement arms, `Bob` carries photon 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    Input,
    Channel,
    A,
    B,
    C,
    D,
    Bob,
    Trigger,
}

impl Arm {
    pub const ALL: [Arm; 8] = [
        Arm::Input,
        Arm::Channel,
        Arm::A,
        Arm::B,
        Arm::C,
        Arm::D,
        Arm::Bob,
        Arm::Trigger,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

/// One optical mode. `tag` labels distinguishable wave packets; 0 is the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpticalMode {
    pub arm: Arm,
    pub rail: i8,
    pub pol: Pol,
    pub tag: u8,
}

impl OpticalMode {
    pub fn new(arm: Arm, rail: i8, pol: Pol) -> Self {
        OpticalMode {
            arm,
            rail,
            pol,
            tag: 0,
        }
    }

    pub fn tagged(self, tag: u8) -> Self {
        OpticalMode { tag, ..self }
    }

    pub fn with_arm(self, arm: Arm) -> Self {
        OpticalMode { arm, ..self }
    }

    pub fn with_pol(self, pol: Pol) -> Self {
        OpticalMode { pol, ..self }
    }

    pub fn with_rail(self, rail: i8) -> Self {
        OpticalMode { rail, ..self }
    }
}

/// Path-polarization encoding of a qutrit level: 0 → H on rail 0, 1 → V on rail 1, 2 → H on rail 2.
pub fn logical_mode(arm: Arm, level: usize) -> OpticalMode {
    match level {
        0 => OpticalMode::new(arm, 0, Pol::H),
        1 => OpticalMode::new(arm, 1, Pol::V),
        2 => OpticalMode::new(arm, 2, Pol::H),
        _ => panic!("qutrit level {level} out of range"),
    }
}

/// Inverse of [`logical_mode`], ignoring the arm and tag.
pub fn logical_level(mode: &OpticalMode) -> Option<usize> {
    match (mode.rail, mode.pol) {
        (0, Pol::H) => Some(0),
        (1, Pol::V) => Some(1),
        (2, Pol::H) => Some(2),
        _ => None,
    }
}

/// Matches modes by arm and optionally rail and polarization (any tag).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSelector {
    pub arm: Arm,
    pub rail: Option<i8>,
    pub pol: Option<Pol>,
}

impl ModeSelector {
    pub fn arm(arm: Arm) -> Self {
        ModeSelector {
            arm,
            rail: None,
            pol: None,
        }
    }

    pub fn rail(arm: Arm, rail: i8) -> Self {
        ModeSelector {
            arm,
            rail: Some(rail),
            pol: None,
        }
    }

    pub fn pol(arm: Arm, pol: Pol) -> Self {
        ModeSelector {
            arm,
            rail: None,
            pol: Some(pol),
        }
    }

    pub fn matches(&self, m: &OpticalMode) -> bool {
        m.arm == self.arm
            && self.rail.is_none_or(|r| r == m.rail)
            && self.pol.is_none_or(|p| p == m.pol)
    }
}
