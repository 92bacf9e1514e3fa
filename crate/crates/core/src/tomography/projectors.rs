use serde::{Deserialize, Serialize};

use crate::algebra::{mub_family, QuditPureState};
use crate::error::{Error, Result};
use crate::linalg::{c, I, ONE, ZERO};

/// Named measurement projectors |ψ_i⟩⟨ψ_i|.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    kets: Vec<QuditPureState>,
    names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorKind {
    /// The nine-setting qutrit tomography set.
    Canonical,
    /// All twelve states of the four mutually unbiased bases.
    Mub,
}

pub const CANONICAL_NAMES: [&str; 9] = ["0", "1", "2", "0+1", "0+i1", "0+2", "0+i2", "1+2", "1+i2"];

impl ProjectorSet {
    pub fn new(kets: Vec<QuditPureState>, names: Vec<String>) -> Result<Self> {
        if kets.is_empty() || kets.len() != names.len() {
            return Err(Error::InvalidState(
                "projector names must match kets".into(),
            ));
        }
        let d = kets[0].dim();
        if let Some(k) = kets.iter().find(|k| k.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k.dim(),
            });
        }
        Ok(ProjectorSet { kets, names })
    }

    /// |0⟩, |1⟩, |2⟩ and (|j⟩+|k⟩)/√2, (|j⟩+i|k⟩)/√2 for j < k.
    pub fn canonical() -> Self {
        let r = c(0.5f64.sqrt(), 0.0);
        let z = ZERO;
        let amps = [
            [ONE, z, z],
            [z, ONE, z],
            [z, z, ONE],
            [r, r, z],
            [r, I * r, z],
            [r, z, r],
            [r, z, I * r],
            [z, r, r],
            [z, r, I * r],
        ];
        ProjectorSet {
            kets: amps
                .iter()
                .map(|a| QuditPureState::new(a.to_vec()).expect("normalized"))
                .collect(),
            names: CANONICAL_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn mub() -> Self {
        ProjectorSet {
            kets: mub_family(3).expect("qutrit"),
            names: (1..=12).map(|k| format!("mub{k}")).collect(),
        }
    }

    pub fn of_kind(kind: ProjectorKind) -> Self {
        match kind {
            ProjectorKind::Canonical => Self::canonical(),
            ProjectorKind::Mub => Self::mub(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.names
            .iter()
            .map(String::as_str)
            .eq(CANONICAL_NAMES.iter().copied())
    }

    pub fn kets(&self) -> &[QuditPureState] {
        &self.kets
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.kets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kets[0].dim()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_set_layout() {
        let p = ProjectorSet::canonical();
        assert_eq!(p.len(), 9);
        assert!(p.is_canonical());
        assert_eq!(p.index_of("0+i2"), Some(6));
        let k = &p.kets()[4];
        assert!((k.amplitudes()[1] - I * 0.5f64.sqrt()).norm() < 1e-15);
        assert!(!ProjectorSet::mub().is_canonical());
    }
}
