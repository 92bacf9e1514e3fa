//! Bundled printed matrices: the ten reconstructed teleported states and the
//! reconstructed process matrix, exactly as printed (4 decimals, unrepaired).

use crate::algebra::QuditDensityMatrix;
use crate::error::Result;
use crate::io::{self, AdjustmentLog};
use crate::linalg::CMatrix;
use crate::tomography::ProcessMatrix;

const STATES: [(&str, &str); 10] = [
    ("rho1", include_str!("../fixtures/rho1.json")),
    ("rho2", include_str!("../fixtures/rho2.json")),
    ("rho3", include_str!("../fixtures/rho3.json")),
    ("rho4", include_str!("../fixtures/rho4.json")),
    ("rho5", include_str!("../fixtures/rho5.json")),
    ("rho6", include_str!("../fixtures/rho6.json")),
    ("rho7", include_str!("../fixtures/rho7.json")),
    ("rho8", include_str!("../fixtures/rho8.json")),
    ("rho9", include_str!("../fixtures/rho9.json")),
    ("rho10", include_str!("../fixtures/rho10.json")),
];

const CHI: &str = include_str!("../fixtures/chi.json");

pub fn state_names() -> impl Iterator<Item = &'static str> {
    STATES.iter().map(|(n, _)| *n)
}

/// Raw printed ρ1..ρ10.
pub fn printed_states_raw() -> Vec<CMatrix> {
    STATES
        .iter()
        .map(|(n, t)| io::parse_matrix_json(t, n).expect("bundled fixture parses"))
        .collect()
}

pub fn printed_chi_raw() -> CMatrix {
    io::parse_matrix_json(CHI, "chi").expect("bundled fixture parses")
}

/// ρ1..ρ10 after the ingestion repair, with every adjustment logged.
pub fn printed_states(log: &mut AdjustmentLog) -> Result<Vec<QuditDensityMatrix>> {
    state_names()
        .zip(printed_states_raw())
        .map(|(n, m)| io::repair_density(n, &m, log))
        .collect()
}

pub fn printed_chi(log: &mut AdjustmentLog) -> Result<ProcessMatrix> {
    io::repair_process("chi", &printed_chi_raw(), log)
}
