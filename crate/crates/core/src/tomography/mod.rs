//! State and process tomography on qutrits.

pub mod counts;
pub mod process;
pub mod projectors;
pub mod state;

pub use counts::{
    expected_counts, poisson_draw, simulate_counts, simulate_counts_with, CountsTable,
};
pub use process::{
    apply_process, apply_process_raw, average_fidelity_from_process, mub_fidelities,
    process_fidelity, project_cptp, reconstruct_process, reconstruct_process_from_frequencies,
    reconstruct_process_with, InputOutputPair, MubFidelities, ProcessFit, ProcessMatrix,
    ProcessObjective,
};
pub use projectors::{ProjectorKind, ProjectorSet, CANONICAL_NAMES};
pub use state::{exact_counts, reconstruct_state, reconstruct_state_with, StateMethod};
