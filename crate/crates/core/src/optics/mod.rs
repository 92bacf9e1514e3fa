//! Fock-space simulation of the post-selected linear-optical qutrit Bell
//! measurement and the teleportation experiment built around it.

pub mod circuit;
pub mod element;
pub mod fock;
pub mod mode;
pub mod visibility;

pub use circuit::{
    build_hdbsm_circuit, run_teleportation, HdbsmCircuit, StageName, TeleportationRun,
};
pub use element::OpticalElement;
pub use fock::{FockState, PostSelectionPattern};
pub use mode::{Arm, ModeSelector, OpticalMode, Pol};
pub use visibility::{visibility_damping_factor, VisibilityModel};
