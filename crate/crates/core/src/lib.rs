//! Qutrit teleportation toolkit: protocol algebra, a Fock-space simulation of the
//! post-selected linear-optical Bell measurement, state and process tomography,
//! genuine-dimension certification and Poisson Monte Carlo error analysis.

pub mod algebra;
pub mod cert;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod optics;
pub mod optim;
pub mod pipeline;
pub mod stats;
pub mod teleport;
pub mod tomography;

pub use error::{Error, Result};
