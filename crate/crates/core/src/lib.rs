//! Quantum Rabi zigzag chain with staggered flux: Bogoliubov spectra,
//! mean-field ground states, chiral currents, criticality and exact
//! diagonalization.

pub mod bogoliubov;
pub mod criticality;
pub mod ed;
pub mod error;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod scan;

pub use error::{Error, Result};
pub use model::ModelParams;
