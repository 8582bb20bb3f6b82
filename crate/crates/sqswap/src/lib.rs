//! Simulation, analysis and optimization of a mode-swapped spin-squeezing
//! protocol feeding two interferometers that estimate a differential phase.
//!
//! The crate is layered bottom-up:
//!
//! * [`fock`]: exact four-mode state vectors and sector-wise unitary evolution.
//! * [`protocol`]: the full pipeline and its moment-based sensitivity metrics.
//! * [`gaussian`]: closed-form sensitivities in the large-`N` bosonic picture.
//! * [`optimizer`]: orientation and mode-swap parameter searches.
//! * [`estimation`]: shot-by-shot Monte Carlo of phase and clock experiments.

pub mod error;
pub mod estimation;
pub mod fock;
pub mod gaussian;
pub mod optimizer;
pub mod protocol;

pub use error::{Error, Result};
