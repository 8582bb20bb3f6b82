//! Exact four-mode Fock-space representation of the protocol.

pub mod basis;
pub mod evolution;
pub mod moments;
pub mod operator;
pub mod spectrum;
pub mod state;

pub use basis::{FockBasis, Mode, ModePair, Occupation, DEFAULT_CAP};
pub use evolution::{
    apply_mode_swap, encode_phases, evolve_squeezing, rotate_in_plane, rotate_z, Generator,
};
pub use moments::{moments, MomentTable};
pub use operator::{Axis, PairOperator};
pub use state::StateVector;
