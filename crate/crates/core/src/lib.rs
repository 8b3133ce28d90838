//! Classical workbench for bosonic quantum simulation.
//!
//! Boson and fermion qubit encodings, model Hamiltonians with Fock-space
//! oracles, product-formula dynamics, Lindblad propagation, moment-based
//! ground-state estimates, coupled-cluster downfolding, block encodings,
//! state preparation, flow equations and bosonic truncation bounds.

pub mod block_encoding;
pub mod downfolding;
pub mod dynamics;
pub mod encodings;
pub mod error;
pub mod flows;
pub mod fock;
pub mod ground_state;
pub mod linalg;
pub mod models;
pub mod open_systems;
pub mod pauli;
pub mod state_prep;
pub mod trunc;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
pub use pauli::{Pauli, PauliSum, PauliTerm};

pub use encodings::{BosonEncoding, BosonRegister, RegisterKind, RegisterLayout};
pub use ground_state::PdsResult;
pub use models::{BoseHubbardParams, EncodedHamiltonian, HolsteinParams, SpinBosonParams};
pub use trunc::{TruncationInput, TruncationPlan};
