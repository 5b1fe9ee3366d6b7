//! Quantum extreme learning machine for estimating the mixing parameter of
//! Werner states.
//!
//! A noisy (generalized) Werner input is joined to a random reservoir state,
//! evolved under a random transverse-field Ising Hamiltonian, and read out
//! through local `σᶻ` expectations (optionally two-point `σᶻσᶻ` correlations,
//! exactly or from finite shots). A linear readout fitted by pseudo-inverse
//! maps the measurements to an estimate of `p`.

pub mod error;
pub mod harness;
pub mod io;
pub mod quantum;
pub mod readout;
pub mod reservoir;
pub mod states;
pub mod stream;

pub use error::{Error, Result};
