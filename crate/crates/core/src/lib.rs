//! Learning the gradient of a Hamiltonian from trajectory pairs by
//! backpropagating through an explicit pseudo-symplectic Runge–Kutta
//! integrator, with learnable Padé-type activations.
//!
//! Module map:
//! - [`diff`]: tape-based reverse mode, dual-number forward mode, finite differences.
//! - [`systems`]: reference Hamiltonians and the structure matrix `J`.
//! - [`integrators`]: the 7-stage pseudo-symplectic method, implicit midpoint,
//!   and order measurements.
//! - [`network`]: the symmetric-Jacobian gradient network and its activations.
//! - [`training`]: datasets, loss, Adam, and the full-batch training loop.
//! - [`metrics`]: prediction error, trajectory error and energy curves.
//! - [`formats`]: CSV and JSON files exchanged with the CLI.
//! - [`presets`]: the reference example configurations.

pub mod diff;
pub mod error;
pub mod formats;
pub mod integrators;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod presets;
pub mod rng;
pub mod systems;
pub mod training;

pub use error::{Error, Result};
