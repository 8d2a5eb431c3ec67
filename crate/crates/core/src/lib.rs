//! Modal simulator and Lyapunov certificate checker for the indirectly damped
//! coupled system
//!
//! ```text
//! u'' + b u' + A u + α A^β v = 0
//! v''        + A₂ v + α A^β u = 0,      A₂ = A² + ζ_pert A
//! ```
//!
//! where `A` is a positive self-adjoint operator given by its (truncated)
//! spectrum. Every quantity decouples over the eigenbasis of `A`, so the
//! crate works mode by mode: each eigenvalue carries a 4-dimensional block
//! `(u, v, u', v')` that is propagated exactly with a matrix exponential.
//!
//! On top of the simulator the crate builds the weak-norm energies used to
//! prove `1/t` decay, selects the free parameters of the Lyapunov functional
//! `H_ε` and certifies its key inequalities uniformly over a λ-probe grid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod decay;
pub mod energy;
pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod propagator;
pub mod runner;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use propagator::{ModalState, Trajectory};
pub use spectral::{Spectrum, SystemParams};
