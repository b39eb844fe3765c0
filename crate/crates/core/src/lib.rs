//! Variational-inference Thompson sampling for contextual bandits.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: sufficient statistics, exact linear posterior, and the potentials
//!   `U_t` (negative log posteriors) for the linear-Gaussian and logistic models.
//! - [`engine`]: the Gaussian variational state `N(mu, B B^T)` and its
//!   Bures–Wasserstein gradient updates, plus the default step-size and iteration
//!   schedules.
//! - [`bandit`], [`agents`], [`sim`]: synthetic environments, the agents
//!   (variational TS, exact linear TS, Langevin TS, uniform) and the round loop.
//! - [`diagnostics`]: runtime checks of the recursion's invariants.

pub mod agents;
pub mod bandit;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod model;
pub mod sim;

pub use error::{Result, VitsError};
pub use linalg::{Matrix, Vector};
