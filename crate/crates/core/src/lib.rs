//! Faedo–Galerkin laboratory for the controlled stochastic
//! Landau–Lifshitz–Bloch equation with relaxed (Young-measure) controls.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral`]: Neumann cosine basis, transforms, projection and norms.
//! - [`pointwise`]: ℝ³ algebra on collocation grids.
//! - [`control`]: control atoms, mixtures, schedules and control operators.
//! - [`dynamics`]: the Galerkin SDE and its integrators.
//! - [`cost`]: running/terminal costs and Monte-Carlo estimation.
//! - [`verification`]: energy, uniqueness and scheme-consistency studies.
//! - [`optimizer`]: cross-entropy search over relaxed-control schedules.
//!
//! Integrators and control operators are trait objects held in name-keyed
//! [`registry::Registry`] instances, so configurations select them by name.

pub mod control;
pub mod cost;
pub mod dynamics;
pub mod error;
pub mod optimizer;
pub mod pointwise;
pub mod registry;
pub mod seed;
pub mod spectral;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
