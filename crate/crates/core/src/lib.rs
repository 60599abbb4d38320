//! Simulation toolkit for phonon-mediated two-mode squeezing between two
//! nitrogen-vacancy-center ensembles.
//!
//! Two spin ensembles, one prepared in the ground state and one inverted, are
//! each mapped to a bosonic mode (Holstein-Primakoff) and coupled to the
//! fundamental flexural modes of two clamped diamond beams joined by a phonon
//! hopping junction. The toolkit offers three independent routes through the
//! same physics:
//!
//! - [`builder`] + [`gaussian`]: exact second-moment (covariance matrix)
//!   propagation of the full four-mode model and of the adiabatically
//!   eliminated two-mode models, with mechanical damping and thermal noise;
//! - [`analytic`]: closed-form variance, excitation and regime formulas for
//!   the eliminated models;
//! - [`fock`]: a brute-force truncated-Fock integrator used as an independent
//!   oracle for both of the above.
//!
//! [`device`] maps beam geometry to physical rates, [`observables`] extracts
//! squeezing quantities from moment states, and [`sweep`] explores parameter
//! space.

pub mod analytic;
pub mod builder;
pub mod device;
pub mod error;
pub mod fock;
pub mod gaussian;
mod linalg;
pub mod model;
pub mod observables;
pub mod sweep;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{EffectiveParams, Mode, ModeLayout, SystemParams, SystemParamsHz};
