//! Phase retrieval from magnitudes of frame coefficients.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense eigensolver, pseudo-inverse, conjugate gradients,
//!   power iteration.
//! * [`frames`]: frames, analysis/synthesis maps and the `alpha`/`beta`
//!   measurement maps.
//! * [`lifting`]: realification, the rank-two operators `Phi_k`, the lifted
//!   maps and the operators `R`, `calR`, `calS`, `calZ`.
//! * [`metrics`]: distances on the quotient by the global phase.
//! * [`injectivity`]: phase-retrievability certificates and Lipschitz bounds.
//! * [`estimation`]: noise models, Fisher information, Cramer-Rao bounds.
//! * [`recon`]: reconstruction algorithms.
//! * [`harness`]: seeded experiment runner and reports.

pub mod error;
pub mod estimation;
pub mod frames;
pub mod harness;
pub mod injectivity;
pub mod lifting;
pub mod linalg;
pub mod metrics;
pub mod recon;
pub mod rng;

pub use error::{Error, Result};
pub use frames::{Ensemble, Frame, MeasurementKind, MeasurementVector, ScalarField};
pub use linalg::{CMat, CVec, RMat, RVec};
pub use num_complex::Complex64;
