//! Certificates for uniform exponential stability of positive linear
//! discrete-time systems `x(k+1) = T x(k)` on ordered vector spaces.
//!
//! Every equivalent stability criterion is evaluated on its own numerical
//! route and the verdicts are cross-checked by [`criteria::cross_check`].
//! Failing criteria carry witnesses that can be re-verified independently.

// `!(x >= y)` is used on purpose so NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cones;
pub mod criteria;
pub mod error;
pub mod gallery;
pub mod io;
pub mod iss;
pub mod linalg;
pub mod lyapunov;
pub mod operators;
pub mod sampling;

pub use cones::{ConeKind, ConeSpec};
pub use criteria::{cross_check, CertificateReport, Consensus, CriterionId, CriterionVerdict, CrossCheckConfig, Witness};
pub use error::{Error, Result};
pub use linalg::{Matrix, Norm};
pub use operators::{OperatorSpec, SpectralEstimate};
