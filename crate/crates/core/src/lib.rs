//! Exact-arithmetic laboratory for perturbed sum-product experiments.
//!
//! * [`scalar`]: exact rationals, grid rounding, dyadic indices, enclosures.
//! * [`sets`]: generators, sum/product sets, k-fold spans.
//! * [`perturb`]: perturbation budgets, perturbed product/sum sets, adversaries.
//! * [`structure`]: dyadic decomposition, doubling chains, Plünnecke–Ruzsa checks.
//! * [`incidence`]: polygonal curve families on a rounded grid and their
//!   incidence, intersection and crossing statistics.
//! * [`suites`]: property suites shared by the CLI `verify` command and tests.

pub mod error;
pub mod incidence;
pub mod perturb;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod sets;
pub mod structure;
pub mod suites;

pub use error::{LabError, Result};
pub use scalar::{Enclosure, Scalar};
pub use sets::PointSet;
