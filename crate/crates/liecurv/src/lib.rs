//! Left-invariant Riemannian geometry on Lie groups with an ad-invariant
//! bilinear form, computed from structure constants.
//!
//! The crate builds up in layers:
//!
//! * [`lie`]: structure constants, brackets, adjoint matrices, axiom checks.
//! * [`quad_form`]: invariant forms, left-invariant metrics, and adapted
//!   frames that diagonalize the form while staying metric-orthonormal.
//! * [`curvature`]: Levi-Civita connection and Ricci curvature in a frame,
//!   with independently derived formulas cross-checking each other.
//! * [`quasi_einstein`]: the generalized Einstein condition with a drift
//!   vector and effective dimension parameter, plus Killing-field tools.
//! * [`solver`]: numerical search for metrics and drift vectors satisfying
//!   that condition on a fixed algebra.
//! * [`gn_family`]: a family of solvable groups with closed-form solutions,
//!   used as ground truth for the numerical pipeline.
//! * [`io`]: JSON documents for algebras and result reports.

pub mod curvature;
pub mod error;
pub mod gn_family;
pub mod io;
pub mod lie;
pub mod par;
pub mod quad_form;
pub mod quasi_einstein;
pub mod solver;

pub use error::{Error, Result};
pub use lie::LieAlgebra;
pub use quad_form::{AdaptedFrame, InvariantForm, Metric};
