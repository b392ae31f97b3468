//! Exact finite-domain workbench for k-wise statistical-query algorithms.
//!
//! Everything probability-valued in this crate is a [`Rat`] (arbitrary-precision
//! rational), so distribution constructions, query expectations, and threshold
//! comparisons are exact. Floating point only enters for Monte-Carlo estimates
//! and for logarithms taken at the very end of a computation.
//!
//! Module map:
//!
//! * [`fp_linalg`] — matrices and subspaces over a prime field, canonical
//!   row-reduced bases, bit encodings of subspaces, affine slices.
//! * [`dist`] — finite distributions with exact masses, k-ary queries,
//!   product expectations, divergences, planted hyperplane distributions.
//! * [`oracle`] — statistical-query and b-bit sampling oracle sessions with
//!   pluggable answer policies and auditable transcripts.
//! * [`learner`] — the hyperplane PAC learner driven entirely by (k+1)-wise
//!   statistical queries, plus the subspace structure witness search.
//! * [`correlation`] — average-correlation and statistical-dimension
//!   calculators for the planted hyperplane family.
//! * [`reduction`] — hybrid decomposition of k-wise queries into unary ones,
//!   the flat-distribution distinguisher, and the multiplicative-weights
//!   k-wise estimator.
//! * [`csp_dnf`] — Boolean predicates with exact Fourier spectra, planted
//!   constraint distributions, and the tuple-encoding DNF reduction.
//! * [`comm`] — bounded-bit extraction programs, their statistical-query
//!   simulation, communication protocols, and collision-probability
//!   estimation.

pub mod comm;
pub mod correlation;
pub mod csp_dnf;
pub mod dist;
pub mod error;
pub mod fp_linalg;
pub mod learner;
pub mod oracle;
pub mod rat;
pub mod reduction;

pub use error::{Error, Result};
pub use rat::Rat;
