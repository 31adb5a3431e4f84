//! Numerical laboratory for moments of Haar-random states and unitaries.
//!
//! The crate computes group averages `E_G[U^⊗t X U†^⊗t]` exactly, through the
//! commutant basis of the group and the pseudo-inverse of its Gram matrix,
//! and by Monte-Carlo over Haar samples. Three families are supported: the
//! unitary group `U(d)`, the unitary symplectic group `SP(d/2)` and, for the
//! local gates of brickwork circuits, the orthogonal group.
//!
//! Module map:
//!
//! - [`brauer`]: perfect matchings of `2t` points (Brauer diagrams) and their
//!   composition with loop counting.
//! - [`operator`] and [`reps`]: operators on `(C^d)^⊗t`, the permutation and
//!   Brauer representations, `Ω`, and the symmetric projector.
//! - [`sampling`]: reproducible Haar samplers.
//! - [`weingarten`]: commutant bases, Gram matrices and exact twirls.
//! - [`designs`]: state-design distances, annihilation residuals and the
//!   mixed-state gap.
//! - [`shadows`]: classical-shadow channels, estimators and variances.
//! - [`circuits`]: brickwork second-moment operators and spectral gaps.

pub mod brauer;
pub mod budget;
pub mod circuits;
pub mod designs;
pub mod error;
pub mod operator;
pub mod reps;
pub mod sampling;
pub mod shadows;
pub mod weingarten;

pub use brauer::{Pairing, WeightedDiagram};
pub use error::{Error, Result};
pub use operator::Operator;
pub use sampling::{EnsembleSpec, GroupFamily};
pub use weingarten::{CommutantBasis, TwirlResult};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Version string embedded in run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
