//! Memory character of finite-dimensional quantum dynamical maps.
//!
//! The crate represents time-dependent families of quantum channels and
//! decides, on a time grid, which of the following hold:
//!
//! * CP-divisibility (every one-step propagator is CPTP),
//! * absence of information backflow (trace distance never grows),
//! * elementarity with respect to a basis (no growth for pairs of states with
//!   equal populations in that basis), with the block-diagonal and diagonal
//!   refinements,
//! * compatibility with a mixture of generalized classical maps, refuted by
//!   the two-qubit c-c channel-state witness X(ρ) = |s| + ‖T‖₁,
//! * strong quantum backflow certified through extremality.
//!
//! Every verdict is a numerical certificate on the supplied grid, not a proof.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod channels;
pub mod classify;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod sampling;
pub mod tolerance;
pub mod verdict;
pub mod witness;

pub use channels::{Basis, BlochAffine, Channel, StochasticMatrix};
pub use dynamics::{DynamicalMap, MixtureComponent, MixtureSpec};

pub use error::{Error, Result};
pub use numerics::TimeGrid;
pub use tolerance::Tolerances;
pub use verdict::{Status, Verdict, WitnessPoint};
