//! Exact-arithmetic cake cutting with piecewise-constant valuations.
//!
//! The cake is `[0, 1]`; agents report step-function densities and
//! mechanisms return one [`Piece`] per agent plus a discarded remainder.
//! All quantities are exact rationals, so every fairness or incentive claim
//! checked here is an exact comparison.

pub mod error;
pub mod gen;
pub mod mechanisms;
pub mod piece;
pub mod profile;
pub mod properties;
pub mod rational;
pub mod rw;
pub mod scenarios;
pub mod valuation;

pub use error::{Error, Result};
pub use mechanisms::{mechanism_by_name, Mechanism, MechanismKind};
pub use piece::{Interval, Piece};
pub use profile::{validate_allocation, Allocation, AllocationViolation, Profile};
pub use rational::{format_rational, parse_rational, rat, Rational};
pub use valuation::Valuation;
