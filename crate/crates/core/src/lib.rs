//! Games whose stages are the non-positive integers.
//!
//! Every history reaches infinitely far back, so positions and runs are
//! represented by a two-class tail pattern plus a finite window. On top of
//! that representation the crate offers:
//!
//! * cylinder-generated winning sets compiled to suffix automata ([`winset`]),
//! * win-lose solving through auxiliary finite games ([`winlose`]),
//! * strategy machines, consistent runs and equilibrium checks ([`strategy`]),
//! * certified approximate equilibria for discounted payoffs ([`continuous`]),
//! * the catalogue of worked examples with their verifiers ([`gallery`]).

pub mod continuous;
pub mod error;
pub mod format;
pub mod gallery;
pub mod model;
pub mod payoff;
pub mod strategy;
pub mod winlose;
pub mod winset;

pub use error::{Error, Result};
pub use model::{
    ActionId, GameSpec, Parity, PayoffSpec, PlayerId, Position, Run, SegmentAnchor, StageIndex, TailClass,
    TailPattern, TurnFunction, PLAYER_1, PLAYER_2,
};

/// Exact payoff arithmetic.
pub type Rational = num::BigRational;
