//! Succinct population protocols for quantifier-free Presburger predicates.
//!
//! The compiler splits a predicate `φ` at a population cutoff `ℓ`: one
//! leaderless protocol decides `(|v| >= ℓ) -> φ(v)` using logarithmically
//! many states per constant, another decides `(|v| < ℓ) -> φ(v)` by
//! simulating fixed-size halting protocols, and a product conjoins them.
//! The [`verify`] module checks the pieces against [`formula::Formula::evaluate`].

pub mod cli;
pub mod error;
pub mod formula;
pub mod large;
pub mod pipeline;
pub mod protocol;
pub mod small;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
