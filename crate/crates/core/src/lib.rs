//! Termination analysis for affine probabilistic programs with angelic and demonic
//! nondeterminism: linear ranking supermartingale synthesis over an exact rational LP core,
//! expected-time and concentration bounds, and bounded-unfolding approximation.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod approx;
pub mod bounds;
pub mod error;
pub mod lang;
pub mod lp;
pub mod poly;
mod qnum;
pub mod rational;
pub mod reductions;
pub mod sgs;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
pub use rational::Rational;
