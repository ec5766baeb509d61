//! Parameterized insertion primitives for peg-in-hole assembly.
//!
//! * [`action`]: the hybrid (type, parameters) action space.
//! * [`sim`]: quasi-static peg-in-hole simulator.
//! * [`nn`]: small dense networks with analytic gradients.

pub mod action;
pub mod error;
pub mod nn;
pub mod seeding;
pub mod agent;
pub mod baseline;
pub mod harness;
pub mod sim;

pub use error::{Error, Result};
