//! Multi-fidelity co-simulation core.
//!
//! Everything in this crate is pure computation over owned values: procedural
//! road scenarios, a Frenet-frame sampling planner, the low-fidelity
//! (state-enforcing) and high-fidelity (controlled kinematic bicycle) backends,
//! the synchronized multi-agent loop and the cross-fidelity error metrics.
//! File formats, wall-clock timing, threading and the CLI live in the `multifi`
//! crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod backends;
pub mod cosim;
mod error;
pub mod evaluation;
pub mod geometry;
pub mod math;
pub mod planner;
pub mod scenario;

pub use error::{Error, Result};
