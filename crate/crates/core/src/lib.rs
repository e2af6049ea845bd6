//! Last-mile ridesharing assignment driven by passenger satisfaction.
//!
//! All passengers and vehicles start at a shared origin (an airport, say) and
//! must be dropped off at their own destinations. The crate provides:
//!
//! - [`graph`]: road graphs, random and grid generators, cropping, and
//!   shortest travel-time matrices over a terminal set.
//! - [`satisfaction`]: the linear gain model, a feed-forward satisfaction
//!   network with its trainer, proxy objectives, and a synthetic survey
//!   dataset generator.
//! - [`payment`]: the equal-gain cost split for a shared vehicle.
//! - [`solvers`]: Simsat (randomised greedy with restarts), the exact
//!   partition-based solver, and a brute-force oracle.
//! - [`experiments`]: scenario sampling and the five-algorithm benchmark.
//! - [`cli`]: the `rideshare` command-line front end.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod payment;
pub mod satisfaction;
pub mod solvers;

pub use error::{Error, Result};
