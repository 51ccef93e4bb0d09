//! Anytime benchmarking for Euclidean TSP solvers.
//!
//! * [`geometry`]: instances, tours, distance conventions, TSPLIB files.
//! * [`generators`]: seeded instance generators for five structural classes.
//! * [`solvers`]: an iterated local search and an edge-assembly GA that log
//!   every incumbent improvement, plus an exact dynamic program.
//! * [`runner`]: seeded multi-run experiments persisted as JSON lines.
//! * [`analysis`]: success probabilities, first hitting times, quantile
//!   curves, PAR scores and Wilcoxon signed-rank comparisons.

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod runner;
pub mod solvers;

pub use error::{Error, Result};
