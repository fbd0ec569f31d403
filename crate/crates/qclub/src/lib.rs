//! Simulator and numerical toolkit for quantile-gated admission processes.
//!
//! A growing multiset admits one candidate pair per round: the pair joins
//! (contributing its minimum) exactly when the members at or below the pair
//! midpoint form at least a fraction r of the current membership — i.e. the
//! midpoint clears the club's lower r-quantile. This crate provides the base
//! measure families, exact and rejection samplers for the conditioned pair,
//! the drift function governing where the threshold can settle, limit-law
//! classification, chain engines with walk diagnostics, and an ensemble
//! harness for studying uniqueness of the limit.

pub mod config;
pub mod drift;
pub mod error;
pub mod harness;
pub mod limits;
pub mod measure;
pub mod numeric;
pub mod process;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
