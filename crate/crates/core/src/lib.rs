//! Upper bounds on the number of bound states of two-dimensional Schrödinger
//! operators `-Δ + g V`, with brute-force spectral oracles to check them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod bskernel;
pub mod cli;
pub mod config;
pub mod conditions;
pub mod error;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod rearrangement;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
