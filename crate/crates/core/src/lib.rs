//! Stochastic-electrodynamics laboratory.
//!
//! A charged particle bound by a conservative force, driven by a synthesized
//! zero-point field and damped by (order-reduced) radiation reaction. The
//! crate simulates ensembles of such particles and compares their stationary
//! statistics with matrix-mechanics predictions for the same potential.

pub mod balance;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod force;
pub mod matrix;
pub mod output;
pub mod quad;
pub mod scales;
pub mod spectrum;
pub mod seed;
pub mod stats;
pub mod zpf_field;

pub use error::{Result, SedError};
pub use force::{ForceModel, ForceSpec};
pub use scales::PhysicalScales;
pub use stats::Estimate;
pub use zpf_field::{ModeSet, TimeGrid, ZpfRealization};
