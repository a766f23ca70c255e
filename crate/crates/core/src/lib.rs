//! Quantum and classical trajectories of a driven optomechanical cavity, with
//! transient-chaos lifetime statistics.
//!
//! Units: `ħ = 1`, times and rates in units of the mechanical frequency.

pub mod checkpoint;
pub mod classical;
pub mod config;
pub mod engines;
pub mod error;
pub mod fock_ops;
pub mod master;
pub mod model;
pub mod moving_basis;
pub mod record;
pub mod rng;
pub mod runner;
pub mod selftest;
pub mod stats;

pub use error::{Error, Result};
pub use fock_ops::{HilbertConfig, Operator, StateVector, C64};
pub use model::{ParamSpec, PhasePoint, SystemParams};
