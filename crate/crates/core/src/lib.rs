//! Stability of objective structures under site potentials.

pub mod cli;
pub mod config;
pub mod driver;
pub mod error;
pub mod families;
pub mod field;
pub mod group;
pub mod harmonic;
pub mod hessian;
pub mod linalg;
pub mod output;
pub mod pencil;
pub mod potential;
pub mod relax;
pub mod seminorm;
pub mod tolerance;

pub use error::{Error, Result};
