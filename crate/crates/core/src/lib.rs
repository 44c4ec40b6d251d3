//! Coded caching with random popularity-based placement, conflict-graph
//! index coding and Monte Carlo rate estimation.

pub mod analysis;
pub mod codec;
pub mod coloring;
pub mod config;
pub mod conflict;
pub mod error;
pub mod gf;
pub mod harness;
pub mod model;
pub mod placement;

pub use error::{Error, Result};
