//! Topological process monitoring for lattice-structured parts.
//!
//! The pipeline turns a 3D point cloud into a Vietoris-Rips persistence
//! diagram, compares diagrams with duration, bottleneck or Wasserstein
//! distances, and runs a leave-one-in permutation test of a new part against
//! an in-control reference set. Repeating the test part by part gives a
//! Phase II control chart whose run-length behaviour can be simulated with
//! the synthetic lattice generators in [`partgen`] and the drivers in
//! [`harness`].

pub mod error;
pub mod filtration;
pub mod geometry;
pub mod harness;
pub mod inference;
pub mod metrics;
pub mod partgen;
pub mod persistence;
pub mod spc;

pub use error::{Error, Result};
