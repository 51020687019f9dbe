//! Exact-arithmetic laboratory for ReLU-network certification with convex
//! relaxations.
//!
//! Everything is computed over arbitrary-precision rationals: the polyhedral
//! kernel (LP, projection, hulls), the network oracle (linear regions, exact
//! bounds), the relaxation hierarchy (IBP, Triangle, multi-neuron, layerwise
//! and cross-layer graph hulls), the generator networks, and the two complete
//! verifiers (polytope partitioning and branch-and-bound). No floats anywhere.

pub mod cli;
pub mod constructions;
pub mod geometry;
pub mod network;
pub mod rat;
pub mod relax;
pub mod verify;

mod linalg;

use thiserror::Error;

/// Dimension / size caps that keep the exact algorithms at desk scale.
///
/// `geometry` bounds the dimension in which facet/vertex enumeration runs
/// (ambient for H-to-V enumeration, intrinsic for hulls). `oracle` bounds the
/// total ReLU neuron count accepted by the region-enumeration oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub geometry: usize,
    pub oracle: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            geometry: 6,
            oracle: 14,
        }
    }
}

impl Caps {
    /// Set both caps to one value, as the `CONVEX_BARRIER_CAP` environment
    /// variable does on the command line.
    pub fn uniform(cap: usize) -> Self {
        Caps {
            geometry: cap,
            oracle: cap,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("{what} needs dimension {need}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        need: usize,
        cap: usize,
    },
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint system is infeasible where it must not be: {0}")]
    InternalInfeasible(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("transform unsupported: {0}")]
    TransformUnsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
