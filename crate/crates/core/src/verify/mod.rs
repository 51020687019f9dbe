//! Complete verification: polytope partitioning and branch-and-bound, both
//! instrumented with partition-complexity counters.

pub mod bab;
pub mod complexity;
pub mod partition;

pub use bab::bab;
pub use complexity::{complexity_experiment, ComplexityRow};
pub use partition::polytope_partition;

use crate::rat::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifierStatus {
    /// All subproblems closed; the reported bounds equal the oracle's.
    Exact,
    BudgetExhausted,
}

/// Per-ReLU-layer split instrumentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSplits {
    pub layer: usize,
    pub splits: usize,
}

#[derive(Debug, Clone)]
pub struct VerifierReport {
    pub lower: Vec<Q>,
    pub upper: Vec<Q>,
    /// Closed leaves (branch-and-bound) or final parts (partitioning).
    pub subproblem_count: usize,
    pub status: VerifierStatus,
    pub trace: Vec<LayerSplits>,
}
