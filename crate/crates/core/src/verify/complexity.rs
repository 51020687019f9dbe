//! The partition-complexity experiment on the nested max networks.

use super::{bab, polytope_partition, VerifierStatus};
use crate::constructions::max_network;
use crate::geometry::HPolytope;
use crate::network::count_activation_patterns;
use crate::relax::RelaxationSpec;
use crate::{Caps, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityRow {
    pub d: usize,
    /// Distinct activation patterns A(f, X).
    pub patterns: usize,
    pub bab_triangle_leaves: usize,
    pub partition_count: usize,
    pub bab_multi_neuron_leaves: usize,
}

/// One row per dimension d = 2..d_max of max(x_1..x_d) on the unit box:
/// the pattern count, branch-and-bound leaves under Triangle and under the
/// single-index multi-neuron hull, and the polytope-partition part count.
pub fn complexity_experiment(d_max: usize, caps: &Caps) -> Result<Vec<ComplexityRow>> {
    if !(2..=8).contains(&d_max) {
        return Err(Error::Invalid("d_max must lie in 2..=8".into()));
    }
    let budget = 1 << 20;
    let mut rows = Vec::new();
    for d in 2..=d_max {
        let net = max_network(d)?;
        let input = HPolytope::unit_box(d);
        let patterns = count_activation_patterns(&net, &input, caps)?;
        let triangle = bab(&net, &input, RelaxationSpec::Triangle, budget, caps)?;
        let multi = bab(&net, &input, RelaxationSpec::MultiNeuron(1), budget, caps)?;
        let partition = polytope_partition(&net, &input, budget, caps)?;
        debug_assert_eq!(triangle.status, VerifierStatus::Exact);
        rows.push(ComplexityRow {
            d,
            patterns,
            bab_triangle_leaves: triangle.subproblem_count,
            partition_count: partition.subproblem_count,
            bab_multi_neuron_leaves: multi.subproblem_count,
        });
    }
    Ok(rows)
}
