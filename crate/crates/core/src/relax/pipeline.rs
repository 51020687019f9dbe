//! The bound pipelines.
//!
//! Layerwise engines (Triangle, multi-neuron) relax one layer at a time:
//! affine layers become equality blocks, ReLU layers get per-neuron templates
//! or a graph hull against the Fourier-Motzkin projection of the accumulated
//! system onto the layer's input block. Cross-layer engines hull overlapping
//! windows of `r` adjacent layers jointly (stride 1); the layerwise-optimal
//! engine is the window size 1 case. Output bounds come from exact LPs on the
//! assembled system.

use super::hulls::{relu_graph_hull, triangle_relax_neuron};
use super::{BoundReport, NeuronBounds, NeuronInfo, RelaxStats, RelaxationSpec, Stability};
use crate::geometry::{ConstraintSystem, HPolytope, LpOutcome, Rel, Sense};
use crate::network::{AffineLayer, Layer, Network};
use crate::rat::{qone, qz, Q};
use crate::{Caps, Error, Result};

/// A sign constraint on the pre-activation of one ReLU neuron, used by
/// branch-and-bound. `layer` indexes the ReLU layer in the network's layer
/// list; the constrained variable lives in the block feeding that layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchConstraint {
    pub layer: usize,
    pub coord: usize,
    /// +1 pins `pre >= 0`, -1 pins `pre <= 0`.
    pub sign: i8,
}

fn block_name(i: usize) -> String {
    if i == 0 {
        "x".to_string()
    } else {
        format!("v{i}")
    }
}

/// The exact affine-layer relaxation: equality rows `out = A in + b` on a
/// freshly declared output block. Lossless.
pub fn relax_affine(
    sys: &mut ConstraintSystem,
    in_block: &str,
    out_block: &str,
    layer: &AffineLayer,
    tag: &str,
) -> Result<()> {
    let in_idx = sys
        .block_index(in_block)
        .ok_or_else(|| Error::Invalid(format!("unknown block {in_block}")))?;
    if sys.block(in_idx).dim != layer.in_dim() {
        return Err(Error::DimensionMismatch("relax_affine input".into()));
    }
    let out_idx = match sys.block_index(out_block) {
        Some(idx) => idx,
        None => sys.declare_block(out_block, layer.out_dim()),
    };
    for (c, (row, bias)) in layer.weights.iter().zip(&layer.bias).enumerate() {
        let mut terms: Vec<(usize, Q)> = row
            .iter()
            .enumerate()
            .map(|(j, w)| (sys.var(in_idx, j), w.clone()))
            .collect();
        terms.push((sys.var(out_idx, c), -qone()));
        sys.add_sparse(&terms, Rel::Eq, -bias.clone(), tag);
    }
    Ok(())
}

struct Assembler<'a> {
    net: &'a Network,
    branches: &'a [BranchConstraint],
    sys: ConstraintSystem,
    stats: RelaxStats,
    infos: Vec<NeuronInfo>,
}

impl<'a> Assembler<'a> {
    fn new(net: &'a Network, input: &HPolytope, branches: &'a [BranchConstraint]) -> Result<Self> {
        if input.dim != net.input_dim() {
            return Err(Error::DimensionMismatch("input polytope vs network".into()));
        }
        input.bounding_box()?;
        let mut sys = ConstraintSystem::new();
        let b = sys.declare_block("x", input.dim);
        let vars: Vec<usize> = sys.block_vars(b).collect();
        sys.add_hpolytope(input, &vars, "input");
        let mut asm = Assembler {
            net,
            branches,
            sys,
            stats: RelaxStats::default(),
            infos: Vec::new(),
        };
        asm.inject_branch_rows(0);
        Ok(asm)
    }

    /// Declares block `i` if missing and pins any branch signs whose
    /// pre-activation lives there.
    fn ensure_block(&mut self, i: usize) -> usize {
        let name = block_name(i);
        if let Some(idx) = self.sys.block_index(&name) {
            return idx;
        }
        let idx = self.sys.declare_block(&name, self.net.dim_after(i));
        self.inject_branch_rows(i);
        idx
    }

    fn inject_branch_rows(&mut self, block: usize) {
        let idx = self.sys.block_index(&block_name(block)).unwrap();
        for b in self.branches.iter().filter(|b| b.layer == block) {
            let var = self.sys.var(idx, b.coord);
            let coef = if b.sign >= 0 { -qone() } else { qone() };
            self.sys
                .add_sparse(&[(var, coef)], Rel::Le, qz(), "branch");
        }
    }

    fn var_bounds(&mut self, block: usize, coord: usize) -> Result<NeuronBounds> {
        let idx = self.sys.block_index(&block_name(block)).unwrap();
        let var = self.sys.var(idx, coord);
        self.stats.lp_calls += 2;
        let lo = match self.sys.lp_var(var, Sense::Min) {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Infeasible => {
                return Err(Error::InternalInfeasible(format!(
                    "pre-activation bounds at block {block}"
                )))
            }
            LpOutcome::Unbounded => {
                return Err(Error::Invalid("unbounded pre-activation".into()))
            }
        };
        let hi = match self.sys.lp_var(var, Sense::Max) {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Infeasible => unreachable!("feasibility already established"),
            LpOutcome::Unbounded => {
                return Err(Error::Invalid("unbounded pre-activation".into()))
            }
        };
        NeuronBounds::new(lo, hi)
    }

    fn add_neuron_rows(&mut self, in_block: usize, out_block: usize, coord: usize, bounds: &NeuronBounds, tag: &str) {
        let in_idx = self.sys.block_index(&block_name(in_block)).unwrap();
        let out_idx = self.sys.block_index(&block_name(out_block)).unwrap();
        let xv = self.sys.var(in_idx, coord);
        let yv = self.sys.var(out_idx, coord);
        for row in triangle_relax_neuron(bounds) {
            self.sys
                .add_sparse(&[(xv, row.cx), (yv, row.cy)], row.rel, row.rhs, tag);
        }
    }

    fn inbound_projection(&mut self, block: usize) -> Result<HPolytope> {
        let name = block_name(block);
        self.sys.project_to_hpolytope(&name)
    }

    /// Per-output LP extraction over the assembled system.
    fn finish(mut self) -> Result<(BoundReport, Vec<NeuronInfo>)> {
        let out_block = block_name(self.net.layer_count());
        let out_dim = self.net.output_dim();
        let mut lower = Vec::with_capacity(out_dim);
        let mut upper = Vec::with_capacity(out_dim);
        for c in 0..out_dim {
            let mut obj = vec![qz(); out_dim];
            obj[c] = qone();
            self.stats.lp_calls += 2;
            match self.sys.lp_block(&out_block, &obj, Sense::Min)? {
                LpOutcome::Optimal { value, .. } => lower.push(value),
                LpOutcome::Infeasible => {
                    return Err(Error::InternalInfeasible("output bound".into()))
                }
                LpOutcome::Unbounded => return Err(Error::Invalid("unbounded output".into())),
            }
            match self.sys.lp_block(&out_block, &obj, Sense::Max)? {
                LpOutcome::Optimal { value, .. } => upper.push(value),
                LpOutcome::Infeasible => unreachable!(),
                LpOutcome::Unbounded => return Err(Error::Invalid("unbounded output".into())),
            }
        }
        self.stats.constraints = self.sys.rows.len();
        let report = BoundReport {
            lower,
            upper,
            system: self.sys,
            stats: self.stats,
            exact: None,
        };
        Ok((report, self.infos))
    }
}

/// Layerwise pipeline: Triangle everywhere, or one hulled index set of size
/// `<= k` per ReLU layer with Triangle on the remaining neurons.
fn layerwise(
    net: &Network,
    input: &HPolytope,
    multi_neuron: Option<usize>,
    branches: &[BranchConstraint],
    caps: &Caps,
) -> Result<(BoundReport, Vec<NeuronInfo>)> {
    let mut asm = Assembler::new(net, input, branches)?;
    for (i, layer) in net.layers().iter().enumerate() {
        match layer {
            Layer::Affine(a) => {
                asm.ensure_block(i + 1);
                relax_affine(
                    &mut asm.sys,
                    &block_name(i),
                    &block_name(i + 1),
                    a,
                    &format!("affine:{i}"),
                )?;
            }
            Layer::Relu(width) => {
                let mut bounds = Vec::with_capacity(*width);
                for c in 0..*width {
                    bounds.push(asm.var_bounds(i, c)?);
                }
                asm.ensure_block(i + 1);
                let index_set: Vec<usize> = match multi_neuron {
                    None => Vec::new(),
                    Some(k) => select_index_set(&bounds, k),
                };
                if !index_set.is_empty() {
                    let inbound = asm.inbound_projection(i)?;
                    asm.stats.hull_calls += 1;
                    let hull = relu_graph_hull(&inbound, &index_set, caps)?;
                    let in_idx = asm.sys.block_index(&block_name(i)).unwrap();
                    let out_idx = asm.sys.block_index(&block_name(i + 1)).unwrap();
                    let mut vars: Vec<usize> = asm.sys.block_vars(in_idx).collect();
                    vars.extend(index_set.iter().map(|&c| asm.sys.var(out_idx, c)));
                    asm.sys.add_hpolytope(&hull, &vars, &format!("hull:{i}"));
                }
                for c in 0..*width {
                    if !index_set.contains(&c) {
                        asm.add_neuron_rows(i, i + 1, c, &bounds[c], &format!("triangle:{i}:{c}"));
                    }
                }
                for (c, b) in bounds.into_iter().enumerate() {
                    asm.infos.push(NeuronInfo {
                        layer: i,
                        coord: c,
                        bounds: b,
                    });
                }
            }
        }
    }
    asm.finish()
}

/// The widest unstable intervals first (ties to the lowest index); stable
/// neurons only fill an index set larger than the unstable count.
fn select_index_set(bounds: &[NeuronBounds], k: usize) -> Vec<usize> {
    let mut unstable: Vec<usize> = (0..bounds.len())
        .filter(|&c| bounds[c].stability() == Stability::Unstable)
        .collect();
    unstable.sort_by(|&a, &b| {
        let wa = &bounds[a].hi - &bounds[a].lo;
        let wb = &bounds[b].hi - &bounds[b].lo;
        wb.cmp(&wa).then(a.cmp(&b))
    });
    let mut set: Vec<usize> = unstable.into_iter().take(k).collect();
    if set.len() < k {
        for c in 0..bounds.len() {
            if set.len() == k {
                break;
            }
            if !set.contains(&c) {
                set.push(c);
            }
        }
    }
    set.sort_unstable();
    set
}

/// Cross-layer pipeline: maximally overlapping windows of `r` layers, each
/// hulled jointly against the projection of the accumulated system onto the
/// window's input block.
fn crosslayer(
    net: &Network,
    input: &HPolytope,
    r: usize,
    branches: &[BranchConstraint],
    caps: &Caps,
) -> Result<(BoundReport, Vec<NeuronInfo>)> {
    assert!(r >= 1);
    let n = net.layer_count();
    let mut asm = Assembler::new(net, input, branches)?;
    let mut affine_done = vec![false; n];
    let last_start = n.saturating_sub(r);
    for i in 0..=last_start {
        let end = usize::min(i + r, n);
        let window = net.slice(i..end)?;
        let all_affine = window
            .layers()
            .iter()
            .all(|l| matches!(l, Layer::Affine(_)));
        if all_affine {
            // The graph of an affine chain is already a polytope: plain
            // equality rows are the hull, added once per layer.
            for (offset, layer) in window.layers().iter().enumerate() {
                let j = i + offset;
                if affine_done[j] {
                    continue;
                }
                let Layer::Affine(a) = layer else { unreachable!() };
                asm.ensure_block(j + 1);
                relax_affine(
                    &mut asm.sys,
                    &block_name(j),
                    &block_name(j + 1),
                    a,
                    &format!("affine:{j}"),
                )?;
                affine_done[j] = true;
            }
            continue;
        }
        let inbound = asm.inbound_projection(i)?;
        asm.stats.hull_calls += 1;
        let hull = super::hulls::layer_graph_hull(&window, &inbound, caps)?;
        let mut vars: Vec<usize> = Vec::new();
        for j in i..=end {
            let idx = asm.ensure_block(j);
            vars.extend(asm.sys.block_vars(idx));
        }
        asm.sys.add_hpolytope(&hull, &vars, &format!("window:{i}"));
    }
    // Pre-activation stability is read off the finished system.
    let neurons = net.relu_neurons();
    for (layer, coord) in neurons {
        let b = asm.var_bounds(layer, coord)?;
        asm.infos.push(NeuronInfo {
            layer,
            coord,
            bounds: b,
        });
    }
    asm.finish()
}

/// Assembles the constraint system for `spec` and extracts output bounds,
/// honoring the given branch sign constraints.
pub(crate) fn bound_with_branches(
    net: &Network,
    input: &HPolytope,
    spec: RelaxationSpec,
    branches: &[BranchConstraint],
    caps: &Caps,
) -> Result<(BoundReport, Vec<NeuronInfo>)> {
    match spec {
        RelaxationSpec::Ibp => {
            if !branches.is_empty() {
                return Err(Error::Invalid(
                    "interval propagation cannot honor sign constraints; branch by re-boxing".into(),
                ));
            }
            let (lo, hi) = input.bounding_box()?;
            let report = super::ibp::ibp_bounds(net, &lo, &hi)?;
            Ok((report, Vec::new()))
        }
        RelaxationSpec::Triangle => layerwise(net, input, None, branches, caps),
        RelaxationSpec::MultiNeuron(k) => {
            if k == 0 {
                return Err(Error::Invalid("multi-neuron budget must be >= 1".into()));
            }
            layerwise(net, input, Some(k), branches, caps)
        }
        RelaxationSpec::LayerwiseOptimal => crosslayer(net, input, 1, branches, caps),
        RelaxationSpec::CrossLayer(r) => {
            if r == 0 {
                return Err(Error::Invalid("window size must be >= 1".into()));
            }
            crosslayer(net, input, r, branches, caps)
        }
    }
}

/// Sound output bounds of `net` over `input` under the chosen relaxation.
pub fn bound(
    net: &Network,
    input: &HPolytope,
    spec: RelaxationSpec,
    caps: &Caps,
) -> Result<BoundReport> {
    Ok(bound_with_branches(net, input, spec, &[], caps)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests_support::{affine, max2_flavor};
    use crate::rat::{q, qi};

    fn zero_net() -> Network {
        let a1 = affine(&[&[1], &[1]], &[0, 0]);
        let a2 = affine(&[&[1, -1]], &[0]);
        Network::new(1, vec![Layer::Affine(a1), Layer::Relu(2), Layer::Affine(a2)]).unwrap()
    }

    #[test]
    fn triangle_on_max_network_gives_three_halves() {
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let report = bound(&net, &input, RelaxationSpec::Triangle, &Caps::default()).unwrap();
        assert_eq!(report.upper, vec![q(3, 2)]);
        assert_eq!(report.lower, vec![qi(0)]);
    }

    #[test]
    fn multi_neuron_on_max_network_is_exact() {
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let report = bound(&net, &input, RelaxationSpec::MultiNeuron(1), &Caps::default()).unwrap();
        assert_eq!(report.lower, vec![qi(0)]);
        assert_eq!(report.upper, vec![qi(1)]);
        assert_eq!(report.stats.hull_calls, 1);
    }

    #[test]
    fn layerwise_optimal_on_max_network_is_exact() {
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let report = bound(&net, &input, RelaxationSpec::LayerwiseOptimal, &Caps::default()).unwrap();
        assert_eq!(report.lower, vec![qi(0)]);
        assert_eq!(report.upper, vec![qi(1)]);
    }

    #[test]
    fn zero_network_relaxations() {
        let net = zero_net();
        let input = HPolytope::from_box(&[qi(-1)], &[qi(1)]);
        let caps = Caps::default();
        // The joint hull over both neurons pins c = d, so the bounds collapse.
        let m2 = bound(&net, &input, RelaxationSpec::MultiNeuron(2), &caps).unwrap();
        assert_eq!(m2.lower, vec![qi(0)]);
        assert_eq!(m2.upper, vec![qi(0)]);
        // Triangle couples both neurons to the shared input, so the LP-tight
        // single-neuron interval is [-1/2, 1/2]; cross-checked against brute
        // force vertex enumeration of the very same constraint system.
        let tri = bound(&net, &input, RelaxationSpec::Triangle, &caps).unwrap();
        assert_eq!(tri.lower, vec![q(-1, 2)]);
        assert_eq!(tri.upper, vec![q(1, 2)]);
        let hp = tri.system.to_hpolytope();
        let out_var = tri.system.var(tri.system.block_index("v3").unwrap(), 0);
        let vertices = hp.vertices(&Caps::uniform(8)).unwrap();
        let brute_min = vertices.points.iter().map(|p| p[out_var].clone()).min().unwrap();
        let brute_max = vertices.points.iter().map(|p| p[out_var].clone()).max().unwrap();
        assert_eq!(brute_min, tri.lower[0]);
        assert_eq!(brute_max, tri.upper[0]);
    }

    #[test]
    fn branch_constraints_stabilize_neurons() {
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let plus = BranchConstraint { layer: 1, coord: 0, sign: 1 };
        let (report, infos) =
            bound_with_branches(&net, &input, RelaxationSpec::Triangle, &[plus], &Caps::default())
                .unwrap();
        // With x1 - x2 >= 0 pinned, everything is stable and the bound exact.
        assert!(infos
            .iter()
            .all(|i| i.bounds.stability() != Stability::Unstable));
        assert_eq!(report.lower, vec![qi(0)]);
        assert_eq!(report.upper, vec![qi(1)]);
        let minus = BranchConstraint { layer: 1, coord: 0, sign: -1 };
        let (report, _) =
            bound_with_branches(&net, &input, RelaxationSpec::Triangle, &[minus], &Caps::default())
                .unwrap();
        assert_eq!(report.lower, vec![qi(0)]);
        assert_eq!(report.upper, vec![qi(1)]);
    }

    #[test]
    fn relax_affine_identity_and_composition() {
        let input = HPolytope::unit_box(2);
        let mut sys = ConstraintSystem::from_hpolytope("x", &input, "input");
        let id = affine(&[&[1, 0], &[0, 1]], &[0, 0]);
        relax_affine(&mut sys, "x", "v1", &id, "affine:0").unwrap();
        let projected = sys.project_to_hpolytope("v1").unwrap();
        assert!(crate::geometry::hp_equal(&projected, &input).unwrap());

        // Composing two affine relaxations equals relaxing the composition.
        let a = affine(&[&[1, 2], &[0, 1]], &[1, 0]);
        let b = affine(&[&[1, -1]], &[2]);
        let mut chained = ConstraintSystem::from_hpolytope("x", &input, "input");
        relax_affine(&mut chained, "x", "v1", &a, "affine:0").unwrap();
        relax_affine(&mut chained, "v1", "v2", &b, "affine:1").unwrap();
        let combined_w = vec![vec![
            &b.weights[0][0] * &a.weights[0][0] + &b.weights[0][1] * &a.weights[1][0],
            &b.weights[0][0] * &a.weights[0][1] + &b.weights[0][1] * &a.weights[1][1],
        ]];
        let combined_b = vec![
            &b.weights[0][0] * &a.bias[0] + &b.weights[0][1] * &a.bias[1] + &b.bias[0],
        ];
        let composed = AffineLayer::new(combined_w, combined_b).unwrap();
        let mut direct = ConstraintSystem::from_hpolytope("x", &input, "input");
        relax_affine(&mut direct, "x", "v1", &composed, "affine:0").unwrap();
        let via_chain = chained.project_to_hpolytope("v2").unwrap();
        let via_direct = direct.project_to_hpolytope("v1").unwrap();
        assert!(crate::geometry::hp_equal(&via_chain, &via_direct).unwrap());
    }
}
