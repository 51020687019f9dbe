//! Ground-truth oracle: exhaustive linear-region enumeration by depth-first
//! sign assignment with LP feasibility pruning.
//!
//! A pattern counts as realized iff some input point attains it, where a
//! pre-activation equal to zero resolves to the +1 sign. Concretely the -1
//! branch carries a strict inequality, decided exactly by maximizing a slack
//! variable; the +1 branch is closed. Emitted region domains are closed, so
//! regions with non-empty interior tile the input set.

use super::{AffineLayer, Layer, Network};
use crate::geometry::{HPolytope, LinRow, LpOutcome, Rel, Sense};
use crate::rat::{dot, qone, qz, Q};
use crate::{Caps, Error, Result};
use num_traits::Signed;

/// Sign vector over all ReLU neurons in topological order, entries +1 / -1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    pub signs: Vec<i8>,
}

/// One linear piece of the network: the sign pattern, the closed input-space
/// domain, and the affine map the network restricts to there.
#[derive(Debug, Clone)]
pub struct LinearRegion {
    pub pattern: ActivationPattern,
    pub domain: HPolytope,
    pub map: AffineLayer,
}

struct Explorer<'a> {
    net: &'a Network,
    input_dim: usize,
    /// Closed constraint rows over the input variables.
    closed: Vec<(Vec<Q>, Q)>,
    /// Strictly-negative side rows `w . x < b`.
    strict: Vec<(Vec<Q>, Q)>,
    signs: Vec<i8>,
    out: Vec<LinearRegion>,
}

impl<'a> Explorer<'a> {
    /// Alive iff the closed rows plus strictly satisfied strict rows admit a
    /// point; exact via max t s.t. strict rows shifted by t, t <= 1.
    fn alive(&self) -> bool {
        let dim = self.input_dim + 1;
        let mut rows: Vec<LinRow> = Vec::new();
        for (w, b) in &self.closed {
            let mut coeffs = w.clone();
            coeffs.push(qz());
            rows.push(LinRow::from_rational(&coeffs, Rel::Le, b, "region"));
        }
        for (w, b) in &self.strict {
            let mut coeffs = w.clone();
            coeffs.push(qone());
            rows.push(LinRow::from_rational(&coeffs, Rel::Le, b, "strict"));
        }
        let mut t_up = vec![qz(); dim];
        t_up[dim - 1] = qone();
        rows.push(LinRow::from_rational(&t_up, Rel::Le, &qone(), "slack"));
        let mut t_lo = vec![qz(); dim];
        t_lo[dim - 1] = -qone();
        rows.push(LinRow::from_rational(&t_lo, Rel::Le, &qz(), "slack"));
        let mut obj = vec![qz(); dim];
        obj[dim - 1] = qone();
        match crate::geometry::lp::solve(&rows, dim, &obj, Sense::Max) {
            LpOutcome::Optimal { value, .. } => value.is_positive(),
            LpOutcome::Infeasible => false,
            LpOutcome::Unbounded => unreachable!("slack is bounded above"),
        }
    }

    fn explore(&mut self, layer_idx: usize, map: (Vec<Vec<Q>>, Vec<Q>)) {
        let Some(layer) = self.net.layers().get(layer_idx) else {
            let domain = self.domain();
            self.out.push(LinearRegion {
                pattern: ActivationPattern {
                    signs: self.signs.clone(),
                },
                domain,
                map: AffineLayer {
                    weights: map.0,
                    bias: map.1,
                },
            });
            return;
        };
        match layer {
            Layer::Affine(a) => {
                let weights: Vec<Vec<Q>> = a
                    .weights
                    .iter()
                    .map(|row| {
                        (0..self.input_dim)
                            .map(|j| {
                                row.iter()
                                    .zip(&map.0)
                                    .map(|(c, mrow)| c * &mrow[j])
                                    .sum::<Q>()
                            })
                            .collect()
                    })
                    .collect();
                let bias: Vec<Q> = a
                    .weights
                    .iter()
                    .zip(&a.bias)
                    .map(|(row, b)| dot(row, &map.1) + b)
                    .collect();
                self.explore(layer_idx + 1, (weights, bias));
            }
            Layer::Relu(width) => {
                let width = *width;
                self.branch_neuron(layer_idx, 0, width, map);
            }
        }
    }

    fn branch_neuron(
        &mut self,
        layer_idx: usize,
        coord: usize,
        width: usize,
        map: (Vec<Vec<Q>>, Vec<Q>),
    ) {
        if coord == width {
            self.explore(layer_idx + 1, map);
            return;
        }
        let w = map.0[coord].clone();
        let b = map.1[coord].clone();
        // +1: w.x + b >= 0, neuron passes through.
        let neg_w: Vec<Q> = w.iter().map(|c| -c).collect();
        self.closed.push((neg_w, b.clone()));
        self.signs.push(1);
        if self.alive() {
            self.branch_neuron(layer_idx, coord + 1, width, map.clone());
        }
        self.closed.pop();
        self.signs.pop();
        // -1: w.x + b < 0, neuron outputs zero.
        self.strict.push((w.clone(), -b.clone()));
        self.signs.push(-1);
        if self.alive() {
            let mut zeroed = map;
            zeroed.0[coord] = vec![qz(); self.input_dim];
            zeroed.1[coord] = qz();
            self.branch_neuron(layer_idx, coord + 1, width, zeroed);
        }
        self.strict.pop();
        self.signs.pop();
    }

    fn domain(&self) -> HPolytope {
        let mut hp = HPolytope::universe(self.input_dim);
        for (w, b) in &self.closed {
            hp.push_le(w, b);
        }
        for (w, b) in &self.strict {
            hp.push_le(w, b);
        }
        hp
    }
}

fn check_caps(net: &Network, input: &HPolytope, caps: &Caps) -> Result<()> {
    if input.dim != net.input_dim() {
        return Err(Error::DimensionMismatch("input set vs network".into()));
    }
    let neurons = net.relu_neuron_count();
    if neurons > caps.oracle {
        return Err(Error::CapExceeded {
            what: "region enumeration",
            need: neurons,
            cap: caps.oracle,
        });
    }
    // Boundedness of the input set is part of the contract.
    input.bounding_box()?;
    Ok(())
}

/// All realized linear regions of `net` over the bounded input polytope.
pub fn enumerate_regions(net: &Network, input: &HPolytope, caps: &Caps) -> Result<Vec<LinearRegion>> {
    check_caps(net, input, caps)?;
    let identity = AffineLayer::identity(net.input_dim());
    let mut explorer = Explorer {
        net,
        input_dim: net.input_dim(),
        closed: input
            .rows
            .iter()
            .map(|(a, b)| {
                (
                    a.iter().map(|c| Q::from_integer(c.clone())).collect(),
                    Q::from_integer(b.clone()),
                )
            })
            .collect(),
        strict: Vec::new(),
        signs: Vec::new(),
        out: Vec::new(),
    };
    if !explorer.alive() {
        return Err(Error::Empty);
    }
    explorer.explore(0, (identity.weights, identity.bias));
    Ok(explorer.out)
}

/// A(f, X): the number of distinct activation patterns realized on X.
pub fn count_activation_patterns(net: &Network, input: &HPolytope, caps: &Caps) -> Result<usize> {
    Ok(enumerate_regions(net, input, caps)?.len())
}

/// Exact per-coordinate output range, by LP over each region's affine map.
pub fn exact_bounds(net: &Network, input: &HPolytope, caps: &Caps) -> Result<(Vec<Q>, Vec<Q>)> {
    let regions = enumerate_regions(net, input, caps)?;
    let out_dim = net.output_dim();
    let mut lower: Vec<Option<Q>> = vec![None; out_dim];
    let mut upper: Vec<Option<Q>> = vec![None; out_dim];
    for region in &regions {
        for c in 0..out_dim {
            let obj = &region.map.weights[c];
            let offset = &region.map.bias[c];
            for (sense, slot) in [(Sense::Min, &mut lower), (Sense::Max, &mut upper)] {
                match region.domain.lp(obj, sense) {
                    LpOutcome::Optimal { value, .. } => {
                        let v = value + offset;
                        let entry = &mut slot[c];
                        let better = match (&entry, sense) {
                            (None, _) => true,
                            (Some(cur), Sense::Min) => &v < cur,
                            (Some(cur), Sense::Max) => &v > cur,
                        };
                        if better {
                            *entry = Some(v);
                        }
                    }
                    LpOutcome::Infeasible => {
                        unreachable!("regions are non-empty by construction")
                    }
                    LpOutcome::Unbounded => unreachable!("input set is bounded"),
                }
            }
        }
    }
    let lower = lower.into_iter().map(Option::unwrap).collect();
    let upper = upper.into_iter().map(Option::unwrap).collect();
    Ok((lower, upper))
}

/// The graph `{(x, f(x))}` as a union of per-region vertex sets; exact.
pub fn exact_output_graph(
    net: &Network,
    input: &HPolytope,
    caps: &Caps,
) -> Result<Vec<crate::geometry::VPolytope>> {
    let regions = enumerate_regions(net, input, caps)?;
    let mut out = Vec::with_capacity(regions.len());
    for region in &regions {
        let vertices = region.domain.vertices(caps)?;
        let points: Vec<Vec<Q>> = vertices
            .points
            .iter()
            .map(|x| {
                let mut joint = x.clone();
                joint.extend(region.map.eval(x));
                joint
            })
            .collect();
        out.push(crate::geometry::VPolytope::new(
            net.input_dim() + net.output_dim(),
            points,
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests_support::{affine, max2_flavor};
    use crate::network::{Layer, Network};
    use crate::rat::{q, qi};

    #[test]
    fn max_network_has_two_regions_on_unit_box() {
        let net = max2_flavor();
        let regions = enumerate_regions(&net, &HPolytope::unit_box(2), &Caps::default()).unwrap();
        assert_eq!(regions.len(), 2);
        let patterns: Vec<Vec<i8>> = regions.iter().map(|r| r.pattern.signs.clone()).collect();
        assert!(patterns.contains(&vec![1, 1]));
        assert!(patterns.contains(&vec![-1, 1]));
    }

    #[test]
    fn affine_network_is_one_region() {
        let net = Network::new(2, vec![Layer::Affine(affine(&[&[1, 2]], &[3]))]).unwrap();
        let regions = enumerate_regions(&net, &HPolytope::unit_box(2), &Caps::default()).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(
            count_activation_patterns(&net, &HPolytope::unit_box(2), &Caps::default()).unwrap(),
            1
        );
    }

    #[test]
    fn zero_network_has_two_regions_with_zero_map() {
        // relu(x) - relu(x), the two ReLUs share the pre-activation x: the
        // sign cases are (+,+) on [0,1] and (-,-) on [-1,0].
        let a1 = affine(&[&[1], &[1]], &[0, 0]);
        let a2 = affine(&[&[1, -1]], &[0]);
        let net = Network::new(1, vec![Layer::Affine(a1), Layer::Relu(2), Layer::Affine(a2)]).unwrap();
        let input = HPolytope::from_box(&[qi(-1)], &[qi(1)]);
        let regions = enumerate_regions(&net, &input, &Caps::default()).unwrap();
        assert_eq!(regions.len(), 2);
        for r in &regions {
            assert_eq!(r.map.weights, vec![vec![qi(0)]]);
            assert_eq!(r.map.bias, vec![qi(0)]);
        }
    }

    #[test]
    fn exact_bounds_of_max_on_unit_cube() {
        let net = max2_flavor();
        let (lo, hi) = exact_bounds(&net, &HPolytope::unit_box(2), &Caps::default()).unwrap();
        assert_eq!(lo, vec![qi(0)]);
        assert_eq!(hi, vec![qi(1)]);
    }

    #[test]
    fn region_maps_agree_with_eval_and_tile_the_box() {
        use rand::{Rng, SeedableRng};
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let regions = enumerate_regions(&net, &input, &Caps::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let x = vec![q(rng.gen_range(0..=16), 16), q(rng.gen_range(0..=16), 16)];
            let mut covered = false;
            for r in &regions {
                if r.domain.contains(&x) {
                    covered = true;
                    assert_eq!(r.map.eval(&x), net.eval(&x).unwrap());
                }
            }
            assert!(covered, "point {x:?} not in any region");
        }
    }

    #[test]
    fn graph_projection_reproduces_exact_bounds() {
        let net = max2_flavor();
        let input = HPolytope::unit_box(2);
        let pieces = exact_output_graph(&net, &input, &Caps::default()).unwrap();
        let (lo, hi) = exact_bounds(&net, &input, &Caps::default()).unwrap();
        let outputs: Vec<Q> = pieces
            .iter()
            .flat_map(|p| p.points.iter().map(|pt| pt[2].clone()))
            .collect();
        assert_eq!(outputs.iter().min(), Some(&lo[0]));
        assert_eq!(outputs.iter().max(), Some(&hi[0]));
        assert_eq!(
            pieces.len(),
            enumerate_regions(&net, &input, &Caps::default())
                .unwrap()
                .len()
        );
    }

    #[test]
    fn pattern_count_is_monotone_on_nested_boxes() {
        let net = max2_flavor();
        let caps = Caps::default();
        let small = HPolytope::from_box(&[q(1, 4), q(1, 4)], &[q(3, 4), q(3, 4)]);
        let big = HPolytope::unit_box(2);
        let a_small = count_activation_patterns(&net, &small, &caps).unwrap();
        let a_big = count_activation_patterns(&net, &big, &caps).unwrap();
        assert!(a_small <= a_big);
        // A box strictly on one side of the fold sees a single pattern.
        let off = HPolytope::from_box(&[q(3, 4), qi(0)], &[qi(1), q(1, 8)]);
        assert_eq!(count_activation_patterns(&net, &off, &caps).unwrap(), 1);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let net = max2_flavor();
        let caps = Caps { geometry: 6, oracle: 1 };
        match enumerate_regions(&net, &HPolytope::unit_box(2), &caps) {
            Err(Error::CapExceeded { need, cap, .. }) => assert_eq!((need, cap), (2, 1)),
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}

