//! Branch-and-bound with pluggable bounding.
//!
//! Branches on the first unstable ReLU neuron in topological order. For
//! constraint-based bounding the sign constraint lands on the neuron's
//! pre-activation variable, which cuts the input region exactly through the
//! accumulated equalities. Interval bounding cannot express a half-space, so
//! there the box is intersected with the pre-activation half-space (affine on
//! the box because every earlier neuron is stable on it) and re-boxed; the
//! re-boxed child may equal its parent, which is precisely how the interval
//! divergence example burns its budget.
//!
//! A leaf closes when no neuron is unstable (the bound is then exact for
//! Triangle-or-stronger bounding) or when its bounds are certified by
//! incumbents: concrete network values at input vertices. Reported bounds
//! aggregate over every leaf, so they are sound even on budget exhaustion and
//! exact when the run closes.

use super::{LayerSplits, VerifierReport, VerifierStatus};
use crate::geometry::HPolytope;
use crate::network::{Layer, Network};
use crate::rat::{qz, Q};
use crate::relax::pipeline::{bound_with_branches, BranchConstraint};
use crate::relax::{ibp::ibp_trace, RelaxationSpec, Stability};
use crate::{Caps, Error, Result};
use num_traits::{Signed, Zero};

/// Concrete network values used to certify bounds without further splitting.
struct Incumbents {
    min: Vec<Q>,
    max: Vec<Q>,
}

impl Incumbents {
    fn gather(net: &Network, input: &HPolytope, caps: &Caps) -> Result<Incumbents> {
        let mut candidates: Vec<Vec<Q>> = match input.vertices(caps) {
            Ok(v) => v.points,
            Err(Error::CapExceeded { .. }) => Vec::new(),
            Err(e) => return Err(e),
        };
        if candidates.is_empty() {
            let (lo, hi) = input.bounding_box()?;
            for corner in [lo.clone(), hi.clone()] {
                if input.contains(&corner) {
                    candidates.push(corner);
                }
            }
            let mid: Vec<Q> = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| (l + h) / crate::rat::qi(2))
                .collect();
            if input.contains(&mid) {
                candidates.push(mid);
            }
        }
        if candidates.is_empty() {
            return Err(Error::Empty);
        }
        let out_dim = net.output_dim();
        let mut min: Vec<Option<Q>> = vec![None; out_dim];
        let mut max: Vec<Option<Q>> = vec![None; out_dim];
        for x in &candidates {
            let y = net.eval(x)?;
            for c in 0..out_dim {
                if min[c].as_ref().map_or(true, |m| &y[c] < m) {
                    min[c] = Some(y[c].clone());
                }
                if max[c].as_ref().map_or(true, |m| &y[c] > m) {
                    max[c] = Some(y[c].clone());
                }
            }
        }
        Ok(Incumbents {
            min: min.into_iter().map(Option::unwrap).collect(),
            max: max.into_iter().map(Option::unwrap).collect(),
        })
    }

    fn certify(&self, lower: &[Q], upper: &[Q]) -> bool {
        lower.iter().zip(&self.min).all(|(l, m)| l >= m)
            && upper.iter().zip(&self.max).all(|(u, m)| u <= m)
    }
}

struct Aggregate {
    lower: Option<Vec<Q>>,
    upper: Option<Vec<Q>>,
}

impl Aggregate {
    fn new() -> Self {
        Aggregate {
            lower: None,
            upper: None,
        }
    }

    fn absorb(&mut self, lower: &[Q], upper: &[Q]) {
        match &mut self.lower {
            None => self.lower = Some(lower.to_vec()),
            Some(acc) => {
                for (a, v) in acc.iter_mut().zip(lower) {
                    if v < a {
                        *a = v.clone();
                    }
                }
            }
        }
        match &mut self.upper {
            None => self.upper = Some(upper.to_vec()),
            Some(acc) => {
                for (a, v) in acc.iter_mut().zip(upper) {
                    if v > a {
                        *a = v.clone();
                    }
                }
            }
        }
    }
}

struct SplitCounter {
    relu_layers: Vec<usize>,
    counts: Vec<usize>,
}

impl SplitCounter {
    fn new(net: &Network) -> Self {
        let relu_layers: Vec<usize> = net
            .layers()
            .iter()
            .enumerate()
            .filter_map(|(i, l)| matches!(l, Layer::Relu(_)).then_some(i))
            .collect();
        let counts = vec![0; relu_layers.len()];
        SplitCounter {
            relu_layers,
            counts,
        }
    }

    fn record(&mut self, layer: usize) {
        if let Some(pos) = self.relu_layers.iter().position(|&l| l == layer) {
            self.counts[pos] += 1;
        }
    }

    fn into_trace(self) -> Vec<LayerSplits> {
        self.relu_layers
            .iter()
            .zip(self.counts)
            .map(|(&layer, splits)| LayerSplits { layer, splits })
            .collect()
    }
}

/// Branch-and-bound over the constraint-based relaxations.
fn bab_constraints(
    net: &Network,
    input: &HPolytope,
    spec: RelaxationSpec,
    budget: usize,
    caps: &Caps,
) -> Result<VerifierReport> {
    let incumbents = Incumbents::gather(net, input, caps)?;
    let mut agg = Aggregate::new();
    let mut splits = SplitCounter::new(net);
    let mut stack: Vec<Vec<BranchConstraint>> = vec![Vec::new()];
    let mut closed = 0usize;
    let mut exhausted = false;
    while let Some(branches) = stack.pop() {
        let (report, infos) = bound_with_branches(net, input, spec, &branches, caps)?;
        if exhausted {
            // Draining: every remaining node is treated as a leaf.
            agg.absorb(&report.lower, &report.upper);
            closed += 1;
            continue;
        }
        let target = infos.iter().find(|i| {
            i.bounds.stability() == Stability::Unstable
                && !branches
                    .iter()
                    .any(|b| b.layer == i.layer && b.coord == i.coord)
        });
        let certified = incumbents.certify(&report.lower, &report.upper);
        match target {
            None => {
                agg.absorb(&report.lower, &report.upper);
                closed += 1;
            }
            Some(_) if certified => {
                agg.absorb(&report.lower, &report.upper);
                closed += 1;
            }
            Some(info) => {
                splits.record(info.layer);
                let mut plus = branches.clone();
                plus.push(BranchConstraint {
                    layer: info.layer,
                    coord: info.coord,
                    sign: 1,
                });
                let mut minus = branches;
                minus.push(BranchConstraint {
                    layer: info.layer,
                    coord: info.coord,
                    sign: -1,
                });
                stack.push(minus);
                stack.push(plus);
                if closed + stack.len() > budget {
                    exhausted = true;
                }
            }
        }
    }
    Ok(VerifierReport {
        lower: agg.lower.unwrap(),
        upper: agg.upper.unwrap(),
        subproblem_count: closed,
        status: if exhausted {
            VerifierStatus::BudgetExhausted
        } else {
            VerifierStatus::Exact
        },
        trace: splits.into_trace(),
    })
}

/// The pre-activation of `(layer, coord)` as an affine function of the input,
/// valid on the box because every earlier ReLU neuron is stable there.
fn preactivation_on_box(
    net: &Network,
    trace: &[(Vec<Q>, Vec<Q>)],
    layer: usize,
    coord: usize,
) -> Result<(Vec<Q>, Q)> {
    let d = net.input_dim();
    let mut weights: Vec<Vec<Q>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { crate::rat::qone() } else { qz() })
                .collect()
        })
        .collect();
    let mut bias = vec![qz(); d];
    for (i, l) in net.layers()[..layer].iter().enumerate() {
        match l {
            Layer::Affine(a) => {
                let new_weights: Vec<Vec<Q>> = a
                    .weights
                    .iter()
                    .map(|row| {
                        (0..d)
                            .map(|j| row.iter().zip(&weights).map(|(c, w)| c * &w[j]).sum())
                            .collect()
                    })
                    .collect();
                let new_bias: Vec<Q> = a
                    .weights
                    .iter()
                    .zip(&a.bias)
                    .map(|(row, b)| crate::rat::dot(row, &bias) + b)
                    .collect();
                weights = new_weights;
                bias = new_bias;
            }
            Layer::Relu(w) => {
                let (lo, hi) = &trace[i];
                for c in 0..*w {
                    if hi[c].is_negative() || hi[c].is_zero() {
                        weights[c] = vec![qz(); d];
                        bias[c] = qz();
                    } else if lo[c].is_negative() {
                        return Err(Error::Invalid(
                            "earlier neuron unstable while composing a branch half-space".into(),
                        ));
                    }
                }
            }
        }
    }
    Ok((weights[coord].clone(), bias[coord].clone()))
}

/// Branch-and-bound with interval bounding: nodes are boxes, branching
/// intersects with the pre-activation half-space and re-boxes.
fn bab_ibp(net: &Network, input: &HPolytope, budget: usize, caps: &Caps) -> Result<VerifierReport> {
    let incumbents = Incumbents::gather(net, input, caps)?;
    let mut agg = Aggregate::new();
    let mut splits = SplitCounter::new(net);
    let root = input.bounding_box()?;
    let mut stack: Vec<(Vec<Q>, Vec<Q>)> = vec![root];
    let mut closed = 0usize;
    let mut exhausted = false;
    while let Some((lo, hi)) = stack.pop() {
        let trace = ibp_trace(net, &lo, &hi)?;
        let (out_lo, out_hi) = trace.last().unwrap();
        if exhausted {
            agg.absorb(out_lo, out_hi);
            closed += 1;
            continue;
        }
        let mut target: Option<(usize, usize)> = None;
        'scan: for (i, l) in net.layers().iter().enumerate() {
            if let Layer::Relu(w) = l {
                let (pre_lo, pre_hi) = &trace[i];
                for c in 0..*w {
                    if pre_lo[c].is_negative() && pre_hi[c].is_positive() {
                        target = Some((i, c));
                        break 'scan;
                    }
                }
            }
        }
        let certified = incumbents.certify(out_lo, out_hi);
        match target {
            None => {
                agg.absorb(out_lo, out_hi);
                closed += 1;
            }
            Some(_) if certified => {
                agg.absorb(out_lo, out_hi);
                closed += 1;
            }
            Some((layer, coord)) => {
                splits.record(layer);
                let (w, b) = preactivation_on_box(net, &trace, layer, coord)?;
                let box_hp = HPolytope::from_box(&lo, &hi);
                for sign in [1i8, -1] {
                    let mut cut = box_hp.clone();
                    let (row, rhs): (Vec<Q>, Q) = if sign > 0 {
                        (w.iter().map(|v| -v).collect(), b.clone())
                    } else {
                        (w.clone(), -b.clone())
                    };
                    cut.push_le(&row, &rhs);
                    match cut.bounding_box() {
                        Ok(child) => stack.push(child),
                        Err(Error::Empty) => {}
                        Err(e) => return Err(e),
                    }
                }
                if closed + stack.len() > budget {
                    exhausted = true;
                }
            }
        }
    }
    Ok(VerifierReport {
        lower: agg.lower.unwrap(),
        upper: agg.upper.unwrap(),
        subproblem_count: closed,
        status: if exhausted {
            VerifierStatus::BudgetExhausted
        } else {
            VerifierStatus::Exact
        },
        trace: splits.into_trace(),
    })
}

/// Complete verification by recursive branching on unstable neurons, bounding
/// each subproblem with `spec`.
pub fn bab(
    net: &Network,
    input: &HPolytope,
    spec: RelaxationSpec,
    budget: usize,
    caps: &Caps,
) -> Result<VerifierReport> {
    if budget == 0 {
        return Err(Error::Invalid("budget must be >= 1".into()));
    }
    match spec {
        RelaxationSpec::Ibp => bab_ibp(net, input, budget, caps),
        _ => bab_constraints(net, input, spec, budget, caps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{ibp_divergence_network, max_network, zero_network};
    use crate::rat::{qi, qone};

    #[test]
    fn triangle_bab_enumerates_all_branches_of_max() {
        let caps = Caps::default();
        for d in 2..=4usize {
            let net = max_network(d).unwrap();
            let report = bab(
                &net,
                &HPolytope::unit_box(d),
                RelaxationSpec::Triangle,
                10_000,
                &caps,
            )
            .unwrap();
            assert_eq!(report.status, VerifierStatus::Exact);
            assert_eq!(report.subproblem_count, 1 << (d - 1));
            assert_eq!(report.lower, vec![qz()]);
            assert_eq!(report.upper, vec![qone()]);
        }
    }

    #[test]
    fn multi_neuron_bab_closes_at_the_root() {
        let caps = Caps::default();
        let net = max_network(2).unwrap();
        let report = bab(
            &net,
            &HPolytope::unit_box(2),
            RelaxationSpec::MultiNeuron(1),
            10_000,
            &caps,
        )
        .unwrap();
        assert_eq!(report.status, VerifierStatus::Exact);
        assert_eq!(report.subproblem_count, 1);
        assert_eq!((report.lower, report.upper), (vec![qz()], vec![qone()]));
    }

    #[test]
    fn interval_bab_exhausts_its_budget_on_the_divergence_example() {
        let caps = Caps::default();
        let net = ibp_divergence_network();
        let report = bab(&net, &HPolytope::unit_box(2), RelaxationSpec::Ibp, 200, &caps).unwrap();
        assert_eq!(report.status, VerifierStatus::BudgetExhausted);
        assert!(report.upper[0] > qone());
        assert_eq!(report.lower, vec![qz()]);
    }

    #[test]
    fn zero_network_closes_exactly_under_triangle() {
        let caps = Caps::default();
        let net = zero_network();
        let input = HPolytope::from_box(&[qi(-1)], &[qi(1)]);
        let report = bab(&net, &input, RelaxationSpec::Triangle, 10_000, &caps).unwrap();
        assert_eq!(report.status, VerifierStatus::Exact);
        assert_eq!((report.lower, report.upper), (vec![qz()], vec![qz()]));
        // One branch on the shared pre-activation resolves both neurons.
        assert!(report.subproblem_count <= 4);
    }
}
