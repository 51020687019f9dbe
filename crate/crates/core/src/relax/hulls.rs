//! ReLU relaxation templates and exact graph hulls.

use super::{NeuronBounds, Stability};
use crate::geometry::{hull, HPolytope, Rel};
use crate::network::Network;
use crate::rat::{qone, qz, relu, Q};
use crate::{Caps, Error, Result};

/// One constraint of a two-variable template `cx * x + cy * y REL rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronRow {
    pub cx: Q,
    pub cy: Q,
    pub rel: Rel,
    pub rhs: Q,
}

/// The tightest single-neuron relaxation of `y = relu(x)` for `x in [l, u]`:
/// `{y = 0}` when stably inactive, `{y = x}` when stably active, and the
/// triangle `{y >= 0, y >= x, (u - l) y <= u x - u l}` otherwise.
pub fn triangle_relax_neuron(bounds: &NeuronBounds) -> Vec<NeuronRow> {
    match bounds.stability() {
        Stability::StableInactive => vec![NeuronRow {
            cx: qz(),
            cy: qone(),
            rel: Rel::Eq,
            rhs: qz(),
        }],
        Stability::StableActive => vec![NeuronRow {
            cx: -qone(),
            cy: qone(),
            rel: Rel::Eq,
            rhs: qz(),
        }],
        Stability::Unstable => {
            let width = &bounds.hi - &bounds.lo;
            vec![
                NeuronRow {
                    cx: qz(),
                    cy: -qone(),
                    rel: Rel::Le,
                    rhs: qz(),
                },
                NeuronRow {
                    cx: qone(),
                    cy: -qone(),
                    rel: Rel::Le,
                    rhs: qz(),
                },
                NeuronRow {
                    cx: -bounds.hi.clone(),
                    cy: width,
                    rel: Rel::Le,
                    rhs: -(&bounds.hi * &bounds.lo),
                },
            ]
        }
    }
}

/// Exact convex hull of `{(x, relu(x_I)) : x in P}` over the joint space
/// `(x, y_I)`, by splitting P into sign-orthant pieces over the I coordinates
/// and hulling the mapped piece vertices.
pub fn relu_graph_hull(p: &HPolytope, index_set: &[usize], caps: &Caps) -> Result<HPolytope> {
    let d = p.dim;
    let mut index_set = index_set.to_vec();
    index_set.sort_unstable();
    index_set.dedup();
    if index_set.iter().any(|&i| i >= d) {
        return Err(Error::Invalid("index set out of range".into()));
    }
    if index_set.len() > caps.geometry {
        return Err(Error::CapExceeded {
            what: "relu graph hull index set",
            need: index_set.len(),
            cap: caps.geometry,
        });
    }
    let k = index_set.len();
    let mut points: Vec<Vec<Q>> = Vec::new();
    for signs in 0..(1usize << k) {
        let mut piece = p.clone();
        for (slot, &coord) in index_set.iter().enumerate() {
            let mut row = vec![qz(); d];
            if signs >> slot & 1 == 1 {
                row[coord] = -qone(); // x_coord >= 0
                piece.push_le(&row, &qz());
            } else {
                row[coord] = qone(); // x_coord <= 0
                piece.push_le(&row, &qz());
            }
        }
        if piece.is_empty() {
            continue;
        }
        let vertices = piece.vertices(caps)?;
        for v in vertices.points {
            let mut joint = v.clone();
            joint.extend(index_set.iter().map(|&i| relu(&v[i])));
            points.push(joint);
        }
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    hull::hull(&points, d + k, caps)
}

/// Exact convex hull of the joint graph of a sub-network over all of its
/// blocks: `{(v, g_1(v), g_2(v), ...) : v in P}` where `g_i` are the block
/// values after each layer of `sub`.
pub fn layer_graph_hull(sub: &Network, p: &HPolytope, caps: &Caps) -> Result<HPolytope> {
    if p.dim != sub.input_dim() {
        return Err(Error::DimensionMismatch("layer graph hull input".into()));
    }
    let joint_dim: usize = (0..=sub.layer_count()).map(|i| sub.dim_after(i)).sum();
    let regions = crate::network::enumerate_regions(sub, p, caps)?;
    let mut points: Vec<Vec<Q>> = Vec::new();
    for region in &regions {
        let vertices = region.domain.vertices(caps)?;
        for v in vertices.points {
            let trace = sub.eval_trace(&v)?;
            let joint: Vec<Q> = trace.into_iter().flatten().collect();
            debug_assert_eq!(joint.len(), joint_dim);
            points.push(joint);
        }
    }
    if points.is_empty() {
        return Err(Error::Empty);
    }
    hull::hull(&points, joint_dim, caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hp_equal, implies_row, Sense};
    use crate::network::tests_support::affine;
    use crate::network::Layer;
    use crate::rat::{q, qi};

    #[test]
    fn triangle_template_on_symmetric_interval() {
        let rows = triangle_relax_neuron(&NeuronBounds::new(qi(-1), qi(1)).unwrap());
        // y >= x, y >= 0, y <= (x+1)/2 as 2(y) - x <= 1 after clearing.
        assert_eq!(rows.len(), 3);
        let mut hp = HPolytope::universe(2);
        for r in &rows {
            match r.rel {
                Rel::Le => hp.push_le(&[r.cx.clone(), r.cy.clone()], &r.rhs),
                Rel::Eq => hp.push_eq(&[r.cx.clone(), r.cy.clone()], &r.rhs),
            }
        }
        let mut expect = HPolytope::universe(2);
        expect.push_le(&[qz(), -qone()], &qz());
        expect.push_le(&[qone(), -qone()], &qz());
        expect.push_le(&[q(-1, 2), qone()], &q(1, 2));
        // The template leaves x unconstrained; compare after bounding x.
        let xbox = HPolytope::from_box(&[qi(-1), qi(-10)], &[qi(1), qi(10)]);
        let hp = hp.intersect(&xbox).unwrap();
        let expect = expect.intersect(&xbox).unwrap();
        assert!(hp_equal(&hp, &expect).unwrap());
    }

    #[test]
    fn triangle_template_stable_cases() {
        let active = triangle_relax_neuron(&NeuronBounds::new(qi(1), qi(2)).unwrap());
        assert_eq!(active.len(), 1);
        assert_eq!(active[0].rel, Rel::Eq);
        assert_eq!((&active[0].cx, &active[0].cy), (&-qone(), &qone()));
        let inactive = triangle_relax_neuron(&NeuronBounds::new(qi(-2), qi(-1)).unwrap());
        assert_eq!(inactive.len(), 1);
        assert_eq!((&inactive[0].cx, &inactive[0].cy), (&qz(), &qone()));
    }

    #[test]
    fn relu_graph_hull_of_interval_is_the_triangle() {
        let p = HPolytope::from_box(&[qi(-1)], &[qi(1)]);
        let got = relu_graph_hull(&p, &[0], &Caps::default()).unwrap();
        let mut expect = HPolytope::universe(2);
        expect.push_le(&[-qone(), qz()], &qone());
        expect.push_le(&[qone(), qz()], &qone());
        expect.push_le(&[qz(), -qone()], &qz());
        expect.push_le(&[qone(), -qone()], &qz());
        expect.push_le(&[q(-1, 2), qone()], &q(1, 2));
        assert!(hp_equal(&got, &expect).unwrap());
    }

    #[test]
    fn relu_graph_hull_stable_interval_is_identity_graph() {
        let p = HPolytope::from_box(&[qi(1)], &[qi(2)]);
        let got = relu_graph_hull(&p, &[0], &Caps::default()).unwrap();
        let mut expect = HPolytope::universe(2);
        expect.push_eq(&[qone(), -qone()], &qz());
        expect.push_le(&[qone(), qz()], &qi(2));
        expect.push_le(&[-qone(), qz()], &-qone());
        assert!(hp_equal(&got, &expect).unwrap());
    }

    #[test]
    fn case_study_facets_appear() {
        // P = {(a, b) : 0 <= a + b <= 1, 0 <= b <= 1}, the joint image of
        // (x1 - x2, x2) over the unit box; hulling (a, b, relu(a)) must give
        // the facets c <= 1 - b and c <= a + b.
        let mut p = HPolytope::universe(2);
        p.push_le(&[qi(-1), qi(-1)], &qi(0));
        p.push_le(&[qi(1), qi(1)], &qi(1));
        p.push_le(&[qz(), -qone()], &qz());
        p.push_le(&[qz(), qone()], &qone());
        let got = relu_graph_hull(&p, &[0], &Caps::default()).unwrap();
        assert!(implies_row(&got, &[qz(), qone(), qone()], &qone())); // c <= 1 - b
        assert!(implies_row(&got, &[-qone(), -qone(), qone()], &qz())); // c <= a + b
        assert!(implies_row(&got, &[qz(), qz(), -qone()], &qz())); // c >= 0
        assert!(implies_row(&got, &[qone(), qz(), -qone()], &qz())); // c >= a
        // And the bounds they imply are tight: max over the hull of c + b = 1.
        let max_f = got.lp(&[qz(), qone(), qone()], Sense::Max);
        assert_eq!(max_f.value(), Some(&qone()));
    }

    #[test]
    fn layer_graph_hull_matches_relu_graph_hull_on_single_relu() {
        let mut p = HPolytope::universe(2);
        p.push_le(&[qi(-1), qi(-1)], &qi(0));
        p.push_le(&[qi(1), qi(1)], &qi(1));
        p.push_le(&[qz(), -qone()], &qz());
        p.push_le(&[qz(), qone()], &qone());
        let sub = Network::new(2, vec![Layer::Relu(2)]).unwrap();
        let via_layer = layer_graph_hull(&sub, &p, &Caps::default()).unwrap();
        let via_relu = relu_graph_hull(&p, &[0, 1], &Caps::default()).unwrap();
        assert!(hp_equal(&via_layer, &via_relu).unwrap());
    }

    #[test]
    fn layer_graph_hull_of_affine_layer_is_equalities() {
        let p = HPolytope::unit_box(2);
        let a = affine(&[&[1, 2], &[0, -1]], &[1, 0]);
        let sub = Network::new(2, vec![Layer::Affine(a.clone())]).unwrap();
        let got = layer_graph_hull(&sub, &p, &Caps::default()).unwrap();
        let mut expect = HPolytope::universe(4);
        for (a_, b) in &p.rows {
            let mut row: Vec<Q> = a_.iter().map(|c| Q::from_integer(c.clone())).collect();
            row.extend([qz(), qz()]);
            expect.push_le(&row, &Q::from_integer(b.clone()));
        }
        for (c, (row, bias)) in a.weights.iter().zip(&a.bias).enumerate() {
            let mut coeffs: Vec<Q> = row.clone();
            coeffs.extend((0..2).map(|j| if j == c { -qone() } else { qz() }));
            expect.push_eq(&coeffs, &-bias.clone());
        }
        assert!(hp_equal(&got, &expect).unwrap());
    }
}
