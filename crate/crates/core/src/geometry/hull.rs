//! Convex hulls of finite rational point sets, as facet descriptions.
//!
//! The hull is computed in the intrinsic dimension: the affine hull is
//! extracted first (degenerate hulls produce equality constraints), points
//! are projected onto an independent coordinate subset, and facets of the
//! full-dimensional reduced hull come from the vertices of its polar dual.

use super::dd;
use super::polytope::{HPolytope, VPolytope};

use crate::linalg::{nullspace, rref};
use crate::rat::{dot, qone, qz, Q};
use crate::{Caps, Error, Result};
use num_traits::Zero;

/// Affine hull data of a point set.
struct AffineSpan {
    /// Independent coordinates; the point set projected onto them is
    /// full-dimensional of dimension `pivots.len()`.
    pivots: Vec<usize>,
    /// Equalities `normal . x = rhs` cutting out the affine hull.
    equalities: Vec<(Vec<Q>, Q)>,
}

fn affine_span(points: &[Vec<Q>], dim: usize) -> AffineSpan {
    let base = &points[0];
    if points.len() == 1 {
        let equalities = (0..dim)
            .map(|i| {
                let mut normal = vec![qz(); dim];
                normal[i] = qone();
                (normal, base[i].clone())
            })
            .collect();
        return AffineSpan {
            pivots: vec![],
            equalities,
        };
    }
    let diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let mut reduced = diffs.clone();
    let pivots = rref(&mut reduced);
    let equalities = nullspace(&diffs)
        .into_iter()
        .map(|normal| {
            let rhs = dot(&normal, base);
            (normal, rhs)
        })
        .collect();
    AffineSpan { pivots, equalities }
}

/// Facet description of the convex hull of `points`. The intrinsic dimension
/// (not the ambient one) is checked against the geometry cap.
pub fn hull(points: &[Vec<Q>], dim: usize, caps: &Caps) -> Result<HPolytope> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("hull points".into()));
    }
    let mut points: Vec<Vec<Q>> = points.to_vec();
    points.sort();
    points.dedup();

    let span = affine_span(&points, dim);
    let k = span.pivots.len();
    if k > caps.geometry {
        return Err(Error::CapExceeded {
            what: "hull",
            need: k,
            cap: caps.geometry,
        });
    }
    let mut out = HPolytope::universe(dim);
    for (normal, rhs) in &span.equalities {
        out.push_eq(normal, rhs);
    }
    if k == 0 {
        return Ok(out);
    }
    let reduced: Vec<Vec<Q>> = points
        .iter()
        .map(|p| span.pivots.iter().map(|&c| p[c].clone()).collect())
        .collect();
    let lift = |coeffs: &[Q], rhs: &Q, out: &mut HPolytope| {
        let mut full = vec![qz(); dim];
        for (i, &c) in span.pivots.iter().enumerate() {
            full[c] = coeffs[i].clone();
        }
        out.push_le(&full, rhs);
    };
    if k == 1 {
        let lo = reduced.iter().map(|p| p[0].clone()).min().unwrap();
        let hi = reduced.iter().map(|p| p[0].clone()).max().unwrap();
        lift(&[qone()], &hi, &mut out);
        lift(&[-qone()], &-lo, &mut out);
        return Ok(out);
    }
    // Polar dual around the centroid, an interior point of the reduced hull.
    let n = Q::from_integer(num_bigint::BigInt::from(points.len() as i64));
    let centroid: Vec<Q> = (0..k)
        .map(|c| reduced.iter().map(|p| &p[c]).sum::<Q>() / &n)
        .collect();
    let mut polar = HPolytope::universe(k);
    for p in &reduced {
        let q_dir: Vec<Q> = p.iter().zip(&centroid).map(|(a, b)| a - b).collect();
        if q_dir.iter().all(|v| v.is_zero()) {
            continue;
        }
        polar.push_le(&q_dir, &qone());
    }
    let polar_vertices = dd::vertices_bounded(&polar);
    debug_assert!(!polar_vertices.is_empty());
    for v in polar_vertices {
        // Facet v . (x - centroid) <= 1.
        let rhs = qone() + dot(&v, &centroid);
        lift(&v, &rhs, &mut out);
    }
    Ok(out)
}

/// Hull of the union of several vertex sets of equal ambient dimension.
pub fn convex_union(parts: &[VPolytope], caps: &Caps) -> Result<HPolytope> {
    let Some(first) = parts.first() else {
        return Err(Error::Empty);
    };
    let dim = first.dim;
    if parts.iter().any(|p| p.dim != dim) {
        return Err(Error::DimensionMismatch("convex_union parts".into()));
    }
    let points: Vec<Vec<Q>> = parts.iter().flat_map(|p| p.points.clone()).collect();
    hull(&points, dim, caps)
}

/// `inner` a subset of `outer`, decided exactly by per-facet LPs.
pub fn hp_subset(inner: &HPolytope, outer: &HPolytope) -> Result<bool> {
    if inner.dim != outer.dim {
        return Err(Error::DimensionMismatch("subset test".into()));
    }
    if inner.is_empty() {
        return Ok(true);
    }
    for (a, b) in &outer.rows {
        let obj: Vec<Q> = a.iter().map(|c| Q::from_integer(c.clone())).collect();
        match inner.lp(&obj, super::lp::Sense::Max) {
            super::lp::LpOutcome::Optimal { value, .. } => {
                if value > Q::from_integer(b.clone()) {
                    return Ok(false);
                }
            }
            super::lp::LpOutcome::Unbounded => return Ok(false),
            super::lp::LpOutcome::Infeasible => return Ok(true),
        }
    }
    Ok(true)
}

/// Point-set equality of two H-polytopes.
pub fn hp_equal(a: &HPolytope, b: &HPolytope) -> Result<bool> {
    Ok(hp_subset(a, b)? && hp_subset(b, a)?)
}

/// Rows of `template` that the hull `of` implies; used in tests asserting a
/// facet "is included" without pinning the facet normalization.
pub fn implies_row(hp: &HPolytope, coeffs: &[Q], rhs: &Q) -> bool {
    match hp.lp(coeffs, super::lp::Sense::Max) {
        super::lp::LpOutcome::Optimal { value, .. } => &value <= rhs,
        super::lp::LpOutcome::Infeasible => true,
        super::lp::LpOutcome::Unbounded => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    #[test]
    fn relu_triangle_from_three_points() {
        // Fig. 1: hull{(-1,0),(0,0),(1,1)} = {y >= 0, y >= x, y <= (x+1)/2}.
        let pts = vec![
            vec![qi(-1), qi(0)],
            vec![qi(0), qi(0)],
            vec![qi(1), qi(1)],
        ];
        let got = hull(&pts, 2, &Caps::default()).unwrap();
        let mut expect = HPolytope::universe(2);
        expect.push_le(&[qz(), -qone()], &qz());
        expect.push_le(&[qone(), -qone()], &qz());
        expect.push_le(&[q(-1, 2), qone()], &q(1, 2));
        assert!(hp_equal(&got, &expect).unwrap());
    }

    #[test]
    fn single_point_hull_is_equalities() {
        let got = hull(&[vec![q(3, 2), qi(-2)]], 2, &Caps::default()).unwrap();
        assert!(got.contains(&[q(3, 2), qi(-2)]));
        assert!(!got.contains(&[q(3, 2), qi(-1)]));
        assert!(!got.contains(&[qi(1), qi(-2)]));
        assert_eq!(got.rows.len(), 4);
    }

    #[test]
    fn union_of_three_pieces_contains_interior_point() {
        // The five extreme candidates of the pieced union; (1,1) must lie in
        // the hull of the union.
        let pts = vec![
            vec![qi(0), qi(0)],
            vec![qi(1), qi(0)],
            vec![qi(0), qi(1)],
            vec![qi(2), qi(0)],
            vec![qi(0), qi(2)],
        ];
        let got = hull(&pts, 2, &Caps::default()).unwrap();
        assert!(got.contains(&[qi(1), qi(1)]));
        assert!(!got.contains(&[q(3, 2), qi(1)]));
        let parts = vec![
            VPolytope::new(
                2,
                vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)], vec![qi(0), qi(1)]],
            )
            .unwrap(),
            VPolytope::new(2, vec![vec![qi(1), qi(0)], vec![qi(2), qi(0)]]).unwrap(),
            VPolytope::new(2, vec![vec![qi(0), qi(1)], vec![qi(0), qi(2)]]).unwrap(),
        ];
        let via_union = convex_union(&parts, &Caps::default()).unwrap();
        assert!(hp_equal(&got, &via_union).unwrap());
        let single = convex_union(&parts[..1], &Caps::default()).unwrap();
        let twice = convex_union(&[parts[0].clone(), parts[0].clone()], &Caps::default()).unwrap();
        assert!(hp_equal(&single, &twice).unwrap());
    }

    #[test]
    fn degenerate_segment_in_three_dimensions() {
        let pts = vec![
            vec![qi(0), qi(0), qi(1)],
            vec![qi(1), qi(1), qi(1)],
            vec![q(1, 2), q(1, 2), qi(1)],
        ];
        let got = hull(&pts, 3, &Caps::default()).unwrap();
        assert!(got.contains(&[q(1, 4), q(1, 4), qi(1)]));
        assert!(!got.contains(&[q(1, 4), q(1, 2), qi(1)]));
        assert!(!got.contains(&[q(1, 4), q(1, 4), q(9, 10)]));
        assert!(!got.contains(&[qi(2), qi(2), qi(1)]));
    }

    #[test]
    fn hull_of_vertices_round_trips() {
        let mut hp = HPolytope::universe(3);
        hp.push_le(&[qi(-1), qi(0), qi(0)], &qi(0));
        hp.push_le(&[qi(0), qi(-1), qi(0)], &qi(0));
        hp.push_le(&[qi(0), qi(0), qi(-1)], &qi(0));
        hp.push_le(&[qi(2), qi(1), qi(1)], &qi(2));
        let v = hp.vertices(&Caps::default()).unwrap();
        let back = hull(&v.points, 3, &Caps::default()).unwrap();
        assert!(hp_equal(&hp, &back).unwrap());
    }
}
