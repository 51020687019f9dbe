//! Half-space and vertex representations of convex polytopes.

use super::lp::{self, LpOutcome, Sense};
use super::system::{LinRow, Rel};
use crate::rat::{qz, Q};
use crate::{Caps, Error, Result};
use itertools::Itertools;
use num_bigint::BigInt;


/// `{x : A x <= b}` with rows in primitive integer form. Equalities are
/// stored as paired opposite inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolytope {
    pub dim: usize,
    pub rows: Vec<(Vec<BigInt>, BigInt)>,
}

/// Finite vertex list; non-empty by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VPolytope {
    pub dim: usize,
    pub points: Vec<Vec<Q>>,
}

impl HPolytope {
    pub fn universe(dim: usize) -> Self {
        HPolytope { dim, rows: vec![] }
    }

    pub fn push_le(&mut self, coeffs: &[Q], rhs: &Q) {
        assert_eq!(coeffs.len(), self.dim);
        let row = LinRow::from_rational(coeffs, Rel::Le, rhs, "");
        if row.triviality() != Some(true) {
            self.rows.push((row.coeffs, row.rhs));
        }
    }

    pub fn push_eq(&mut self, coeffs: &[Q], rhs: &Q) {
        self.push_le(coeffs, rhs);
        let neg: Vec<Q> = coeffs.iter().map(|c| -c).collect();
        self.push_le(&neg, &-rhs.clone());
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(lo: &[Q], hi: &[Q]) -> Self {
        assert_eq!(lo.len(), hi.len());
        let dim = lo.len();
        let mut hp = HPolytope::universe(dim);
        for i in 0..dim {
            let mut row = vec![qz(); dim];
            row[i] = crate::rat::qone();
            hp.push_le(&row, &hi[i]);
            row[i] = -crate::rat::qone();
            hp.push_le(&row, &-lo[i].clone());
        }
        hp
    }

    /// The unit box `[0,1]^dim`.
    pub fn unit_box(dim: usize) -> Self {
        HPolytope::from_box(&vec![qz(); dim], &vec![crate::rat::qone(); dim])
    }

    pub fn to_lin_rows(&self, tag: &str) -> Vec<LinRow> {
        self.rows
            .iter()
            .map(|(a, b)| LinRow {
                coeffs: a.clone(),
                rel: Rel::Le,
                rhs: b.clone(),
                tag: tag.to_string(),
            })
            .collect()
    }

    pub fn contains(&self, point: &[Q]) -> bool {
        assert_eq!(point.len(), self.dim);
        self.rows.iter().all(|(a, b)| {
            let lhs: Q = a
                .iter()
                .zip(point)
                .map(|(c, x)| Q::from_integer(c.clone()) * x)
                .sum();
            lhs <= Q::from_integer(b.clone())
        })
    }

    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("intersect".into()));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(HPolytope {
            dim: self.dim,
            rows,
        })
    }

    pub fn is_empty(&self) -> bool {
        lp::feasible_point(&self.to_lin_rows(""), self.dim).is_none()
    }

    pub fn lp(&self, objective: &[Q], sense: Sense) -> LpOutcome {
        lp::solve(&self.to_lin_rows(""), self.dim, objective, sense)
    }

    /// Exact per-coordinate interval hull.
    pub fn bounding_box(&self) -> Result<(Vec<Q>, Vec<Q>)> {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut obj = vec![qz(); self.dim];
            obj[i] = crate::rat::qone();
            match self.lp(&obj, Sense::Min) {
                LpOutcome::Optimal { value, .. } => lo.push(value),
                LpOutcome::Infeasible => return Err(Error::Empty),
                LpOutcome::Unbounded => return Err(Error::Unbounded),
            }
            match self.lp(&obj, Sense::Max) {
                LpOutcome::Optimal { value, .. } => hi.push(value),
                LpOutcome::Infeasible => return Err(Error::Empty),
                LpOutcome::Unbounded => return Err(Error::Unbounded),
            }
        }
        Ok((lo, hi))
    }

    /// Exactly the extreme points, by exhaustive basis enumeration with
    /// feasibility filtering. Rejects ambient dimensions above the cap.
    pub fn vertices(&self, caps: &Caps) -> Result<VPolytope> {
        if self.dim > caps.geometry {
            return Err(Error::CapExceeded {
                what: "vertex enumeration",
                need: self.dim,
                cap: caps.geometry,
            });
        }
        // Emptiness and boundedness are decided first; the bounding box also
        // witnesses unboundedness.
        let _ = self.bounding_box()?;
        if self.dim == 0 {
            return Ok(VPolytope {
                dim: 0,
                points: vec![vec![]],
            });
        }
        let mut points: Vec<Vec<Q>> = Vec::new();
        for active in (0..self.rows.len()).combinations(self.dim) {
            let rows_q: Vec<Vec<Q>> = active
                .iter()
                .map(|&i| {
                    self.rows[i]
                        .0
                        .iter()
                        .map(|c| Q::from_integer(c.clone()))
                        .collect()
                })
                .collect();
            let rhs_q: Vec<Q> = active
                .iter()
                .map(|&i| Q::from_integer(self.rows[i].1.clone()))
                .collect();
            let Some(x) = crate::linalg::solve_square(&rows_q, &rhs_q) else {
                continue;
            };
            if self.contains(&x) && !points.contains(&x) {
                points.push(x);
            }
        }
        if points.is_empty() {
            // Possible only for row counts below the dimension.
            return Err(Error::Degenerate(
                "feasible but no basic solutions; polytope has no vertices".into(),
            ));
        }
        points.sort();
        Ok(VPolytope {
            dim: self.dim,
            points,
        })
    }
}

impl VPolytope {
    pub fn new(dim: usize, points: Vec<Vec<Q>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty);
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("vertex list".into()));
        }
        Ok(VPolytope { dim, points })
    }

    pub fn dedup(&mut self) {
        self.points.sort();
        self.points.dedup();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    #[test]
    fn unit_box_vertices() {
        let hp = HPolytope::unit_box(2);
        let v = hp.vertices(&Caps::default()).unwrap();
        let expect = vec![
            vec![qi(0), qi(0)],
            vec![qi(0), qi(1)],
            vec![qi(1), qi(0)],
            vec![qi(1), qi(1)],
        ];
        assert_eq!(v.points, expect);
    }

    #[test]
    fn image_simplex_vertices() {
        // {u1 >= 0, u2 >= 0, u1 + u2 <= 1}
        let mut hp = HPolytope::universe(2);
        hp.push_le(&[qi(-1), qi(0)], &qi(0));
        hp.push_le(&[qi(0), qi(-1)], &qi(0));
        hp.push_le(&[qi(1), qi(1)], &qi(1));
        let v = hp.vertices(&Caps::default()).unwrap();
        assert_eq!(
            v.points,
            vec![
                vec![qi(0), qi(0)],
                vec![qi(0), qi(1)],
                vec![qi(1), qi(0)]
            ]
        );
    }

    #[test]
    fn vertex_enumeration_rejects_unbounded_and_empty() {
        let mut half = HPolytope::universe(1);
        half.push_le(&[qi(-1)], &qi(0));
        assert_eq!(half.vertices(&Caps::default()), Err(Error::Unbounded));
        let mut empty = HPolytope::universe(1);
        empty.push_le(&[qi(1)], &qi(-1));
        empty.push_le(&[qi(-1)], &qi(0));
        assert_eq!(empty.vertices(&Caps::default()), Err(Error::Empty));
        assert!(empty.is_empty());
    }

    #[test]
    fn degenerate_equality_polytope_has_vertices() {
        // Segment x + y = 1, 0 <= x <= 1 embedded in the plane.
        let mut hp = HPolytope::universe(2);
        hp.push_eq(&[qi(1), qi(1)], &qi(1));
        hp.push_le(&[qi(-1), qi(0)], &qi(0));
        hp.push_le(&[qi(1), qi(0)], &qi(1));
        let v = hp.vertices(&Caps::default()).unwrap();
        assert_eq!(v.points, vec![vec![qi(0), qi(1)], vec![qi(1), qi(0)]]);
        let (lo, hi) = hp.bounding_box().unwrap();
        assert_eq!(lo, vec![qi(0), qi(0)]);
        assert_eq!(hi, vec![qi(1), qi(1)]);
    }

    #[test]
    fn cap_is_enforced() {
        let hp = HPolytope::unit_box(7);
        match hp.vertices(&Caps::default()) {
            Err(Error::CapExceeded { need, cap, .. }) => {
                assert_eq!((need, cap), (7, 6));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
        assert!(hp.vertices(&Caps::uniform(8)).is_ok());
    }

    #[test]
    fn contains_and_intersect() {
        let a = HPolytope::unit_box(2);
        let b = HPolytope::from_box(&[q(1, 2), q(1, 2)], &[qi(2), qi(2)]);
        let c = a.intersect(&b).unwrap();
        assert!(c.contains(&[q(3, 4), q(3, 4)]));
        assert!(!c.contains(&[q(1, 4), q(3, 4)]));
        assert!(!c.is_empty());
    }
}
