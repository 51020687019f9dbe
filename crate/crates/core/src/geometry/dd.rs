//! Incremental vertex enumeration for bounded H-polytopes, double-description
//! style, in homogeneous integer arithmetic.
//!
//! Used by the hull machinery (polar duality turns facet enumeration into
//! vertex enumeration). Starts from the bounding box and inserts one
//! half-space at a time; candidate points come from (strictly-inside,
//! strictly-outside) vertex pairs and survive only if their active rows have
//! full rank, which is an exact vertex certificate even under degeneracy.

use super::polytope::HPolytope;
use crate::linalg::rank_int;
use crate::rat::Q;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Vertex as a homogeneous integer point `coords / denom`, `denom > 0`.
#[derive(Clone, Debug)]
struct HomPoint {
    coords: Vec<BigInt>,
    denom: BigInt,
}

impl HomPoint {
    fn from_rational(point: &[Q]) -> HomPoint {
        let mut denom = BigInt::from(1);
        for c in point {
            denom = denom.lcm(c.denom());
        }
        let coords = point
            .iter()
            .map(|c| c.numer() * (&denom / c.denom()))
            .collect();
        HomPoint { coords, denom }
    }

    fn reduce(&mut self) {
        let mut g = self.denom.clone();
        for c in &self.coords {
            g = g.gcd(c);
        }
        if !g.is_zero() && g != BigInt::from(1) {
            for c in self.coords.iter_mut() {
                *c = &*c / &g;
            }
            self.denom = &self.denom / &g;
        }
    }

    fn to_rational(&self) -> Vec<Q> {
        self.coords
            .iter()
            .map(|c| Q::new(c.clone(), self.denom.clone()))
            .collect()
    }

    /// Sign of `a . x - b` for the point `x = coords / denom`.
    fn eval(&self, a: &[BigInt], b: &BigInt) -> BigInt {
        let dot: BigInt = a.iter().zip(&self.coords).map(|(u, v)| u * v).sum();
        dot - b * &self.denom
    }
}

struct Vertex {
    point: HomPoint,
    active: Vec<usize>,
}

/// All vertices of a bounded non-empty H-polytope. The caller guarantees
/// boundedness; emptiness yields an empty vector.
pub(crate) fn vertices_bounded(hp: &HPolytope) -> Vec<Vec<Q>> {
    let dim = hp.dim;
    let Ok((lo, hi)) = hp.bounding_box() else {
        return Vec::new();
    };
    // Row list: 2*dim box rows first, then the polytope's own rows.
    let mut rows: Vec<(Vec<BigInt>, BigInt)> = Vec::new();
    {
        let mut box_hp = HPolytope::from_box(&lo, &hi);
        rows.append(&mut box_hp.rows);
    }
    let own_start = rows.len();
    rows.extend(hp.rows.iter().cloned());

    let mut vertices: Vec<Vertex> = Vec::new();
    for corner in 0..(1usize << dim) {
        let point: Vec<Q> = (0..dim)
            .map(|i| {
                if corner >> i & 1 == 1 {
                    hi[i].clone()
                } else {
                    lo[i].clone()
                }
            })
            .collect();
        let mut hom = HomPoint::from_rational(&point);
        hom.reduce();
        let active: Vec<usize> = (0..own_start)
            .filter(|&r| hom.eval(&rows[r].0, &rows[r].1).is_zero())
            .collect();
        if rank_active(&rows, &active, dim) == dim {
            push_unique(&mut vertices, hom, active);
        }
    }

    for r in own_start..rows.len() {
        let (a, b) = rows[r].clone();
        let signs: Vec<BigInt> = vertices.iter().map(|v| v.point.eval(&a, &b)).collect();
        if signs.iter().all(|s| !s.is_positive()) {
            for (v, s) in vertices.iter_mut().zip(&signs) {
                if s.is_zero() {
                    v.active.push(r);
                }
            }
            continue;
        }
        let ins: Vec<usize> = (0..vertices.len())
            .filter(|&i| signs[i].is_negative())
            .collect();
        let ons: Vec<usize> = (0..vertices.len())
            .filter(|&i| signs[i].is_zero())
            .collect();
        let outs: Vec<usize> = (0..vertices.len())
            .filter(|&i| signs[i].is_positive())
            .collect();

        let mut next: Vec<Vertex> = Vec::new();
        for &i in ins.iter().chain(&ons) {
            let mut v = Vertex {
                point: vertices[i].point.clone(),
                active: vertices[i].active.clone(),
            };
            if signs[i].is_zero() {
                v.active.push(r);
            }
            next.push(v);
        }
        for &i in &ins {
            for &o in &outs {
                // A new vertex lies on an edge, so its endpoints share at
                // least dim-1 active rows.
                let shared = shared_count(&vertices[i].active, &vertices[o].active);
                if dim >= 1 && shared + 1 < dim {
                    continue;
                }
                let si = &signs[i];
                let so = &signs[o];
                let mut coords = Vec::with_capacity(dim);
                for j in 0..dim {
                    coords.push(so * &vertices[i].point.coords[j] - si * &vertices[o].point.coords[j]);
                }
                let denom = so * &vertices[i].point.denom - si * &vertices[o].point.denom;
                let mut hom = HomPoint { coords, denom };
                hom.reduce();
                let active: Vec<usize> = (0..=r)
                    .filter(|&k| hom.eval(&rows[k].0, &rows[k].1).is_zero())
                    .collect();
                if rank_active(&rows, &active, dim) == dim {
                    push_unique(&mut next, hom, active);
                }
            }
        }
        vertices = next;
        if vertices.is_empty() {
            return Vec::new();
        }
    }
    vertices.iter().map(|v| v.point.to_rational()).collect()
}

fn rank_active(rows: &[(Vec<BigInt>, BigInt)], active: &[usize], dim: usize) -> usize {
    if active.len() < dim {
        return 0;
    }
    let m: Vec<Vec<BigInt>> = active.iter().map(|&r| rows[r].0.clone()).collect();
    rank_int(&m).min(dim)
}

fn shared_count(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

fn push_unique(vertices: &mut Vec<Vertex>, point: HomPoint, active: Vec<usize>) {
    if vertices
        .iter()
        .any(|v| v.point.coords == point.coords && v.point.denom == point.denom)
    {
        return;
    }
    vertices.push(Vertex { point, active });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};
    use crate::Caps;

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut hp = HPolytope::universe(3);
        hp.push_le(&[qi(-1), qi(0), qi(0)], &qi(0));
        hp.push_le(&[qi(0), qi(-1), qi(0)], &qi(0));
        hp.push_le(&[qi(0), qi(0), qi(-1)], &qi(0));
        hp.push_le(&[qi(1), qi(1), qi(1)], &qi(1));
        hp.push_le(&[qi(1), qi(2), qi(0)], &q(3, 2));
        let mut dd: Vec<Vec<Q>> = vertices_bounded(&hp);
        dd.sort();
        let mut exhaustive = hp.vertices(&Caps::default()).unwrap().points;
        exhaustive.sort();
        assert_eq!(dd, exhaustive);
    }

    #[test]
    fn cut_square() {
        let mut hp = HPolytope::unit_box(2);
        hp.push_le(&[qi(1), qi(1)], &q(3, 2));
        let mut got = vertices_bounded(&hp);
        got.sort();
        let expect = vec![
            vec![qi(0), qi(0)],
            vec![qi(0), qi(1)],
            vec![q(1, 2), qi(1)],
            vec![qi(1), q(1, 2)],
            vec![qi(1), qi(0)],
        ];
        let mut expect = expect;
        expect.sort();
        assert_eq!(got, expect);
    }
}
