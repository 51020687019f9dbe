//! Exact rational polyhedral kernel: LP, projection, vertex enumeration,
//! hulls, and representation conversion.

pub mod fm;
pub mod hull;
pub mod lp;
pub mod polytope;
pub mod system;

mod dd;

pub use hull::{convex_union, hp_equal, hp_subset, hull, implies_row};
pub use lp::{LpOutcome, Sense};
pub use polytope::{HPolytope, VPolytope};
pub use system::{Block, ConstraintSystem, LinRow, Rel};

use crate::rat::{qz, Q};
use crate::Result;

impl ConstraintSystem {
    /// Exact optimum of a linear functional over one block.
    pub fn lp_block(&self, block: &str, objective: &[Q], sense: Sense) -> Result<LpOutcome> {
        let idx = self
            .block_index(block)
            .ok_or_else(|| crate::Error::Invalid(format!("unknown block {block}")))?;
        if objective.len() != self.block(idx).dim {
            return Err(crate::Error::DimensionMismatch(
                "objective length vs block dimension".into(),
            ));
        }
        let mut dense = vec![qz(); self.total_dim()];
        for (coord, c) in objective.iter().enumerate() {
            dense[self.var(idx, coord)] = c.clone();
        }
        Ok(lp::solve(&self.rows, self.total_dim(), &dense, sense))
    }

    /// Optimum of a single variable.
    pub fn lp_var(&self, var: usize, sense: Sense) -> LpOutcome {
        let mut dense = vec![qz(); self.total_dim()];
        dense[var] = crate::rat::qone();
        lp::solve(&self.rows, self.total_dim(), &dense, sense)
    }

    pub fn is_feasible(&self) -> bool {
        lp::feasible_point(&self.rows, self.total_dim()).is_some()
    }

    /// Exact projection onto a subset of blocks (Fourier-Motzkin).
    pub fn project(&self, keep: &[&str]) -> Result<ConstraintSystem> {
        fm::project(self, keep)
    }

    /// Projection onto one block, as a plain H-polytope.
    pub fn project_to_hpolytope(&self, block: &str) -> Result<HPolytope> {
        Ok(self.project(&[block])?.to_hpolytope())
    }

    /// System whose single block is constrained to the given polytope.
    pub fn from_hpolytope(name: &str, hp: &HPolytope, tag: &str) -> ConstraintSystem {
        let mut sys = ConstraintSystem::new();
        let b = sys.declare_block(name, hp.dim);
        let vars: Vec<usize> = sys.block_vars(b).collect();
        sys.add_hpolytope(hp, &vars, tag);
        sys
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};
    use crate::Caps;

    /// x in [-1,1], y >= x, y >= 0, y <= (x+1)/2 over blocks x, y.
    fn triangle_system() -> ConstraintSystem {
        let mut sys = ConstraintSystem::new();
        let x = sys.declare_block("x", 1);
        let y = sys.declare_block("y", 1);
        let xv = sys.var(x, 0);
        let yv = sys.var(y, 0);
        sys.add_sparse(&[(xv, qi(-1))], Rel::Le, qi(1), "input");
        sys.add_sparse(&[(xv, qi(1))], Rel::Le, qi(1), "input");
        sys.add_sparse(&[(xv, qi(1)), (yv, qi(-1))], Rel::Le, qi(0), "triangle");
        sys.add_sparse(&[(yv, qi(-1))], Rel::Le, qi(0), "triangle");
        sys.add_sparse(&[(xv, q(-1, 2)), (yv, qi(1))], Rel::Le, q(1, 2), "triangle");
        sys
    }

    #[test]
    fn lp_optimize_examples() {
        let sys = triangle_system();
        let min_y = sys.lp_block("y", &[qi(1)], Sense::Min).unwrap();
        let max_y = sys.lp_block("y", &[qi(1)], Sense::Max).unwrap();
        assert_eq!(min_y.value(), Some(&qi(0)));
        assert_eq!(max_y.value(), Some(&qi(1)));
    }

    #[test]
    fn projection_correctness_against_lp_feasibility() {
        // q lies in the projection iff the system conjoined with {x = q}
        // is feasible; probed on a rational grid.
        let sys = triangle_system();
        let projected = sys.project(&["x"]).unwrap();
        let hp = projected.to_hpolytope();
        for num in -12..=12 {
            let probe = q(num, 8);
            let mut pinned = sys.clone();
            let xv = pinned.var(0, 0);
            pinned.add_sparse(&[(xv, qi(1))], Rel::Eq, probe.clone(), "pin");
            assert_eq!(hp.contains(&[probe]), pinned.is_feasible());
        }
    }

    #[test]
    fn lp_agrees_with_vertex_enumeration_on_random_systems() {
        // Brute-force oracle: the optimum of a linear functional over a
        // bounded polytope is attained at a vertex.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let dim = rng.gen_range(1..=3usize);
            let mut hp = HPolytope::from_box(&vec![qi(-2); dim], &vec![qi(2); dim]);
            for _ in 0..rng.gen_range(0..4usize) {
                let coeffs: Vec<Q> = (0..dim).map(|_| qi(rng.gen_range(-3..=3))).collect();
                hp.push_le(&coeffs, &qi(rng.gen_range(-1..=4)));
            }
            if hp.is_empty() {
                continue;
            }
            let objective: Vec<Q> = (0..dim).map(|_| q(rng.gen_range(-6..=6), 2)).collect();
            let vertices = hp.vertices(&Caps::default()).unwrap();
            let by_vertices = vertices
                .points
                .iter()
                .map(|p| crate::rat::dot(&objective, p))
                .min()
                .unwrap();
            let by_lp = hp.lp(&objective, Sense::Min);
            assert_eq!(by_lp.value(), Some(&by_vertices));
        }
    }

    #[test]
    fn hull_bound_extraction_matches_pointwise_extremes() {
        // For a finite set H and every coordinate, min over H equals the
        // LP minimum over hull(H).
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dim = rng.gen_range(1..=3usize);
            let count = rng.gen_range(1..=7usize);
            let points: Vec<Vec<Q>> = (0..count)
                .map(|_| (0..dim).map(|_| q(rng.gen_range(-8..=8), 2)).collect())
                .collect();
            let hp = hull(&points, dim, &Caps::default()).unwrap();
            for c in 0..dim {
                let mut obj = vec![qz(); dim];
                obj[c] = qi(1);
                let direct_min = points.iter().map(|p| p[c].clone()).min().unwrap();
                let direct_max = points.iter().map(|p| p[c].clone()).max().unwrap();
                assert_eq!(hp.lp(&obj, Sense::Min).value(), Some(&direct_min));
                assert_eq!(hp.lp(&obj, Sense::Max).value(), Some(&direct_max));
            }
        }
    }

    #[test]
    fn round_trip_on_random_polytopes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let dim = rng.gen_range(2..=4usize);
            let mut hp = HPolytope::from_box(&vec![qi(-1); dim], &vec![qi(1); dim]);
            for _ in 0..rng.gen_range(1..4usize) {
                let coeffs: Vec<Q> = (0..dim).map(|_| qi(rng.gen_range(-2..=2))).collect();
                hp.push_le(&coeffs, &qi(rng.gen_range(0..=2)));
            }
            if hp.is_empty() {
                continue;
            }
            let v = hp.vertices(&Caps::default()).unwrap();
            let back = hull(&v.points, dim, &Caps::default()).unwrap();
            assert!(hp_equal(&hp, &back).unwrap());
        }
    }
}
