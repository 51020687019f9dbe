//! Affine (in)equality systems over named variable blocks.
//!
//! Rows are kept in primitive integer form: multiplying a row by the lcm of
//! its denominators and dividing by the gcd of the result changes nothing
//! semantically and keeps Fourier-Motzkin and the simplex fast.

use crate::rat::{qz, Q};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
}

/// One affine constraint `coeffs . x REL rhs` in primitive integer form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinRow {
    pub coeffs: Vec<BigInt>,
    pub rel: Rel,
    pub rhs: BigInt,
    /// Which layer / relaxation emitted the row.
    pub tag: String,
}

impl LinRow {
    pub fn from_rational(coeffs: &[Q], rel: Rel, rhs: &Q, tag: &str) -> LinRow {
        let mut lcm = rhs.denom().clone();
        for c in coeffs {
            lcm = lcm.lcm(c.denom());
        }
        let scale = |v: &Q| -> BigInt {
            let s = v * Q::from_integer(lcm.clone());
            debug_assert!(s.denom().is_one());
            s.numer().clone()
        };
        let mut row = LinRow {
            coeffs: coeffs.iter().map(scale).collect(),
            rel,
            rhs: scale(rhs),
            tag: tag.to_string(),
        };
        row.reduce();
        row
    }

    /// Divide through by the gcd; for equalities also canonicalize the sign.
    pub fn reduce(&mut self) {
        let mut g = self.rhs.clone().abs();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        if !g.is_zero() && !g.is_one() {
            for c in self.coeffs.iter_mut() {
                *c = &*c / &g;
            }
            self.rhs = &self.rhs / &g;
        }
        if self.rel == Rel::Eq {
            let lead = self
                .coeffs
                .iter()
                .find(|c| !c.is_zero())
                .cloned()
                .unwrap_or_else(|| self.rhs.clone());
            if lead.is_negative() {
                for c in self.coeffs.iter_mut() {
                    *c = -&*c;
                }
                self.rhs = -&self.rhs;
            }
        }
    }

    pub fn is_zero_row(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Trivially true (drop) vs unsatisfiable (whole system empty).
    pub fn triviality(&self) -> Option<bool> {
        if !self.is_zero_row() {
            return None;
        }
        Some(match self.rel {
            Rel::Le => !self.rhs.is_negative(),
            Rel::Eq => self.rhs.is_zero(),
        })
    }

    pub fn eval_lhs(&self, point: &[Q]) -> Q {
        self.coeffs
            .iter()
            .zip(point)
            .map(|(c, x)| Q::from_integer(c.clone()) * x)
            .sum()
    }

    pub fn satisfied_by(&self, point: &[Q]) -> bool {
        let lhs = self.eval_lhs(point);
        let rhs = Q::from_integer(self.rhs.clone());
        match self.rel {
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
        }
    }

    /// Active means satisfied with equality.
    pub fn active_at(&self, point: &[Q]) -> bool {
        self.eval_lhs(point) == Q::from_integer(self.rhs.clone())
    }

    fn pad_to(&mut self, dim: usize) {
        self.coeffs.resize(dim, BigInt::zero());
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub dim: usize,
    pub offset: usize,
}

/// Affine constraints over the concatenation of named variable blocks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub blocks: Vec<Block>,
    pub rows: Vec<LinRow>,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.last().map(|b| b.offset + b.dim).unwrap_or(0)
    }

    pub fn declare_block(&mut self, name: &str, dim: usize) -> usize {
        assert!(
            self.block_index(name).is_none(),
            "block {name} declared twice"
        );
        let offset = self.total_dim();
        self.blocks.push(Block {
            name: name.to_string(),
            dim,
            offset,
        });
        let new_dim = self.total_dim();
        for row in self.rows.iter_mut() {
            row.pad_to(new_dim);
        }
        self.blocks.len() - 1
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    pub fn block(&self, idx: usize) -> &Block {
        &self.blocks[idx]
    }

    /// Global variable index of coordinate `coord` in block `idx`.
    pub fn var(&self, idx: usize, coord: usize) -> usize {
        let b = &self.blocks[idx];
        assert!(coord < b.dim);
        b.offset + coord
    }

    pub fn block_vars(&self, idx: usize) -> std::ops::Range<usize> {
        let b = &self.blocks[idx];
        b.offset..b.offset + b.dim
    }

    /// Adds a row given as sparse rational terms on global variable indices.
    pub fn add_sparse(&mut self, terms: &[(usize, Q)], rel: Rel, rhs: Q, tag: &str) {
        let mut coeffs = vec![qz(); self.total_dim()];
        for (idx, c) in terms {
            coeffs[*idx] += c;
        }
        self.add_dense(&coeffs, rel, &rhs, tag);
    }

    pub fn add_dense(&mut self, coeffs: &[Q], rel: Rel, rhs: &Q, tag: &str) {
        assert_eq!(coeffs.len(), self.total_dim());
        let row = LinRow::from_rational(coeffs, rel, rhs, tag);
        match row.triviality() {
            Some(true) => {}
            _ => self.rows.push(row),
        }
    }

    pub fn add_row(&mut self, row: LinRow) {
        assert_eq!(row.coeffs.len(), self.total_dim());
        match row.triviality() {
            Some(true) => {}
            _ => self.rows.push(row),
        }
    }

    /// Conjunction with a system over the identical block layout.
    pub fn conjoin(&mut self, other: &ConstraintSystem) -> Result<()> {
        if self.blocks != other.blocks {
            return Err(Error::DimensionMismatch(
                "conjunction requires identical blocks".into(),
            ));
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    /// Embeds H-polytope rows using `vars[i]` as the polytope's coordinate `i`.
    /// Opposite inequality pairs are merged back into equality rows.
    pub fn add_hpolytope(&mut self, hp: &super::HPolytope, vars: &[usize], tag: &str) {
        assert_eq!(hp.dim, vars.len());
        let dim = self.total_dim();
        let mut pending: Vec<LinRow> = Vec::new();
        for (a, b) in &hp.rows {
            let mut coeffs = vec![BigInt::zero(); dim];
            for (i, c) in a.iter().enumerate() {
                coeffs[vars[i]] = c.clone();
            }
            let mut row = LinRow {
                coeffs,
                rel: Rel::Le,
                rhs: b.clone(),
                tag: tag.to_string(),
            };
            row.reduce();
            if row.triviality() == Some(true) {
                continue;
            }
            pending.push(row);
        }
        let mut used = vec![false; pending.len()];
        for i in 0..pending.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut row = pending[i].clone();
            for j in i + 1..pending.len() {
                if used[j] {
                    continue;
                }
                let negated: Vec<BigInt> = pending[j].coeffs.iter().map(|c| -c).collect();
                if row.coeffs == negated && row.rhs == -&pending[j].rhs {
                    used[j] = true;
                    row.rel = Rel::Eq;
                    row.reduce();
                    break;
                }
            }
            self.rows.push(row);
        }
    }

    /// The feasible set as a plain H-polytope over the concatenated variables.
    pub fn to_hpolytope(&self) -> super::HPolytope {
        let mut rows = Vec::new();
        for r in &self.rows {
            rows.push((r.coeffs.clone(), r.rhs.clone()));
            if r.rel == Rel::Eq {
                let neg: Vec<BigInt> = r.coeffs.iter().map(|c| -c).collect();
                rows.push((neg, -&r.rhs));
            }
        }
        super::HPolytope {
            dim: self.total_dim(),
            rows,
        }
    }

    pub fn satisfied_by(&self, point: &[Q]) -> bool {
        self.rows.iter().all(|r| r.satisfied_by(point))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn rows_normalize_to_primitive_integers() {
        let row = LinRow::from_rational(&[q(1, 2), q(1, 3)], Rel::Le, &q(5, 6), "t");
        assert_eq!(row.coeffs, vec![BigInt::from(3), BigInt::from(2)]);
        assert_eq!(row.rhs, BigInt::from(5));
    }

    #[test]
    fn equality_sign_is_canonical() {
        let a = LinRow::from_rational(&[q(-2, 1), q(4, 1)], Rel::Eq, &q(-6, 1), "t");
        let b = LinRow::from_rational(&[q(1, 1), q(-2, 1)], Rel::Eq, &q(3, 1), "t");
        assert_eq!(a.coeffs, b.coeffs);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn blocks_pad_existing_rows() {
        let mut sys = ConstraintSystem::new();
        let x = sys.declare_block("x", 2);
        sys.add_sparse(&[(sys.var(x, 0), q(1, 1))], Rel::Le, q(1, 1), "c0");
        sys.declare_block("y", 1);
        assert_eq!(sys.rows[0].coeffs.len(), 3);
        assert_eq!(sys.total_dim(), 3);
    }
}
