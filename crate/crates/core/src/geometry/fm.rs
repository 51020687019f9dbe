//! Fourier-Motzkin variable elimination on integer constraint rows.
//!
//! Equalities are eliminated by exact substitution first; genuine
//! Fourier-Motzkin combination only runs on the inequality residue. After
//! each elimination step, rows implied by a single other row (same primitive
//! direction, weaker offset) are dropped. No full redundancy elimination:
//! the point set is exact either way.

use super::system::{Block, ConstraintSystem, LinRow, Rel};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::HashMap;

/// A canonical unsatisfiable row marking an empty feasible set.
fn false_row(dim: usize, tag: &str) -> LinRow {
    LinRow {
        coeffs: vec![BigInt::zero(); dim],
        rel: Rel::Le,
        rhs: BigInt::from(-1),
        tag: tag.to_string(),
    }
}

/// Keeps the tightest representative per direction; detects emptiness.
fn prune(rows: Vec<LinRow>, dim: usize) -> Vec<LinRow> {
    let mut le: HashMap<Vec<BigInt>, LinRow> = HashMap::new();
    let mut eq: HashMap<Vec<BigInt>, LinRow> = HashMap::new();
    for row in rows {
        match row.triviality() {
            Some(true) => continue,
            Some(false) => return vec![false_row(dim, &row.tag)],
            None => {}
        }
        match row.rel {
            Rel::Le => match le.get_mut(&row.coeffs) {
                Some(kept) => {
                    if row.rhs < kept.rhs {
                        *kept = row;
                    }
                }
                None => {
                    le.insert(row.coeffs.clone(), row);
                }
            },
            Rel::Eq => match eq.get(&row.coeffs) {
                Some(kept) => {
                    if kept.rhs != row.rhs {
                        return vec![false_row(dim, &row.tag)];
                    }
                }
                None => {
                    eq.insert(row.coeffs.clone(), row);
                }
            },
        }
    }
    // An equality subsumes parallel inequalities it satisfies (and refutes
    // the ones it does not).
    let mut out: Vec<LinRow> = Vec::new();
    for (_, row) in eq {
        if let Some(ineq) = le.get(&row.coeffs) {
            if row.rhs > ineq.rhs {
                return vec![false_row(dim, &row.tag)];
            }
        }
        let neg: Vec<BigInt> = row.coeffs.iter().map(|c| -c).collect();
        if let Some(ineq) = le.get(&neg) {
            if -&row.rhs > ineq.rhs {
                return vec![false_row(dim, &row.tag)];
            }
        }
        le.remove(&row.coeffs);
        le.remove(&neg);
        out.push(row);
    }
    out.extend(le.into_values());
    out.sort_by(|a, b| (&a.coeffs, &a.rhs).cmp(&(&b.coeffs, &b.rhs)));
    out
}

fn eliminate_one(rows: Vec<LinRow>, var: usize, dim: usize) -> Vec<LinRow> {
    // Exact substitution through an equality when one mentions the variable.
    if let Some(pos) = rows
        .iter()
        .position(|r| r.rel == Rel::Eq && !r.coeffs[var].is_zero())
    {
        let pivot = rows[pos].clone();
        let pv = pivot.coeffs[var].clone();
        let pv_abs = pv.abs();
        let pv_sign = if pv.is_negative() { -1 } else { 1 };
        let mut out = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if i == pos {
                continue;
            }
            let rv = row.coeffs[var].clone();
            if rv.is_zero() {
                out.push(row);
                continue;
            }
            let k2 = &rv * BigInt::from(pv_sign);
            let mut coeffs = Vec::with_capacity(dim);
            for j in 0..dim {
                coeffs.push(&row.coeffs[j] * &pv_abs - &k2 * &pivot.coeffs[j]);
            }
            let rhs = &row.rhs * &pv_abs - &k2 * &pivot.rhs;
            let mut new = LinRow {
                coeffs,
                rel: row.rel,
                rhs,
                tag: row.tag,
            };
            new.reduce();
            out.push(new);
        }
        return prune(out, dim);
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Vec::new();
    for row in rows {
        match row.coeffs[var].sign() {
            num_bigint::Sign::Plus => pos.push(row),
            num_bigint::Sign::Minus => neg.push(row),
            num_bigint::Sign::NoSign => out.push(row),
        }
    }
    for p in &pos {
        for n in &neg {
            let kp = -&n.coeffs[var];
            let kn = p.coeffs[var].clone();
            let mut coeffs = Vec::with_capacity(dim);
            for j in 0..dim {
                coeffs.push(&kp * &p.coeffs[j] + &kn * &n.coeffs[j]);
            }
            let rhs = &kp * &p.rhs + &kn * &n.rhs;
            let mut new = LinRow {
                coeffs,
                rel: Rel::Le,
                rhs,
                tag: format!("fm({},{})", p.tag, n.tag),
            };
            new.reduce();
            out.push(new);
        }
    }
    prune(out, dim)
}

/// Eliminates the given variables; the result is over the same index space
/// with zero coefficients at the eliminated positions.
pub fn eliminate(rows: &[LinRow], dim: usize, eliminate: &[usize]) -> Vec<LinRow> {
    let mut rows = prune(rows.to_vec(), dim);
    let mut remaining: Vec<usize> = eliminate.to_vec();
    while !remaining.is_empty() {
        // Cheapest variable first: equality substitutions are free, otherwise
        // minimize the product of positive and negative occurrences.
        let (slot, _) = remaining
            .iter()
            .enumerate()
            .map(|(slot, &v)| {
                let has_eq = rows
                    .iter()
                    .any(|r| r.rel == Rel::Eq && !r.coeffs[v].is_zero());
                if has_eq {
                    return (slot, 0usize);
                }
                let p = rows.iter().filter(|r| r.coeffs[v].is_positive()).count();
                let n = rows.iter().filter(|r| r.coeffs[v].is_negative()).count();
                (slot, 1 + p * n)
            })
            .min_by_key(|&(_, cost)| cost)
            .unwrap();
        let var = remaining.swap_remove(slot);
        rows = eliminate_one(rows, var, dim);
    }
    rows
}

/// Exact projection of the feasible set onto a subset of blocks.
pub fn project(system: &ConstraintSystem, keep: &[&str]) -> Result<ConstraintSystem> {
    if keep.is_empty() {
        return Err(Error::Invalid("projection onto no blocks".into()));
    }
    let mut kept_blocks: Vec<&Block> = Vec::new();
    for name in keep {
        let idx = system
            .block_index(name)
            .ok_or_else(|| Error::Invalid(format!("unknown block {name}")))?;
        kept_blocks.push(system.block(idx));
    }
    let keep_vars: Vec<usize> = kept_blocks
        .iter()
        .flat_map(|b| b.offset..b.offset + b.dim)
        .collect();
    let dim = system.total_dim();
    let drop_vars: Vec<usize> = (0..dim).filter(|v| !keep_vars.contains(v)).collect();
    let rows = eliminate(&system.rows, dim, &drop_vars);

    let mut out = ConstraintSystem::new();
    for b in &kept_blocks {
        out.declare_block(&b.name, b.dim);
    }
    for row in rows {
        let coeffs: Vec<BigInt> = keep_vars.iter().map(|&v| row.coeffs[v].clone()).collect();
        out.add_row(LinRow {
            coeffs,
            rel: row.rel,
            rhs: row.rhs,
            tag: row.tag,
        });
    }
    Ok(out)
}
