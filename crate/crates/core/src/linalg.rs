//! Small dense exact linear algebra: rational row reduction and a
//! fraction-free integer rank test. Matrices here are tiny (dimension <= 8-ish
//! columns), so clarity beats asymptotics.

use crate::rat::{qz, Q};
use num_bigint::BigInt;
use num_traits::Zero;

/// Reduced row echelon form in place; returns the pivot column per step.
pub fn rref(rows: &mut Vec<Vec<Q>>) -> Vec<usize> {
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let d = &f * &rows[r][j];
                    rows[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    pivots
}

pub fn rank_q(rows: &[Vec<Q>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Basis of {a : M a = 0} for the matrix with the given rows.
pub fn nullspace(rows: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let ncols = if rows.is_empty() { 0 } else { rows[0].len() };
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let mut basis = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![qz(); ncols];
        v[free] = crate::rat::qone();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[row][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Unique solution of the square rational system `rows * x = rhs`, or `None`
/// when the matrix is singular.
pub fn solve_square(rows: &[Vec<Q>], rhs: &[Q]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.len() != n || pivots.iter().any(|&c| c >= n) {
        return None;
    }
    let mut x = vec![qz(); n];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = m[row][n].clone();
    }
    Some(x)
}

/// Rank of an integer matrix, by division-free cross-multiplication with
/// per-row gcd reduction.
pub fn rank_int(rows: &[Vec<BigInt>]) -> usize {
    use num_integer::Integer;
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut m = rows.to_vec();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in r + 1..nrows {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in 0..ncols {
                m[i][j] = &m[i][j] * &pivot - &f * &m[r][j];
            }
            let mut g = BigInt::zero();
            for v in &m[i] {
                g = g.gcd(v);
            }
            if !g.is_zero() && g != BigInt::from(1) {
                for v in m[i].iter_mut() {
                    *v = &*v / &g;
                }
            }
        }
        r += 1;
    }
    r
}


/// Dimension of the affine hull of a point set.
pub fn affine_rank(points: &[Vec<Q>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    rank_q(&diffs)
}

/// Coordinate subset on which the point set's affine hull projects
/// bijectively (the pivot columns of the difference matrix).
pub fn affine_pivots(points: &[Vec<Q>]) -> Vec<usize> {
    if points.len() <= 1 {
        return Vec::new();
    }
    let base = &points[0];
    let mut diffs: Vec<Vec<Q>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    rref(&mut diffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    #[test]
    fn solves_square_systems() {
        let rows = vec![vec![qi(2), qi(1)], vec![qi(1), qi(-1)]];
        let x = solve_square(&rows, &[qi(5), qi(1)]).unwrap();
        assert_eq!(x, vec![qi(2), qi(1)]);
        let singular = vec![vec![qi(1), qi(2)], vec![qi(2), qi(4)]];
        assert!(solve_square(&singular, &[qi(1), qi(2)]).is_none());
    }

    #[test]
    fn nullspace_of_rank_one_plane() {
        let rows = vec![vec![qi(1), qi(1), qi(0)], vec![qi(2), qi(2), qi(0)]];
        let basis = nullspace(&rows);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert_eq!(&v[0] + &v[1], qz());
        }
    }

    #[test]
    fn integer_rank_matches_rational_rank() {
        let int_rows = vec![
            vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)],
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(6)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(1)],
        ];
        let q_rows: Vec<Vec<Q>> = int_rows
            .iter()
            .map(|r| r.iter().map(|v| Q::from_integer(v.clone())).collect())
            .collect();
        assert_eq!(rank_int(&int_rows), 2);
        assert_eq!(rank_q(&q_rows), 2);
        assert_eq!(q(1, 2), q(2, 4));
    }
}
