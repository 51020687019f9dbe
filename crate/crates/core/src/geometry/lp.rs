//! Exact rational linear programming.
//!
//! Two-phase dense tableau simplex with Bland's rule, so every pivot is exact
//! and termination is guaranteed. Equalities are substituted away first; the
//! systems built by the relaxation pipelines are mostly equalities, so the
//! tableaux that reach the simplex stay small.

use super::system::{LinRow, Rel};
use crate::rat::{dot, qone, qz, Q};
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    /// Exact optimum and one attaining point of the constraint system.
    Optimal { value: Q, point: Vec<Q> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<&Q> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }
}

struct Presolved {
    /// Inequality-only rows over the surviving variables.
    rows: Vec<(Vec<Q>, Q)>,
    /// Surviving variable indices, in order, into the original space.
    alive: Vec<usize>,
    /// Substitutions `(var, expr over original vars, constant)`, to be applied
    /// in reverse to recover the full point.
    subs: Vec<(usize, Vec<Q>, Q)>,
    infeasible: bool,
}

fn presolve(input: &[LinRow], dim: usize) -> Presolved {
    let mut rows: Vec<(Vec<Q>, Rel, Q)> = input
        .iter()
        .map(|r| {
            (
                r.coeffs
                    .iter()
                    .map(|c| Q::from_integer(c.clone()))
                    .collect(),
                r.rel,
                Q::from_integer(r.rhs.clone()),
            )
        })
        .collect();
    let mut substituted = vec![false; dim];
    let mut subs = Vec::new();
    loop {
        let Some(pos) = rows
            .iter()
            .position(|(c, rel, _)| *rel == Rel::Eq && c.iter().any(|v| !v.is_zero()))
        else {
            break;
        };
        let (coeffs, _, rhs) = rows.swap_remove(pos);
        let var = coeffs.iter().position(|v| !v.is_zero()).unwrap();
        let inv = coeffs[var].recip();
        let mut expr = vec![qz(); dim];
        for (j, c) in coeffs.iter().enumerate() {
            if j != var && !c.is_zero() {
                expr[j] = -(c * &inv);
            }
        }
        let cst = &rhs * &inv;
        for (c, _, b) in rows.iter_mut() {
            if c[var].is_zero() {
                continue;
            }
            let f = std::mem::replace(&mut c[var], qz());
            for j in 0..dim {
                if !expr[j].is_zero() {
                    let d = &f * &expr[j];
                    c[j] += d;
                }
            }
            *b -= &f * &cst;
        }
        substituted[var] = true;
        subs.push((var, expr, cst));
    }
    let mut infeasible = false;
    let mut out_rows = Vec::new();
    let alive: Vec<usize> = (0..dim).filter(|&v| !substituted[v]).collect();
    for (c, rel, b) in rows {
        if c.iter().all(|v| v.is_zero()) {
            let ok = match rel {
                Rel::Le => !b.is_negative(),
                Rel::Eq => b.is_zero(),
            };
            if !ok {
                infeasible = true;
            }
            continue;
        }
        debug_assert_eq!(rel, Rel::Le);
        out_rows.push((alive.iter().map(|&v| c[v].clone()).collect(), b));
    }
    Presolved {
        rows: out_rows,
        alive,
        subs,
        infeasible,
    }
}

/// Restores substituted variables; `reduced` holds values of `alive` vars.
fn expand_point(pre: &Presolved, reduced: &[Q], dim: usize) -> Vec<Q> {
    let mut x = vec![qz(); dim];
    for (slot, &v) in pre.alive.iter().enumerate() {
        x[v] = reduced[slot].clone();
    }
    for (var, expr, cst) in pre.subs.iter().rev() {
        x[*var] = dot(expr, &x) + cst;
    }
    x
}

/// Dense simplex tableau over split nonnegative variables.
struct Tableau {
    /// rows x (cols + 1); last column is the rhs.
    body: Vec<Vec<Q>>,
    cost: Vec<Q>,
    basis: Vec<usize>,
    cols: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.body[row][col].recip();
        for v in self.body[row].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = self.body[row].clone();
        for r in 0..self.body.len() {
            if r != row && !self.body[r][col].is_zero() {
                let f = std::mem::replace(&mut self.body[r][col], qz());
                for j in 0..=self.cols {
                    if !pivot_row[j].is_zero() {
                        let d = &f * &pivot_row[j];
                        self.body[r][j] -= d;
                    }
                }
                self.body[r][col] = qz();
            }
        }
        if !self.cost[col].is_zero() {
            let f = std::mem::replace(&mut self.cost[col], qz());
            for j in 0..=self.cols {
                if !pivot_row[j].is_zero() {
                    let d = &f * &pivot_row[j];
                    self.cost[j] -= d;
                }
            }
            self.cost[col] = qz();
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering = lowest column with negative reduced cost,
    /// leaving = lexicographically smallest basic index among ratio ties.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> Step {
        loop {
            let Some(col) = (0..self.cols).find(|&j| allowed(j) && self.cost[j].is_negative())
            else {
                return Step::Optimal;
            };
            let mut best: Option<(Q, usize, usize)> = None;
            for r in 0..self.body.len() {
                if self.body[r][col].is_positive() {
                    let ratio = &self.body[r][self.cols] / &self.body[r][col];
                    let key = (ratio, self.basis[r], r);
                    best = match best {
                        None => Some(key),
                        Some(cur) => {
                            if (key.0.clone(), key.1) < (cur.0.clone(), cur.1) {
                                Some(key)
                            } else {
                                Some(cur)
                            }
                        }
                    };
                }
            }
            match best {
                None => return Step::Unbounded,
                Some((_, _, row)) => self.pivot(row, col),
            }
        }
    }
}

/// Minimizes `objective` over the presolved inequality rows. Returns the value
/// over the reduced variables, or None on infeasible, or Unbounded.
fn simplex_min(rows: &[(Vec<Q>, Q)], objective: &[Q]) -> Option<Result<Vec<Q>, ()>> {
    let n = objective.len();
    let m = rows.len();
    // Columns: x+ (n) | x- (n) | slack (m) | artificial (k).
    let art_rows: Vec<usize> = (0..m).filter(|&i| rows[i].1.is_negative()).collect();
    let cols = 2 * n + m + art_rows.len();
    let mut body = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut art_seen = 0;
    for (i, (coef, rhs)) in rows.iter().enumerate() {
        let neg = rhs.is_negative();
        let s = if neg { -qone() } else { qone() };
        let mut row = vec![qz(); cols + 1];
        for j in 0..n {
            let v = if neg { -&coef[j] } else { coef[j].clone() };
            row[j] = v.clone();
            row[n + j] = -v;
        }
        row[2 * n + i] = if neg { -qone() } else { qone() };
        row[cols] = if neg { -rhs } else { rhs.clone() };
        let _ = s;
        if neg {
            let a = 2 * n + m + art_seen;
            art_seen += 1;
            row[a] = qone();
            basis[i] = a;
        } else {
            basis[i] = 2 * n + i;
        }
        body.push(row);
    }
    let mut t = Tableau {
        body,
        cost: vec![qz(); cols + 1],
        basis,
        cols,
    };
    // Phase 1.
    if !art_rows.is_empty() {
        for j in 2 * n + m..cols {
            t.cost[j] = qone();
        }
        for r in 0..m {
            if t.basis[r] >= 2 * n + m {
                let row = t.body[r].clone();
                for j in 0..=cols {
                    let d = &row[j];
                    if !d.is_zero() {
                        let d = d.clone();
                        t.cost[j] -= d;
                    }
                }
            }
        }
        match t.run(&|_| true) {
            Step::Unbounded => unreachable!("phase 1 objective is bounded below"),
            Step::Optimal => {}
        }
        if t.cost[cols].is_negative() {
            return None; // positive artificial sum
        }
        // Pivot artificials out of the basis where possible; a row with no
        // structural coefficient is redundant and can stay pinned at zero.
        for r in 0..m {
            if t.basis[r] >= 2 * n + m {
                if let Some(col) = (0..2 * n + m).find(|&j| !t.body[r][j].is_zero()) {
                    t.pivot(r, col);
                }
            }
        }
    }
    // Phase 2.
    t.cost = vec![qz(); cols + 1];
    for j in 0..n {
        t.cost[j] = objective[j].clone();
        t.cost[n + j] = -objective[j].clone();
    }
    for r in 0..m {
        let b = t.basis[r];
        if !t.cost[b].is_zero() {
            let f = std::mem::replace(&mut t.cost[b], qz());
            let row = t.body[r].clone();
            for j in 0..=cols {
                if !row[j].is_zero() {
                    let d = &f * &row[j];
                    t.cost[j] -= d;
                }
            }
            t.cost[b] = qz();
        }
    }
    let structural = 2 * n + m;
    match t.run(&|j| j < structural) {
        Step::Unbounded => Some(Err(())),
        Step::Optimal => {
            let mut reduced = vec![qz(); n];
            for r in 0..m {
                let b = t.basis[r];
                if b < n {
                    reduced[b] += &t.body[r][cols];
                } else if b < 2 * n {
                    reduced[b - n] -= &t.body[r][cols];
                }
            }
            Some(Ok(reduced))
        }
    }
}

/// Exact optimum of `objective . x` subject to the rows, with an attaining
/// point of the (closed) feasible set.
pub fn solve(rows: &[LinRow], dim: usize, objective: &[Q], sense: Sense) -> LpOutcome {
    assert_eq!(objective.len(), dim);
    let pre = presolve(rows, dim);
    if pre.infeasible {
        return LpOutcome::Infeasible;
    }
    // Objective over the reduced variables: substitute fixed vars into it.
    let mut full_obj: Vec<Q> = objective.to_vec();
    for (var, expr, _) in pre.subs.iter().rev() {
        let f = std::mem::replace(&mut full_obj[*var], qz());
        if f.is_zero() {
            continue;
        }
        for j in 0..dim {
            if !expr[j].is_zero() {
                let d = &f * &expr[j];
                full_obj[j] += d;
            }
        }
    }
    let reduced_obj: Vec<Q> = pre
        .alive
        .iter()
        .map(|&v| match sense {
            Sense::Min => full_obj[v].clone(),
            Sense::Max => -full_obj[v].clone(),
        })
        .collect();
    match simplex_min(&pre.rows, &reduced_obj) {
        None => LpOutcome::Infeasible,
        Some(Err(())) => LpOutcome::Unbounded,
        Some(Ok(reduced)) => {
            let point = expand_point(&pre, &reduced, dim);
            let value = dot(objective, &point);
            LpOutcome::Optimal { value, point }
        }
    }
}

/// One feasible point, if any.
pub fn feasible_point(rows: &[LinRow], dim: usize) -> Option<Vec<Q>> {
    match solve(rows, dim, &vec![qz(); dim], Sense::Min) {
        LpOutcome::Optimal { point, .. } => Some(point),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("zero objective cannot be unbounded"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    fn le(coeffs: &[Q], rhs: Q) -> LinRow {
        LinRow::from_rational(coeffs, Rel::Le, &rhs, "t")
    }

    fn eq(coeffs: &[Q], rhs: Q) -> LinRow {
        LinRow::from_rational(coeffs, Rel::Eq, &rhs, "t")
    }

    /// The running triangle example: x in [-1,1], y >= x, y >= 0, y <= (x+1)/2.
    fn triangle_rows() -> Vec<LinRow> {
        vec![
            le(&[qi(-1), qi(0)], qi(1)),
            le(&[qi(1), qi(0)], qi(1)),
            le(&[qi(1), qi(-1)], qi(0)),
            le(&[qi(0), qi(-1)], qi(0)),
            le(&[q(-1, 2), qi(1)], q(1, 2)),
        ]
    }

    #[test]
    fn triangle_projection_bounds() {
        let rows = triangle_rows();
        let min_y = solve(&rows, 2, &[qi(0), qi(1)], Sense::Min);
        let max_y = solve(&rows, 2, &[qi(0), qi(1)], Sense::Max);
        assert_eq!(min_y.value(), Some(&qi(0)));
        assert_eq!(max_y.value(), Some(&qi(1)));
        let min_x = solve(&rows, 2, &[qi(1), qi(0)], Sense::Min);
        let max_x = solve(&rows, 2, &[qi(1), qi(0)], Sense::Max);
        assert_eq!(min_x.value(), Some(&qi(-1)));
        assert_eq!(max_x.value(), Some(&qi(1)));
    }

    #[test]
    fn single_point_system() {
        let rows = vec![eq(&[qi(1)], qi(0))];
        let r = solve(&rows, 1, &[qi(1)], Sense::Min);
        assert_eq!(r.value(), Some(&qi(0)));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let rows = vec![le(&[qi(1)], qi(-1)), le(&[qi(-1)], qi(-1))];
        assert_eq!(solve(&rows, 1, &[qi(1)], Sense::Min), LpOutcome::Infeasible);
        let rows = vec![le(&[qi(-1)], qi(0))];
        assert_eq!(solve(&rows, 1, &[qi(1)], Sense::Max), LpOutcome::Unbounded);
        assert!(matches!(
            solve(&rows, 1, &[qi(1)], Sense::Min),
            LpOutcome::Optimal { .. }
        ));
    }

    #[test]
    fn witness_point_attains_optimum() {
        let rows = triangle_rows();
        if let LpOutcome::Optimal { value, point } = solve(&rows, 2, &[qi(0), qi(1)], Sense::Max) {
            assert_eq!(point[1], value);
            assert!(rows.iter().all(|r| r.satisfied_by(&point)));
        } else {
            panic!("expected optimum");
        }
    }

    #[test]
    fn equality_chains_presolve_away() {
        // x0 free, x1 = 2 x0 + 1, x2 = x1 - 3, minimize x2 with x0 in [0, 2].
        let rows = vec![
            eq(&[qi(2), qi(-1), qi(0)], qi(-1)),
            eq(&[qi(0), qi(1), qi(-1)], qi(3)),
            le(&[qi(-1), qi(0), qi(0)], qi(0)),
            le(&[qi(1), qi(0), qi(0)], qi(2)),
        ];
        let r = solve(&rows, 3, &[qi(0), qi(0), qi(1)], Sense::Min);
        assert_eq!(r.value(), Some(&qi(-2)));
        let r = solve(&rows, 3, &[qi(0), qi(0), qi(1)], Sense::Max);
        assert_eq!(r.value(), Some(&qi(2)));
    }
}

#[cfg(test)]
mod repro_tests {
    use super::*;
    use crate::geometry::HPolytope;
    use crate::rat::{qi, qz};

    #[test]
    fn polar_min_is_minus_two() {
        let data: Vec<(Vec<i64>, i64)> = vec![
            (vec![-60, -83, -38, -64], 68),
            (vec![-60, -83, 64, 38], 68),
            (vec![-15, -8, 16, -16], 17),
            (vec![-30, 18, -19, -32], 34),
            (vec![-15, 9, 16, -16], 17),
            (vec![-30, 18, 32, 19], 34),
            (vec![-13, -33, -36, -32], 34),
            (vec![-13, -33, 32, 36], 34),
            (vec![-13, 18, -36, -32], 34),
            (vec![-13, 18, 32, 36], 34),
            (vec![2, 9, 16, -16], 17),
            (vec![76, -15, -72, 38], 68),
            (vec![76, -15, -38, 72], 68),
            (vec![19, 9, -18, -16], 17),
            (vec![38, 18, -36, 19], 34),
            (vec![38, 18, -19, 36], 34),
            (vec![19, 9, 16, 18], 17),
        ];
        let mut hp = HPolytope::universe(4);
        for (a, b) in data {
            let coeffs: Vec<crate::rat::Q> = a.into_iter().map(qi).collect();
            hp.push_le(&coeffs, &qi(b));
        }
        let mut obj = vec![qz(); 4];
        obj[0] = qi(1);
        let r = hp.lp(&obj, Sense::Min);
        assert_eq!(r.value(), Some(&qi(-2)));
    }
}
