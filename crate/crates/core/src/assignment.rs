//! Minimum-cost rectangular assignment (Hungarian method with potentials).

use crate::{Error, Result};

/// Optimal one-to-one assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`, if any.
    pub row_to_col: Vec<Option<usize>>,
    pub cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// Solves `min sum cost[i][a(i)]` over injective maps between the smaller and
/// the larger side of a `rows x cols` matrix given row-major. Every row is
/// assigned when `rows <= cols`, otherwise every column is.
pub fn solve(cost: &[f64], rows: usize, cols: usize) -> Result<Assignment> {
    if cost.len() != rows * cols {
        return Err(Error::Dimension { expected: rows * cols, got: cost.len() });
    }
    if let Some(bad) = cost.iter().find(|c| !c.is_finite()) {
        return Err(Error::Numerical(format!("non-finite assignment cost {bad}")));
    }
    if rows == 0 || cols == 0 {
        return Ok(Assignment { row_to_col: vec![None; rows], cost: 0.0 });
    }
    if rows <= cols {
        let cols_of = hungarian(|i, j| cost[i * cols + j], rows, cols);
        let row_to_col: Vec<Option<usize>> = cols_of.into_iter().map(Some).collect();
        let total = row_to_col
            .iter()
            .enumerate()
            .map(|(i, c)| cost[i * cols + c.unwrap()])
            .sum();
        Ok(Assignment { row_to_col, cost: total })
    } else {
        let rows_of = hungarian(|j, i| cost[i * cols + j], cols, rows);
        let mut row_to_col = vec![None; rows];
        let mut total = 0.0;
        for (j, i) in rows_of.into_iter().enumerate() {
            row_to_col[i] = Some(j);
            total += cost[i * cols + j];
        }
        Ok(Assignment { row_to_col, cost: total })
    }
}

// n <= m; returns the column matched to each of the n rows.
fn hungarian(a: impl Fn(usize, usize) -> f64, n: usize, m: usize) -> Vec<usize> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &[f64], rows: usize, cols: usize) -> f64 {
        fn rec(cost: &[f64], rows: usize, cols: usize, i: usize, used: &mut Vec<bool>) -> f64 {
            if i == rows {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cols {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i * cols + j] + rec(cost, rows, cols, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        if rows <= cols {
            rec(cost, rows, cols, 0, &mut vec![false; cols])
        } else {
            let t: Vec<f64> = (0..cols)
                .flat_map(|j| (0..rows).map(move |i| (i, j)))
                .map(|(i, j)| cost[i * cols + j])
                .collect();
            rec(&t, cols, rows, 0, &mut vec![false; rows])
        }
    }

    #[test]
    fn textbook_square() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(&cost, 3, 3).unwrap();
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.row_to_col, vec![Some(1), Some(0), Some(2)]);
    }

    #[test]
    fn empty_and_bad_input() {
        assert_eq!(solve(&[], 0, 3).unwrap().cost, 0.0);
        assert_eq!(solve(&[], 2, 0).unwrap().row_to_col, vec![None, None]);
        assert!(solve(&[1.0, 2.0], 2, 2).is_err());
        assert!(solve(&[f64::NAN], 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn matches_permutation_oracle(
            rows in 1usize..=5,
            cols in 1usize..=5,
            seed in proptest::collection::vec(-50.0f64..50.0, 25),
        ) {
            let cost = &seed[..rows * cols];
            let a = solve(cost, rows, cols).unwrap();
            prop_assert!((a.cost - brute_force(cost, rows, cols)).abs() < 1e-9);
            let assigned: Vec<usize> = a.pairs().map(|(_, c)| c).collect();
            prop_assert_eq!(assigned.len(), rows.min(cols));
            let mut dedup = assigned.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), assigned.len());
        }
    }
}
