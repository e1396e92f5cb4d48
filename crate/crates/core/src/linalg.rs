//! Exact linear algebra over ℚ and ℤ: rank, solving, Hermite normal form,
//! integer kernels, and bounded enumeration of integer solutions in a box.
//!
//! Everything here is small and dense; matrices are `Vec<Vec<_>>` rows.

// Elimination walks index pairs over one mutably-borrowed matrix; iterator
// forms would need split borrows that obscure the row operations.
#![allow(clippy::needless_range_loop)]

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Int, Rat};

/// Rank of a rational matrix (rows of equal length), by Gaussian elimination.
pub fn rank_rat(rows: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let ncols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].clone().recip();
        for r in rank + 1..m.len() {
            if !m[r][col].is_zero() {
                let factor = &m[r][col] * &inv;
                for c in col..ncols {
                    let sub = &m[rank][c] * &factor;
                    m[r][c] -= sub;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Rank of an integer matrix.
pub fn rank_int(rows: &[Vec<Int>]) -> usize {
    let rat_rows: Vec<Vec<Rat>> =
        rows.iter().map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect()).collect();
    rank_rat(&rat_rows)
}

/// Solves `A·x = b` for a rational matrix with full column rank (unique
/// solution).  Returns `None` when the system is inconsistent or the columns
/// are dependent.
pub fn solve_unique(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let nrows = a.len();
    let ncols = a.first().map(|r| r.len()).unwrap_or(0);
    debug_assert_eq!(nrows, b.len());
    // Augmented elimination.
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone().recip();
        for c in col..=ncols {
            m[row][c] = &m[row][c] * &inv;
        }
        for r in 0..nrows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=ncols {
                    let sub = &m[row][c] * &factor;
                    m[r][c] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == nrows {
            break;
        }
    }
    if pivot_cols.len() != ncols {
        return None;
    }
    // Inconsistency: a zero row with nonzero rhs.
    for r in row..nrows {
        if m[r][..ncols].iter().all(|x| x.is_zero()) && !m[r][ncols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); ncols];
    for (i, &col) in pivot_cols.iter().enumerate() {
        x[col] = m[i][ncols].clone();
    }
    Some(x)
}

/// Hermite-style basis of the row lattice generated by integer rows: returns
/// a row-echelon basis (each leading entry positive, zero rows dropped).  The
/// returned rows generate exactly the same ℤ-module as the input rows.
pub fn row_lattice_basis(rows: Vec<Vec<Int>>) -> Vec<Vec<Int>> {
    let mut m: Vec<Vec<Int>> = rows.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect();
    let ncols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut done = 0;
    for col in 0..ncols {
        // Euclidean reduction of column `col` across rows `done..`.
        loop {
            let mut best: Option<usize> = None;
            for r in done..m.len() {
                if !m[r][col].is_zero() {
                    best = match best {
                        None => Some(r),
                        Some(b) => {
                            if m[r][col].abs() < m[b][col].abs() {
                                Some(r)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else { break };
            m.swap(done, b);
            let mut any_left = false;
            for r in done + 1..m.len() {
                if !m[r][col].is_zero() {
                    let q = div_round(&m[r][col], &m[done][col]);
                    if !q.is_zero() {
                        for c in 0..ncols {
                            let sub = &m[done][c] * &q;
                            m[r][c] -= sub;
                        }
                    }
                    if !m[r][col].is_zero() {
                        any_left = true;
                    }
                }
            }
            if !any_left {
                break;
            }
        }
        if done < m.len() && !m[done][col].is_zero() {
            if m[done][col].is_negative() {
                for c in 0..ncols {
                    m[done][c] = -m[done][c].clone();
                }
            }
            // Reduce the rows above against this pivot for a canonical form.
            for r in 0..done {
                if !m[r][col].is_zero() {
                    let q = m[r][col].div_floor(&m[done][col]);
                    if !q.is_zero() {
                        for c in 0..ncols {
                            let sub = &m[done][c] * &q;
                            m[r][c] -= sub;
                        }
                    }
                }
            }
            done += 1;
        }
    }
    m.truncate(done);
    m
}

/// Rounded division `a / b` (nearest integer, ties toward zero's side is
/// irrelevant for the reduction's correctness).
fn div_round(a: &Int, b: &Int) -> Int {
    let (q, r) = a.div_rem(b);
    let two_r: Int = &r * Int::from(2);
    if two_r.abs() > b.abs() {
        if (r.is_negative()) == (b.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Basis of the integer kernel `{x ∈ ℤ^n : M·x = 0}` for an integer matrix
/// given by rows of length `n`.
pub fn kernel_basis(rows: &[Vec<Int>], n: usize) -> Vec<Vec<Int>> {
    // Column reduction with a unimodular transform tracked on an identity
    // block: reduce Mᵀ rows (= M columns) and collect transform rows that are
    // sent to zero.
    let m = rows.len();
    let mut work: Vec<(Vec<Int>, Vec<Int>)> = (0..n)
        .map(|j| {
            let col: Vec<Int> = (0..m).map(|i| rows[i][j].clone()).collect();
            let mut unit = vec![Int::zero(); n];
            unit[j] = Int::one();
            (col, unit)
        })
        .collect();
    let mut done = 0;
    for row in 0..m {
        loop {
            let mut best: Option<usize> = None;
            for j in done..work.len() {
                if !work[j].0[row].is_zero() {
                    best = match best {
                        None => Some(j),
                        Some(b) => {
                            if work[j].0[row].abs() < work[b].0[row].abs() {
                                Some(j)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else { break };
            work.swap(done, b);
            let mut any_left = false;
            for j in done + 1..work.len() {
                if !work[j].0[row].is_zero() {
                    let q = div_round(&work[j].0[row], &work[done].0[row]);
                    if !q.is_zero() {
                        for i in 0..m {
                            let sub = &work[done].0[i] * &q;
                            work[j].0[i] -= sub;
                        }
                        for i in 0..n {
                            let sub = &work[done].1[i] * &q;
                            work[j].1[i] -= sub;
                        }
                    }
                    if !work[j].0[row].is_zero() {
                        any_left = true;
                    }
                }
            }
            if !any_left {
                break;
            }
        }
        if done < work.len() && !work[done].0[row].is_zero() {
            done += 1;
        }
    }
    work[done..]
        .iter()
        .filter(|(col, _)| col.iter().all(|x| x.is_zero()))
        .map(|(_, t)| t.clone())
        .collect()
}

/// Expresses `target` in the given row basis with rational coefficients
/// (`None` if outside the span).  For a lattice basis and a lattice element,
/// the coefficients come out integral.
pub fn express_in_row_basis(basis: &[Vec<Int>], target: &[Int]) -> Option<Vec<Rat>> {
    if basis.is_empty() {
        return if target.iter().all(|x| x.is_zero()) { Some(Vec::new()) } else { None };
    }
    let ncols = basis[0].len();
    // Solve basisᵀ · c = target.
    let a: Vec<Vec<Rat>> = (0..ncols)
        .map(|c| basis.iter().map(|row| Rat::from_integer(row[c].clone())).collect())
        .collect();
    let b: Vec<Rat> = target.iter().map(|x| Rat::from_integer(x.clone())).collect();
    solve_unique(&a, &b)
}

/// Enumerates integer solutions `x` of `A·x = target` with `lo[j] ≤ x[j] ≤ hi[j]`,
/// up to `cap` solutions ([`Error::CapacityExceeded`] beyond).  `A` is a small
/// integer matrix given by rows.  Branches coordinate by coordinate, pruning
/// with interval bounds on each row's remaining reachable range.
pub fn solve_in_box(
    a: &[Vec<Int>],
    target: &[Int],
    lo: &[i64],
    hi: &[i64],
    cap: usize,
) -> Result<Vec<Vec<i64>>> {
    let nrows = a.len();
    let ncols = lo.len();
    debug_assert!(a.iter().all(|r| r.len() == ncols));
    debug_assert_eq!(target.len(), nrows);
    // Suffix min/max of Σ_{j≥t} a[i][j]·x_j over the box.
    let mut suffix_min = vec![vec![Int::zero(); nrows]; ncols + 1];
    let mut suffix_max = vec![vec![Int::zero(); nrows]; ncols + 1];
    for j in (0..ncols).rev() {
        for i in 0..nrows {
            let c = &a[i][j];
            let (m1, m2) = (c * Int::from(lo[j]), c * Int::from(hi[j]));
            let (lo_c, hi_c) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            suffix_min[j][i] = &suffix_min[j + 1][i] + lo_c;
            suffix_max[j][i] = &suffix_max[j + 1][i] + hi_c;
        }
    }
    let mut out = Vec::new();
    let mut x = vec![0i64; ncols];
    let mut residual: Vec<Int> = target.to_vec();
    #[allow(clippy::too_many_arguments)] // recursion carries the whole search state
    fn rec(
        a: &[Vec<Int>],
        lo: &[i64],
        hi: &[i64],
        suffix_min: &[Vec<Int>],
        suffix_max: &[Vec<Int>],
        j: usize,
        x: &mut Vec<i64>,
        residual: &mut Vec<Int>,
        out: &mut Vec<Vec<i64>>,
        cap: usize,
    ) -> Result<()> {
        let nrows = residual.len();
        for i in 0..nrows {
            if residual[i] < suffix_min[j][i] || residual[i] > suffix_max[j][i] {
                return Ok(());
            }
        }
        if j == x.len() {
            if residual.iter().all(|r| r.is_zero()) {
                if out.len() >= cap {
                    return Err(Error::CapacityExceeded(
                        "too many integer solutions in the box".into(),
                    ));
                }
                out.push(x.clone());
            }
            return Ok(());
        }
        for v in lo[j]..=hi[j] {
            x[j] = v;
            for i in 0..nrows {
                residual[i] -= &a[i][j] * Int::from(v);
            }
            rec(a, lo, hi, suffix_min, suffix_max, j + 1, x, residual, out, cap)?;
            for i in 0..nrows {
                residual[i] += &a[i][j] * Int::from(v);
            }
        }
        Ok(())
    }
    rec(a, lo, hi, &suffix_min, &suffix_max, 0, &mut x, &mut residual, &mut out, cap)?;
    Ok(out)
}
