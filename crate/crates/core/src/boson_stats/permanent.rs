//! Matrix permanents.

use alloc::vec;
use alloc::vec::Vec;

use super::StatsError;
use crate::linalg::{CMatrix, C64};

/// Largest order accepted by [`permanent_ryser`].
pub const RYSER_MAX_DIM: usize = 30;
/// Largest order accepted by [`permanent_naive`].
pub const NAIVE_MAX_DIM: usize = 9;

/// Ryser's inclusion-exclusion formula,
/// `Per(A) = (-1)^n sum_{S} (-1)^{|S|} prod_i sum_{j in S} a_ij`,
/// visiting column subsets in Gray-code order so each step adds or removes a
/// single column from the running row sums. `O(2^n n)`.
pub fn permanent_ryser(a: &CMatrix) -> Result<C64, StatsError> {
    let n = a.dim();
    if n > RYSER_MAX_DIM {
        return Err(StatsError::PermanentTooLarge { dim: n, max: RYSER_MAX_DIM });
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    // Column-major copy so a column update walks contiguous memory.
    let cols: Vec<C64> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|ij| a[ij]).collect();
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut in_set = vec![false; n];
    let mut total = C64::new(0.0, 0.0);
    let mut size = 0usize;

    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let col = &cols[j * n..(j + 1) * n];
        if in_set[j] {
            for (s, &c) in row_sums.iter_mut().zip(col) {
                *s -= c;
            }
            size -= 1;
        } else {
            for (s, &c) in row_sums.iter_mut().zip(col) {
                *s += c;
            }
            size += 1;
        }
        in_set[j] = !in_set[j];
        let prod = row_sums.iter().fold(C64::new(1.0, 0.0), |p, &s| p * s);
        if size.is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n.is_multiple_of(2) { total } else { -total })
}

/// Direct sum over all `n!` permutations (Heap's algorithm).
pub fn permanent_naive(a: &CMatrix) -> Result<C64, StatsError> {
    let n = a.dim();
    if n > NAIVE_MAX_DIM {
        return Err(StatsError::PermanentTooLarge { dim: n, max: NAIVE_MAX_DIM });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let term = |p: &[usize]| p.iter().enumerate().fold(C64::new(1.0, 0.0), |acc, (i, &j)| acc * a[(i, j)]);
    let mut total = term(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}
