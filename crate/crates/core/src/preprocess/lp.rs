//! Exact rational phase-one simplex with Bland's rule.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Finds a vertex of `{x >= 0 : A x = b}` for `b >= 0`, or `None` when the
/// system is infeasible.
///
/// Every row gets an artificial variable; minimizing their sum reaches a
/// basic feasible solution of the original system when one exists. Bland's
/// rule makes the pivot sequence finite and deterministic.
pub fn feasible_vertex(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    assert_eq!(rows, b.len());
    assert!(b.iter().all(|v| !v.is_negative()), "right-hand side must be nonnegative");

    let width = cols + rows + 1;
    let rhs = width - 1;
    let mut t: Vec<Vec<BigRational>> = Vec::with_capacity(rows + 1);
    for (r, row) in a.iter().enumerate() {
        let mut line = vec![BigRational::zero(); width];
        line[..cols].clone_from_slice(row);
        line[cols + r] = BigRational::one();
        line[rhs] = b[r].clone();
        t.push(line);
    }
    // objective row: reduced costs of "minimize sum of artificials"
    let mut obj = vec![BigRational::zero(); width];
    for line in &t {
        for j in 0..cols {
            obj[j] -= &line[j];
        }
        obj[rhs] -= &line[rhs];
    }
    t.push(obj);
    let z = rows;
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    while let Some(enter) = (0..rhs).find(|&j| t[z][j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..rows {
            if t[r][enter].is_positive() {
                let ratio = &t[r][rhs] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // phase-one objective is bounded below by zero
        let (r, _) = leave.expect("phase one is bounded");
        pivot(&mut t, r, enter);
        basis[r] = enter;
    }

    if !t[z][rhs].is_zero() {
        return None;
    }

    // drive zero-valued artificials out of the basis where possible
    for r in 0..rows {
        if basis[r] >= cols {
            if let Some(j) = (0..cols).find(|&j| !t[r][j].is_zero()) {
                pivot(&mut t, r, j);
                basis[r] = j;
            }
        }
    }

    let mut x = vec![BigRational::zero(); cols];
    for (r, &j) in basis.iter().enumerate() {
        if j < cols {
            x[j] = t[r][rhs].clone();
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<BigRational>], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        *v /= &p;
    }
    let pivot_row = t[r].clone();
    for (i, line) in t.iter_mut().enumerate() {
        if i == r || line[c].is_zero() {
            continue;
        }
        let f = line[c].clone();
        for (v, pv) in line.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *v -= &f * pv;
            }
        }
    }
}
