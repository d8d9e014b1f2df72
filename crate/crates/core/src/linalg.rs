//! Small dense least-squares solver used by the sparse regression and the
//! local polynomial differentiation weights.
//!
//! Problems here are tall and thin (hundreds of rows, a handful of columns),
//! so a hand-rolled column-pivoted Householder QR is plenty. Ridge
//! regularization is applied by augmenting the system with `sqrt(alpha) * I`
//! rows, which keeps the factorization rank-revealing and the solve
//! deterministic.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Solve `min ||A x - b||^2 + alpha ||x||^2` for column-major `A`.
///
/// `columns` holds the columns of `A`, each of length `n_rows`. Rank-deficient
/// systems (possible when `alpha == 0`) get zeros on the trailing pivoted
/// columns. Panics if column lengths disagree; callers validate shapes.
pub(crate) fn ridge_lstsq(columns: &[&[f64]], b: &[f64], alpha: f64) -> Vec<f64> {
    let n_cols = columns.len();
    if n_cols == 0 {
        return Vec::new();
    }
    let n_rows = columns[0].len();
    assert!(columns.iter().all(|c| c.len() == n_rows));
    assert_eq!(b.len(), n_rows);

    let aug = n_rows + if alpha > 0.0 { n_cols } else { 0 };
    let m = aug;
    let sqrt_alpha = math::sqrt(alpha);

    // Column-major working copy of the augmented matrix [A; sqrt(alpha) I].
    let mut a = vec![0.0f64; m * n_cols];
    for (j, col) in columns.iter().enumerate() {
        a[j * m..j * m + n_rows].copy_from_slice(col);
        if alpha > 0.0 {
            a[j * m + n_rows + j] = sqrt_alpha;
        }
    }
    let mut rhs = vec![0.0f64; m];
    rhs[..n_rows].copy_from_slice(b);

    let k = n_cols.min(m);
    let mut perm: Vec<usize> = (0..n_cols).collect();
    let mut col_norms: Vec<f64> = (0..n_cols)
        .map(|j| a[j * m..(j + 1) * m].iter().map(|v| v * v).sum())
        .collect();

    let mut rank = k;
    let mut r00 = 0.0f64;
    for step in 0..k {
        // Pivot: bring the remaining column with the largest norm forward.
        let (pivot, _) = col_norms[step..]
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        let pivot = step + pivot;
        if pivot != step {
            for r in 0..m {
                a.swap(step * m + r, pivot * m + r);
            }
            perm.swap(step, pivot);
            col_norms.swap(step, pivot);
        }

        // Householder vector for the subcolumn a[step.., step].
        let norm = math::sqrt(
            a[step * m + step..(step + 1) * m].iter().map(|v| v * v).sum::<f64>(),
        );
        if step == 0 {
            r00 = norm;
        }
        let tol = f64::EPSILON * (m.max(n_cols) as f64) * r00;
        if norm <= tol {
            rank = step;
            break;
        }
        let alpha_h = if a[step * m + step] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0f64; m - step];
        v[0] = a[step * m + step] - alpha_h;
        v[1..].copy_from_slice(&a[step * m + step + 1..(step + 1) * m]);
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        a[step * m + step] = alpha_h;
        for x in a[step * m + step + 1..(step + 1) * m].iter_mut() {
            *x = 0.0;
        }
        if vtv > 0.0 {
            for j in step + 1..n_cols {
                let col = &mut a[j * m + step..(j + 1) * m];
                let dot: f64 = col.iter().zip(&v).map(|(x, w)| x * w).sum();
                let scale = 2.0 * dot / vtv;
                for (x, w) in col.iter_mut().zip(&v) {
                    *x -= scale * w;
                }
            }
            let dot: f64 = rhs[step..].iter().zip(&v).map(|(x, w)| x * w).sum();
            let scale = 2.0 * dot / vtv;
            for (x, w) in rhs[step..].iter_mut().zip(&v) {
                *x -= scale * w;
            }
        }
        // Downdate remaining column norms for pivoting.
        for j in step + 1..n_cols {
            let h = a[j * m + step];
            col_norms[j] -= h * h;
        }
    }

    // Back-substitution on the leading rank x rank triangle.
    let mut y = vec![0.0f64; n_cols];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= a[j * m + i] * y[j];
        }
        y[i] = s / a[i * m + i];
    }

    let mut x = vec![0.0f64; n_cols];
    for (pos, &orig) in perm.iter().enumerate() {
        x[orig] = y[pos];
    }
    x
}

/// Solve the square system `G z = e_k` for symmetric positive definite `G`
/// given in row-major order. Used for local polynomial derivative weights.
pub(crate) fn solve_unit_rhs(g: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let cols: Vec<Vec<f64>> = (0..dim).map(|j| (0..dim).map(|i| g[i * dim + j]).collect()).collect();
    let col_refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let mut e = vec![0.0f64; dim];
    e[k] = 1.0;
    ridge_lstsq(&col_refs, &e, 0.0)
}
