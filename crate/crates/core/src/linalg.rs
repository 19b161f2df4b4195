//! Small dense linear algebra on row-major slices.
//!
//! Only what the estimator needs: Cholesky factorization and solves, and the
//! structured solver for the degree-parameter information matrix.

use alloc::vec;
use alloc::vec::Vec;

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// Lower Cholesky factor of a symmetric positive definite matrix, in place.
///
/// Only the lower triangle of `a` is read; on success it holds `L` with
/// `A = L L'` and the strict upper triangle is zeroed.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let (head, tail) = a.split_at_mut(j * n);
        let row_j = &mut tail[..n];
        // row j, columns < j
        for k in 0..j {
            let row_k = &head[k * n..k * n + n];
            let s = dot(&row_j[..k], &row_k[..k]);
            row_j[k] = (row_j[k] - s) / row_k[k];
        }
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        row_j[j] = libm::sqrt(d);
        row_j[j + 1..].iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(())
}

/// Solves `L L' x = b` in place given the factor from [`cholesky_in_place`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    cholesky_in_place(&mut l, n).ok()?;
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        cholesky_solve(&l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}

/// Solves a small SPD system, returning `None` if it is not numerically PD.
pub fn spd_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    cholesky_in_place(&mut l, n).ok()?;
    let mut x = b.to_vec();
    cholesky_solve(&l, n, &mut x);
    Some(x)
}

/// `A x` for row-major `rows x cols` matrix.
pub fn mat_vec(a: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows).map(|i| dot(&a[i * cols..(i + 1) * cols], x)).collect()
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm_matrix(a: &[f64], rows: usize, cols: usize) -> f64 {
    (0..rows)
        .map(|i| a[i * cols..(i + 1) * cols].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Exact factorization of a matrix with the arrow structure
///
/// ```text
/// V = [ D1  C  ]     D1 = diag(d1), n x n
///     [ C'  D2 ]     D2 = diag(d2), m x m,  C is n x m
/// ```
///
/// Both diagonal blocks are eliminated by hand; only the `m x m` Schur
/// complement `D2 - C' D1^{-1} C` is factored densely.
#[derive(Debug, Clone)]
pub struct ArrowFactor {
    n: usize,
    m: usize,
    inv_d1: Vec<f64>,
    // C stored row-major n x m
    c: Vec<f64>,
    schur_chol: Vec<f64>,
}

impl ArrowFactor {
    /// `c_row(i)` must return row `i` of `C` (length >= m; extra entries ignored).
    pub fn new<'a, F>(d1: &[f64], d2: &[f64], c_row: F) -> Option<Self>
    where
        F: Fn(usize) -> &'a [f64],
    {
        let n = d1.len();
        let m = d2.len();
        if d1.iter().any(|&d| !(d > 0.0)) || d2.iter().any(|&d| !(d > 0.0)) {
            return None;
        }
        let inv_d1: Vec<f64> = d1.iter().map(|d| 1.0 / d).collect();
        let mut c = vec![0.0; n * m];
        let mut w = vec![0.0; m * m];
        for (a, &d) in d2.iter().enumerate() {
            w[a * m + a] = d;
        }
        for i in 0..n {
            let row = &c_row(i)[..m];
            c[i * m..(i + 1) * m].copy_from_slice(row);
            let s = inv_d1[i];
            for a in 0..m {
                let f = s * row[a];
                if f == 0.0 {
                    continue;
                }
                let w_row = &mut w[a * m..a * m + a + 1];
                for (wv, &rv) in w_row.iter_mut().zip(&row[..a + 1]) {
                    *wv -= f * rv;
                }
            }
        }
        cholesky_in_place(&mut w, m).ok()?;
        Some(Self { n, m, inv_d1, c, schur_chol: w })
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// Solves `V x = r`.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        debug_assert_eq!(r.len(), n + m);
        let (r1, r2) = r.split_at(n);
        // y2 = r2 - C' D1^{-1} r1
        let mut y2 = r2.to_vec();
        for i in 0..n {
            let f = r1[i] * self.inv_d1[i];
            if f == 0.0 {
                continue;
            }
            for (y, &cv) in y2.iter_mut().zip(&self.c[i * m..(i + 1) * m]) {
                *y -= f * cv;
            }
        }
        cholesky_solve(&self.schur_chol, m, &mut y2);
        let mut x = Vec::with_capacity(n + m);
        for i in 0..n {
            let s = dot(&self.c[i * m..(i + 1) * m], &y2);
            x.push((r1[i] - s) * self.inv_d1[i]);
        }
        x.extend_from_slice(&y2);
        x
    }

    /// Solves `V X = B` for a row-major `(n+m) x k` right-hand side.
    pub fn solve_columns(&self, b: &[f64], k: usize) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim * k];
        let mut col = vec![0.0; dim];
        for c in 0..k {
            for i in 0..dim {
                col[i] = b[i * k + c];
            }
            let x = self.solve(&col);
            for i in 0..dim {
                out[i * k + c] = x[i];
            }
        }
        out
    }
}
