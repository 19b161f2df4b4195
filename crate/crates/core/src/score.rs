//! Score system and information blocks.
//!
//! `F` is the degree score written as expected-minus-observed: `F_i` for the
//! out-degree of node `i` and `F_{n+j}` for the in-degree of node `j`, where
//! the in-degree of the reference (last) node is dropped. `Q` is the
//! covariate score with the same sign convention. Both are negative
//! gradients of the log-likelihood.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::ArrowFactor;
use crate::logistic::log1p_exp;
use crate::model::{check_shapes, linear_predictors, DirectedNetwork, EdgeCovariates, ParamVector};

/// `(mu(x), 1 - mu(x))` from a single exponential.
#[inline]
pub(crate) fn mu_pair(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let e = libm::exp(-x);
        let d = 1.0 + e;
        (1.0 / d, e / d)
    } else {
        let e = libm::exp(x);
        let d = 1.0 + e;
        (e / d, 1.0 / d)
    }
}

/// `F` from a matrix of linear predictors.
pub(crate) fn f_from_pi(net: &DirectedNetwork, pi: &[f64]) -> Vec<f64> {
    let n = net.n();
    let mut f = vec![0.0; 2 * n - 1];
    let mut col = vec![0.0; n];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let m = mu_pair(pi[i * n + j]).0;
            row += m;
            col[j] += m;
        }
        f[i] = row - net.out_degrees()[i] as f64;
    }
    for j in 0..n - 1 {
        f[n + j] = col[j] - net.in_degrees()[j] as f64;
    }
    f
}

/// `sum_{i != j} [a_ij pi_ij - log(1 + e^{pi_ij})]`, identical to the
/// log-likelihood once `pi` includes every parameter.
pub(crate) fn loglik_from_pi(net: &DirectedNetwork, pi: &[f64]) -> f64 {
    let n = net.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x = pi[i * n + j];
            if net.has_edge(i, j) {
                s += x;
            }
            s -= log1p_exp(x);
        }
    }
    s
}

pub(crate) fn q_from_pi(net: &DirectedNetwork, cov: &EdgeCovariates, pi: &[f64]) -> Vec<f64> {
    let (n, p) = (net.n(), cov.p());
    let mut q = vec![0.0; p];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = mu_pair(pi[i * n + j]).0 - if net.has_edge(i, j) { 1.0 } else { 0.0 };
            for (qk, zk) in q.iter_mut().zip(cov.get(i, j)) {
                *qk += zk * r;
            }
        }
    }
    q
}

/// Bernoulli variances `u_ij = mu'(pi_ij)` with zero diagonal, plus row and column sums.
pub(crate) fn variances_from_pi(n: usize, pi: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; n * n];
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (m, mc) = mu_pair(pi[i * n + j]);
            let v = m * mc;
            u[i * n + j] = v;
            rows[i] += v;
            cols[j] += v;
        }
    }
    (u, rows, cols)
}

/// Information blocks at one parameter value.
///
/// `V = dF/d eta'` is never stored densely: its entries are read off the
/// variances `u_ij` through [`v_entry`](Self::v_entry).
#[derive(Debug, Clone)]
pub struct FisherBlocks {
    n: usize,
    p: usize,
    u: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    v_eta_gamma: Vec<f64>,
    v_gamma_gamma: Vec<f64>,
}

impl FisherBlocks {
    pub(crate) fn from_pi(cov: &EdgeCovariates, pi: &[f64]) -> Self {
        let (n, p) = (cov.n(), cov.p());
        let (u, row_sums, col_sums) = variances_from_pi(n, pi);
        let mut v_eta_gamma = vec![0.0; (2 * n - 1) * p];
        let mut v_gamma_gamma = vec![0.0; p * p];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = u[i * n + j];
                let z = cov.get(i, j);
                for k in 0..p {
                    let wz = w * z[k];
                    v_eta_gamma[i * p + k] += wz;
                    if j < n - 1 {
                        v_eta_gamma[(n + j) * p + k] += wz;
                    }
                    for l in 0..p {
                        v_gamma_gamma[k * p + l] += wz * z[l];
                    }
                }
            }
        }
        Self { n, p, u, row_sums, col_sums, v_eta_gamma, v_gamma_gamma }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Dimension `2n - 1` of `V`.
    pub fn dim(&self) -> usize {
        2 * self.n - 1
    }

    /// `u_ij = mu'(pi_ij)`, the variance of `a_ij`; zero on the diagonal.
    #[inline]
    pub fn u(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.n + j]
    }

    /// `u_{i.}` for every node.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// `u_{.j}` for every node, including the reference node.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    /// Entry `(a, b)` of `V`.
    pub fn v_entry(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        match (a < n, b < n) {
            (true, true) if a == b => self.row_sums[a],
            (true, true) => 0.0,
            (true, false) => self.u(a, b - n),
            (false, true) => self.u(b, a - n),
            (false, false) if a == b => self.col_sums[a - n],
            (false, false) => 0.0,
        }
    }

    /// Row-major dense copy of `V`.
    pub fn v_dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                v[a * d + b] = self.v_entry(a, b);
            }
        }
        v
    }

    /// `V x` without forming `V`.
    pub fn v_mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; 2 * n - 1];
        for i in 0..n {
            let row = &self.u[i * n..i * n + n - 1];
            y[i] = self.row_sums[i] * x[i] + crate::linalg::dot(row, &x[n..]);
            for (j, &w) in row.iter().enumerate() {
                y[n + j] += w * x[i];
            }
        }
        for j in 0..n - 1 {
            y[n + j] += self.col_sums[j] * x[n + j];
        }
        y
    }

    /// `dF/d gamma'`, row-major `(2n - 1) x p`. Its transpose is `dQ/d eta'`.
    pub fn v_eta_gamma(&self) -> &[f64] {
        &self.v_eta_gamma
    }

    /// `dQ/d gamma' = sum mu'(pi_ij) z_ij z_ij'`, row-major `p x p`.
    pub fn v_gamma_gamma(&self) -> &[f64] {
        &self.v_gamma_gamma
    }

    /// Exact factorization of `V` exploiting its two diagonal blocks.
    pub fn factor(&self) -> Result<ArrowFactor> {
        let n = self.n;
        ArrowFactor::new(&self.row_sums, &self.col_sums[..n - 1], |i| &self.u[i * n..i * n + n])
            .ok_or(Error::SingularInformation("degree information matrix V"))
    }

    /// Schur complement `V_gg - V_eg' V^{-1} V_eg` (the profile information `H`).
    pub fn profile_information(&self) -> Result<Vec<f64>> {
        let factor = self.factor()?;
        Ok(self.profile_information_with(&factor).0)
    }

    /// `H` together with `V^{-1} V_eg`, reusing an existing factorization.
    pub(crate) fn profile_information_with(&self, factor: &ArrowFactor) -> (Vec<f64>, Vec<f64>) {
        let (d, p) = (self.dim(), self.p);
        let sol = factor.solve_columns(&self.v_eta_gamma, p);
        let mut h = self.v_gamma_gamma.clone();
        for k in 0..p {
            for l in 0..p {
                let mut s = 0.0;
                for a in 0..d {
                    s += self.v_eta_gamma[a * p + k] * sol[a * p + l];
                }
                h[k * p + l] -= s;
            }
        }
        // symmetrize rounding noise
        for k in 0..p {
            for l in 0..k {
                let avg = 0.5 * (h[k * p + l] + h[l * p + k]);
                h[k * p + l] = avg;
                h[l * p + k] = avg;
            }
        }
        (h, sol)
    }
}

/// Degree score `F` (length `2n - 1`).
pub fn score_f(net: &DirectedNetwork, cov: &EdgeCovariates, params: &ParamVector) -> Result<Vec<f64>> {
    check_shapes(net, cov, params)?;
    Ok(f_from_pi(net, &linear_predictors(params, cov)))
}

/// Covariate score `Q = sum_{i != j} z_ij (mu_ij - a_ij)`.
pub fn score_q(net: &DirectedNetwork, cov: &EdgeCovariates, params: &ParamVector) -> Result<Vec<f64>> {
    check_shapes(net, cov, params)?;
    Ok(q_from_pi(net, cov, &linear_predictors(params, cov)))
}

/// Information blocks `V`, `V_eg`, `V_gg` at `params`.
pub fn fisher_blocks(net: &DirectedNetwork, cov: &EdgeCovariates, params: &ParamVector) -> Result<FisherBlocks> {
    check_shapes(net, cov, params)?;
    Ok(FisherBlocks::from_pi(cov, &linear_predictors(params, cov)))
}

/// Rejects covariates whose second-moment matrix is rank deficient.
pub fn check_gamma_identified(cov: &EdgeCovariates) -> Result<()> {
    let p = cov.p();
    if p == 0 {
        return Ok(());
    }
    let m = cov.second_moment();
    let scale = (0..p).map(|k| m[k * p + k]).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::GammaUnidentified);
    }
    // Cholesky with a relative pivot floor doubles as a rank test.
    let mut l = m.clone();
    match crate::linalg::cholesky_in_place(&mut l, p) {
        Ok(()) => {
            let min_pivot = (0..p).map(|k| l[k * p + k] * l[k * p + k]).fold(f64::INFINITY, f64::min);
            if min_pivot <= 1e-10 * scale {
                Err(Error::GammaUnidentified)
            } else {
                Ok(())
            }
        }
        Err(_) => Err(Error::GammaUnidentified),
    }
}
