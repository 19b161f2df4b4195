//! Standard errors, contrast tests, covariate bias correction and signal recovery.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::linalg::spd_inverse;
use crate::logistic::{mu_derivatives, normal_quantile, two_sided_p};
use crate::model::{check_shapes, linear_predictors, DirectedNetwork, EdgeCovariates, ParamVector, Restriction};
use crate::score::FisherBlocks;

/// Closed-form approximate inverse of `V`.
///
/// With `r_i = 1/u_{i.}` and `c_j = 1/u_{.j}`, the entries are
/// `s_ab = delta_ab r_a + c_n` in the out-degree block, `-c_n` across blocks,
/// and `delta_ab c_{a-n} + c_n` in the in-degree block. Stored by its
/// `O(n)` generators; [`dense`](Self::dense) materializes it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SMatrix {
    n: usize,
    inv_rows: Vec<f64>,
    inv_cols: Vec<f64>,
}

impl SMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n - 1
    }

    fn inv_ref_col(&self) -> f64 {
        self.inv_cols[self.n - 1]
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let c_n = self.inv_ref_col();
        match (a < n, b < n) {
            (true, true) => c_n + if a == b { self.inv_rows[a] } else { 0.0 },
            (false, false) => c_n + if a == b { self.inv_cols[a - n] } else { 0.0 },
            _ => -c_n,
        }
    }

    pub fn dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                out[a * d + b] = self.entry(a, b);
            }
        }
        out
    }

    /// `S x` in `O(n)`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let c_n = self.inv_ref_col();
        let s_out: f64 = x[..n].iter().sum();
        let s_in: f64 = x[n..].iter().sum();
        let mut y = Vec::with_capacity(self.dim());
        for i in 0..n {
            y.push(self.inv_rows[i] * x[i] + c_n * (s_out - s_in));
        }
        for j in 0..n - 1 {
            y.push(self.inv_cols[j] * x[n + j] + c_n * (s_in - s_out));
        }
        y
    }
}

fn check_sums(blocks: &FisherBlocks) -> Result<()> {
    let ok = |v: &f64| *v > 0.0 && v.is_finite();
    if !blocks.row_sums().iter().all(ok) {
        return Err(Error::DegenerateVariance("a row sum of the Bernoulli variances is zero"));
    }
    if !blocks.col_sums().iter().all(ok) {
        return Err(Error::DegenerateVariance("a column sum of the Bernoulli variances is zero"));
    }
    Ok(())
}

pub fn s_matrix(blocks: &FisherBlocks) -> Result<SMatrix> {
    check_sums(blocks)?;
    Ok(SMatrix {
        n: blocks.n(),
        inv_rows: blocks.row_sums().iter().map(|v| 1.0 / v).collect(),
        inv_cols: blocks.col_sums().iter().map(|v| 1.0 / v).collect(),
    })
}

/// `sqrt(s_aa)` for the `2n - 1` theory-restricted degree parameters.
pub fn eta_standard_errors(blocks: &FisherBlocks) -> Result<Vec<f64>> {
    let s = s_matrix(blocks)?;
    Ok((0..s.dim()).map(|a| libm::sqrt(s.entry(a, a))).collect())
}

/// Standard errors of the degree parameters under one restriction.
///
/// Pinned coordinates (the reference node's `beta`, and its `alpha` under
/// the practical restriction) carry `NaN`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DegreeStandardErrors {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Present under the practical restriction only.
    pub nu: Option<f64>,
}

/// Standard errors derived from the `S` covariance, mapped to `restriction`.
///
/// Under the practical restriction `alpha_i = a_i - a_n` and `nu = a_n` in
/// terms of the theory coordinates `a`, so
/// `var(alpha_i) = 1/u_{i.} + 1/u_{n.}`, `var(beta_j) = 1/u_{.j} + 1/u_{.n}`
/// and `var(nu) = 1/u_{n.} + 1/u_{.n}`.
pub fn degree_standard_errors(blocks: &FisherBlocks, restriction: Restriction) -> Result<DegreeStandardErrors> {
    let s = s_matrix(blocks)?;
    let n = s.n;
    let mut beta: Vec<f64> = (0..n - 1).map(|j| libm::sqrt(s.entry(n + j, n + j))).collect();
    beta.push(f64::NAN);
    Ok(match restriction {
        Restriction::Theory => DegreeStandardErrors {
            alpha: (0..n).map(|i| libm::sqrt(s.entry(i, i))).collect(),
            beta,
            nu: None,
        },
        Restriction::Practical => {
            let r_ref = s.inv_rows[n - 1];
            let mut alpha: Vec<f64> = (0..n - 1).map(|i| libm::sqrt(s.inv_rows[i] + r_ref)).collect();
            alpha.push(f64::NAN);
            DegreeStandardErrors { alpha, beta, nu: Some(libm::sqrt(s.entry(n - 1, n - 1))) }
        }
    })
}

/// Standard error of the density estimate under the practical restriction.
pub fn nu_standard_error(blocks: &FisherBlocks, restriction: Restriction) -> Result<f64> {
    match restriction {
        Restriction::Theory => Err(Error::RestrictionMismatch { expected: "practical" }),
        Restriction::Practical => {
            check_sums(blocks)?;
            let n = blocks.n();
            Ok(libm::sqrt(1.0 / blocks.row_sums()[n - 1] + 1.0 / blocks.col_sums()[n - 1]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ContrastKind {
    /// `alpha_i - alpha_j`.
    OutDifference,
    /// `alpha_i + beta_j`.
    OutInSum,
    /// `beta_i - beta_j`.
    InDifference,
}

/// A linear contrast of two degree parameters with its plug-in standard error
/// `(1/v_aa + 1/v_bb)^{1/2}`, where `v_aa` is the matching diagonal entry of `V`
/// (`u_{i.}` for out-degree and `u_{.j}` for in-degree parameters).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Contrast {
    pub kind: ContrastKind,
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub se: f64,
}

impl Contrast {
    /// Standardized statistic against the hypothesized value `null`.
    pub fn statistic(&self, null: f64) -> f64 {
        if self.kind != ContrastKind::OutInSum && self.i == self.j {
            return 0.0;
        }
        (self.estimate - null) / self.se
    }

    pub fn p_value(&self, null: f64) -> f64 {
        two_sided_p(self.statistic(null))
    }

    pub fn confidence_interval(&self, level: f64) -> (f64, f64) {
        let half = critical_value(level) * self.se;
        (self.estimate - half, self.estimate + half)
    }
}

/// Two-sided normal critical value for confidence `level` in (0, 1).
pub fn critical_value(level: f64) -> f64 {
    normal_quantile(0.5 + 0.5 * level)
}

pub fn contrast(
    params: &ParamVector,
    blocks: &FisherBlocks,
    kind: ContrastKind,
    i: usize,
    j: usize,
) -> Result<Contrast> {
    check_sums(blocks)?;
    let n = blocks.n();
    if params.n() != n || i >= n || j >= n {
        return Err(Error::ShapeMismatch(alloc::format!("contrast ({i}, {j}) for n = {n}")));
    }
    let (rows, cols) = (blocks.row_sums(), blocks.col_sums());
    let (estimate, var) = match kind {
        ContrastKind::OutDifference => (params.alpha[i] - params.alpha[j], 1.0 / rows[i] + 1.0 / rows[j]),
        ContrastKind::OutInSum => (params.alpha[i] + params.beta[j], 1.0 / rows[i] + 1.0 / cols[j]),
        ContrastKind::InDifference => (params.beta[i] - params.beta[j], 1.0 / cols[i] + 1.0 / cols[j]),
    };
    Ok(Contrast { kind, i, j, estimate, se: libm::sqrt(var) })
}

/// Normalized covariate information `I = H / N` and plug-in bias `B`, `N = n(n-1)`.
///
/// `B = -(2 sqrt N)^{-1} [sum_i (sum_j mu''_ij w_ij) / u_{i.} + sum_j (sum_i mu''_ij w_ij) / u_{.j}]`
/// where `w_ij = z_ij - (s_i + t_j)` is the covariate with its weighted
/// projection onto the sender and receiver effects removed, `(s, t) = V^{-1} V_eg`.
/// `I^{-1} B` then estimates the mean of `sqrt(N) (gamma_hat - gamma*)`.
pub fn gamma_information_and_bias(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    params: &ParamVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shapes(net, cov, params)?;
    let (n, p) = (net.n(), cov.p());
    let pi = linear_predictors(params, cov);
    let blocks = FisherBlocks::from_pi(cov, &pi);
    check_sums(&blocks)?;
    let big_n = (n * (n - 1)) as f64;
    let (h, sol) = blocks.profile_information_with(&blocks.factor()?);
    let i_hat: Vec<f64> = h.iter().map(|v| v / big_n).collect();

    let mut row_acc = vec![0.0; n * p];
    let mut col_acc = vec![0.0; n * p];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (_, d2, _) = mu_derivatives(pi[i * n + j]);
            for (k, z) in cov.get(i, j).iter().enumerate() {
                let t = if j + 1 < n { sol[(n + j) * p + k] } else { 0.0 };
                let w = z - sol[i * p + k] - t;
                row_acc[i * p + k] += d2 * w;
                col_acc[j * p + k] += d2 * w;
            }
        }
    }
    let mut b_hat = vec![0.0; p];
    for (k, b) in b_hat.iter_mut().enumerate() {
        let rows: f64 = (0..n).map(|i| row_acc[i * p + k] / blocks.row_sums()[i]).sum();
        let cols: f64 = (0..n).map(|j| col_acc[j * p + k] / blocks.col_sums()[j]).sum();
        *b = -(rows + cols) / (2.0 * libm::sqrt(big_n));
    }
    Ok((i_hat, b_hat))
}

/// `gamma - I^{-1} B / sqrt(n(n-1))`.
pub fn bias_corrected_gamma(gamma_hat: &[f64], i_hat: &[f64], b_hat: &[f64], n: usize) -> Result<Vec<f64>> {
    let p = gamma_hat.len();
    if i_hat.len() != p * p || b_hat.len() != p {
        return Err(Error::ShapeMismatch(alloc::format!("gamma has {p} entries")));
    }
    if p == 0 {
        return Ok(Vec::new());
    }
    let inv = spd_inverse(i_hat, p).ok_or(Error::SingularInformation("normalized covariate information I"))?;
    let scale = libm::sqrt((n * (n - 1)) as f64);
    Ok((0..p)
        .map(|k| {
            let shift: f64 = (0..p).map(|l| inv[k * p + l] * b_hat[l]).sum();
            gamma_hat[k] - shift / scale
        })
        .collect())
}

/// Standard errors `sqrt(diag(I^{-1}) / N)` of the covariate coefficients.
pub fn gamma_standard_errors(i_hat: &[f64], n: usize) -> Result<Vec<f64>> {
    let p = libm::sqrt(i_hat.len() as f64) as usize;
    if p * p != i_hat.len() {
        return Err(Error::ShapeMismatch("information matrix is not square".into()));
    }
    if p == 0 {
        return Ok(Vec::new());
    }
    let inv = spd_inverse(i_hat, p).ok_or(Error::SingularInformation("normalized covariate information I"))?;
    let big_n = (n * (n - 1)) as f64;
    Ok((0..p).map(|k| libm::sqrt(inv[k * p + k] / big_n)).collect())
}

/// Nodes whose estimated in-degree parameter reaches `threshold`.
pub fn recover_signals(params: &ParamVector, threshold: f64) -> Vec<usize> {
    params.beta.iter().enumerate().filter(|(_, &b)| b >= threshold).map(|(i, _)| i).collect()
}

/// Everything the reports need from one converged fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InferenceReport {
    pub restriction: Restriction,
    pub ci_level: f64,
    /// Theory-coordinate standard errors `sqrt(s_aa)`.
    pub se_eta: Vec<f64>,
    pub se_alpha: Vec<f64>,
    pub se_beta: Vec<f64>,
    pub se_nu: Option<f64>,
    pub gamma_hat: Vec<f64>,
    pub gamma_bc: Vec<f64>,
    pub gamma_se: Vec<f64>,
    /// Two-sided Wald p-values for `gamma_k = 0`, from the corrected estimate.
    pub gamma_p_values: Vec<f64>,
    pub i_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub recovered_set: Option<Vec<usize>>,
}

impl InferenceReport {
    pub fn nu_p_value(&self, nu_hat: f64) -> Option<f64> {
        self.se_nu.map(|se| two_sided_p(nu_hat / se))
    }
}

/// Runs every inference step on a fit.
pub fn infer(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    fit: &FitResult,
    ci_level: f64,
    threshold: Option<f64>,
) -> Result<InferenceReport> {
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(Error::InvalidInput(alloc::format!("confidence level {ci_level} outside (0, 1)")));
    }
    let fit = fit.clone().require_converged()?;
    let params = &fit.params_hat;
    check_shapes(net, cov, params)?;
    let n = net.n();
    let blocks = FisherBlocks::from_pi(cov, &linear_predictors(params, cov));
    let se_eta = eta_standard_errors(&blocks)?;
    let ses = degree_standard_errors(&blocks, params.restriction)?;
    let (i_hat, b_hat) = gamma_information_and_bias(net, cov, params)?;
    let gamma_bc = bias_corrected_gamma(&params.gamma, &i_hat, &b_hat, n)?;
    let gamma_se = gamma_standard_errors(&i_hat, n)?;
    let gamma_p_values = gamma_bc.iter().zip(&gamma_se).map(|(g, s)| two_sided_p(g / s)).collect();
    Ok(InferenceReport {
        restriction: params.restriction,
        ci_level,
        se_eta,
        se_alpha: ses.alpha,
        se_beta: ses.beta,
        se_nu: ses.nu,
        gamma_hat: params.gamma.clone(),
        gamma_bc,
        gamma_se,
        gamma_p_values,
        i_hat,
        b_hat,
        recovered_set: threshold.map(|t| recover_signals(params, t)),
    })
}
