//! Data types of the covariate-p0 model and its pointwise likelihood.
//!
//! A directed edge `i -> j` is present with probability
//! `mu(nu + alpha_i + beta_j + z_ij' gamma)`, independently over ordered
//! pairs. `nu` is the density, `alpha` the outgoingness, `beta` the
//! incomingness and `gamma` the homophily coefficients.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::logistic::{bounded_transform, log1p_exp, mu};

/// Binary adjacency without self-loops plus cached degree sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedNetwork {
    n: usize,
    adjacency: Vec<u8>,
    out_degrees: Vec<usize>,
    in_degrees: Vec<usize>,
}

impl DirectedNetwork {
    /// Builds a network from a row-major `n x n` 0/1 matrix.
    pub fn from_adjacency(n: usize, adjacency: Vec<u8>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("network needs at least 2 nodes, got {n}")));
        }
        if adjacency.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "adjacency has {} entries, expected {}",
                adjacency.len(),
                n * n
            )));
        }
        let mut out_degrees = vec![0usize; n];
        let mut in_degrees = vec![0usize; n];
        for i in 0..n {
            for j in 0..n {
                match adjacency[i * n + j] {
                    0 => {}
                    1 if i == j => return Err(Error::SelfLoopRequested(i)),
                    1 => {
                        out_degrees[i] += 1;
                        in_degrees[j] += 1;
                    }
                    v => {
                        return Err(Error::InvalidInput(format!(
                            "adjacency entry ({i}, {j}) is {v}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(Self { n, adjacency, out_degrees, in_degrees })
    }

    /// Builds a network from ordered pairs. Repeated pairs are idempotent.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("network needs at least 2 nodes, got {n}")));
        }
        let mut adjacency = vec![0u8; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::SelfLoopRequested(i));
            }
            adjacency[i * n + j] = 1;
        }
        Self::from_adjacency(n, adjacency)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j] != 0
    }

    /// Row-major adjacency.
    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    pub fn out_degrees(&self) -> &[usize] {
        &self.out_degrees
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degrees
    }

    pub fn edge_count(&self) -> usize {
        self.out_degrees.iter().sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n * n).filter(move |&k| self.adjacency[k] != 0).map(move |k| (k / n, k % n))
    }

    /// Relabels nodes so that old node `perm[k]` becomes node `k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let n = self.n;
        let mut adjacency = vec![0u8; n * n];
        for a in 0..n {
            for b in 0..n {
                adjacency[a * n + b] = self.adjacency[perm[a] * n + perm[b]];
            }
        }
        Self::from_adjacency(n, adjacency)
    }
}

/// Covariate vectors `z_ij` for every ordered pair `i != j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCovariates {
    n: usize,
    p: usize,
    // n * n * p, diagonal blocks are zero and never read
    z: Vec<f64>,
}

impl EdgeCovariates {
    pub fn zeros(n: usize, p: usize) -> Self {
        Self { n, p, z: vec![0.0; n * n * p] }
    }

    /// Fills `z_ij` from a closure writing into a length-`p` slice.
    pub fn from_fn<F>(n: usize, p: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let mut out = Self::zeros(n, p);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let start = (i * n + j) * p;
                f(i, j, &mut out.z[start..start + p]);
            }
        }
        out.validate()?;
        Ok(out)
    }

    /// Wraps a row-major `n * n * p` buffer. Diagonal entries are zeroed.
    pub fn from_raw(n: usize, p: usize, mut z: Vec<f64>) -> Result<Self> {
        if z.len() != n * n * p {
            return Err(Error::ShapeMismatch(format!(
                "covariate buffer has {} entries, expected {}",
                z.len(),
                n * n * p
            )));
        }
        for i in 0..n {
            let start = (i * n + i) * p;
            z[start..start + p].iter_mut().for_each(|v| *v = 0.0);
        }
        let out = Self { n, p, z };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if let Some(pos) = self.z.iter().position(|v| !v.is_finite()) {
            let pair = pos / self.p.max(1);
            return Err(Error::InvalidInput(format!(
                "non-finite covariate at pair ({}, {})",
                pair / self.n,
                pair % self.n
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.p;
        &self.z[start..start + self.p]
    }

    #[inline]
    pub fn dot(&self, i: usize, j: usize, gamma: &[f64]) -> f64 {
        self.get(i, j).iter().zip(gamma).map(|(z, g)| z * g).sum()
    }

    /// `sup_ij ||z_ij||_inf`.
    pub fn z_max(&self) -> f64 {
        self.z.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `sum_{i != j} z_ij z_ij'`, row-major `p x p`.
    pub fn second_moment(&self) -> Vec<f64> {
        let p = self.p;
        let mut m = vec![0.0; p * p];
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let z = self.get(i, j);
                for a in 0..p {
                    for b in 0..p {
                        m[a * p + b] += z[a] * z[b];
                    }
                }
            }
        }
        m
    }

    /// Applies `e^z / (1 + e^z)` entrywise, for covariates without a bounded support.
    pub fn bounded(&self) -> Self {
        let mut out = self.clone();
        out.z.iter_mut().for_each(|v| *v = bounded_transform(*v));
        for i in 0..self.n {
            let start = (i * self.n + i) * self.p;
            out.z[start..start + self.p].iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    /// Same relabeling convention as [`DirectedNetwork::permuted`].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        let (n, p) = (self.n, self.p);
        let mut z = vec![0.0; n * n * p];
        for a in 0..n {
            for b in 0..n {
                let src = (perm[a] * n + perm[b]) * p;
                let dst = (a * n + b) * p;
                z[dst..dst + p].copy_from_slice(&self.z[src..src + p]);
            }
        }
        Ok(Self { n, p, z })
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::ShapeMismatch(format!("permutation of length {} for n = {n}", perm.len())));
    }
    for &k in perm {
        if k >= n || seen[k] {
            return Err(Error::InvalidInput(format!("not a permutation of 0..{n}")));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Identification restriction removing the two-dimensional translation
/// invariance of `(nu, alpha, beta)`. The reference node is always the last
/// node, index `n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Restriction {
    /// `alpha_n = beta_n = 0`, `nu` free. Used for data analysis.
    #[default]
    Practical,
    /// `nu = 0`, `beta_n = 0`.
    Theory,
}

impl Restriction {
    pub fn name(self) -> &'static str {
        match self {
            Restriction::Practical => "practical",
            Restriction::Theory => "theory",
        }
    }
}

/// Full parameter `(nu, alpha, beta, gamma)` under an identification restriction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamVector {
    pub nu: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub restriction: Restriction,
}

impl ParamVector {
    pub fn zeros(n: usize, p: usize, restriction: Restriction) -> Self {
        Self { nu: 0.0, alpha: vec![0.0; n], beta: vec![0.0; n], gamma: vec![0.0; p], restriction }
    }

    /// Validates lengths and that the entries pinned by `restriction` are zero.
    pub fn new(
        nu: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
        restriction: Restriction,
    ) -> Result<Self> {
        let out = Self { nu, alpha, beta, gamma, restriction };
        out.check()?;
        Ok(out)
    }

    /// Maps an arbitrary `(nu, alpha, beta)` onto `restriction` without
    /// changing any link probability.
    pub fn normalized(
        nu: f64,
        alpha: &[f64],
        beta: &[f64],
        gamma: Vec<f64>,
        restriction: Restriction,
    ) -> Self {
        let n = alpha.len();
        let (a_ref, b_ref) = (alpha[n - 1], beta[n - 1]);
        let beta: Vec<f64> = beta.iter().map(|b| b - b_ref).collect();
        match restriction {
            Restriction::Theory => Self {
                nu: 0.0,
                alpha: alpha.iter().map(|a| a + nu + b_ref).collect(),
                beta,
                gamma,
                restriction,
            },
            Restriction::Practical => Self {
                nu: nu + a_ref + b_ref,
                alpha: alpha.iter().map(|a| a - a_ref).collect(),
                beta,
                gamma,
                restriction,
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        let n = self.alpha.len();
        if n < 2 || self.beta.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "alpha has {} entries and beta {}",
                n,
                self.beta.len()
            )));
        }
        let all = core::iter::once(&self.nu).chain(&self.alpha).chain(&self.beta).chain(&self.gamma);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        let pinned_ok = match self.restriction {
            Restriction::Practical => self.alpha[n - 1] == 0.0 && self.beta[n - 1] == 0.0,
            Restriction::Theory => self.nu == 0.0 && self.beta[n - 1] == 0.0,
        };
        if !pinned_ok {
            return Err(Error::InvalidInput(format!(
                "parameters violate the {} restriction",
                self.restriction.name()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn to_restriction(&self, restriction: Restriction) -> Self {
        Self::normalized(self.nu, &self.alpha, &self.beta, self.gamma.clone(), restriction)
    }

    /// The `2n - 1` free degree coordinates `(alpha_1..alpha_n, beta_1..beta_{n-1})`
    /// of the equivalent theory-restricted parameter.
    pub fn theory_eta(&self) -> Vec<f64> {
        let n = self.n();
        let mut eta = Vec::with_capacity(2 * n - 1);
        let b_ref = self.beta[n - 1];
        eta.extend(self.alpha.iter().map(|a| a + self.nu + b_ref));
        eta.extend(self.beta[..n - 1].iter().map(|b| b - b_ref));
        eta
    }

    /// Inverse of [`theory_eta`](Self::theory_eta), expressed under `restriction`.
    pub fn from_theory_eta(eta: &[f64], gamma: Vec<f64>, restriction: Restriction) -> Self {
        let n = (eta.len() + 1) / 2;
        let alpha = &eta[..n];
        let mut beta = Vec::with_capacity(n);
        beta.extend_from_slice(&eta[n..]);
        beta.push(0.0);
        Self::normalized(0.0, alpha, &beta, gamma, restriction)
    }

    /// Free coordinates of this parameter under its own restriction, followed by gamma.
    ///
    /// Theory: `(alpha_1..alpha_n, beta_1..beta_{n-1}, gamma)`.
    /// Practical: `(nu, alpha_1..alpha_{n-1}, beta_1..beta_{n-1}, gamma)`.
    pub fn free_vector(&self) -> Vec<f64> {
        let n = self.n();
        let mut v = Vec::with_capacity(2 * n - 1 + self.p());
        match self.restriction {
            Restriction::Theory => v.extend_from_slice(&self.alpha),
            Restriction::Practical => {
                v.push(self.nu);
                v.extend_from_slice(&self.alpha[..n - 1]);
            }
        }
        v.extend_from_slice(&self.beta[..n - 1]);
        v.extend_from_slice(&self.gamma);
        v
    }

    pub fn from_free_vector(n: usize, p: usize, restriction: Restriction, v: &[f64]) -> Self {
        assert_eq!(v.len(), 2 * n - 1 + p, "free vector length");
        let mut out = Self::zeros(n, p, restriction);
        match restriction {
            Restriction::Theory => out.alpha.copy_from_slice(&v[..n]),
            Restriction::Practical => {
                out.nu = v[0];
                out.alpha[..n - 1].copy_from_slice(&v[1..n]);
            }
        }
        out.beta[..n - 1].copy_from_slice(&v[n..2 * n - 1]);
        out.gamma.copy_from_slice(&v[2 * n - 1..]);
        out
    }

    /// Linear predictor `pi_ij = nu + alpha_i + beta_j + z_ij' gamma`.
    #[inline]
    pub fn predictor(&self, cov: &EdgeCovariates, i: usize, j: usize) -> f64 {
        self.nu + self.alpha[i] + self.beta[j] + cov.dot(i, j, &self.gamma)
    }

    /// Relabels nodes; only meaningful for restrictions whose reference node
    /// stays last, so the result is re-normalized.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        let alpha: Vec<f64> = perm.iter().map(|&k| self.alpha[k]).collect();
        let beta: Vec<f64> = perm.iter().map(|&k| self.beta[k]).collect();
        Ok(Self::normalized(self.nu, &alpha, &beta, self.gamma.clone(), self.restriction))
    }
}

pub(crate) fn check_shapes(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    params: &ParamVector,
) -> Result<()> {
    if cov.n() != net.n() || params.n() != net.n() || params.p() != cov.p() {
        return Err(Error::ShapeMismatch(format!(
            "network n = {}, covariates (n = {}, p = {}), parameters (n = {}, p = {})",
            net.n(),
            cov.n(),
            cov.p(),
            params.n(),
            params.p()
        )));
    }
    Ok(())
}

/// `P(a_ij = 1)` under `params`.
pub fn link_probability(params: &ParamVector, cov: &EdgeCovariates, i: usize, j: usize) -> Result<f64> {
    let n = params.n();
    if i >= n || j >= n || cov.n() != n || cov.p() != params.p() {
        return Err(Error::ShapeMismatch(format!("pair ({i}, {j}) for n = {n}")));
    }
    if i == j {
        return Err(Error::SelfLoopRequested(i));
    }
    Ok(mu(params.predictor(cov, i, j)))
}

/// Row-major `n x n` matrix of linear predictors (diagonal left at 0).
pub fn linear_predictors(params: &ParamVector, cov: &EdgeCovariates) -> Vec<f64> {
    let n = params.n();
    let mut pi = vec![0.0; n * n];
    for i in 0..n {
        let base = params.nu + params.alpha[i];
        for j in 0..n {
            if i != j {
                pi[i * n + j] = base + params.beta[j] + cov.dot(i, j, &params.gamma);
            }
        }
    }
    pi
}

/// Log-likelihood
/// `sum a_ij (nu + z_ij'gamma) + alpha'd + beta'b - sum log(1 + e^{pi_ij})`.
pub fn log_likelihood(net: &DirectedNetwork, cov: &EdgeCovariates, params: &ParamVector) -> Result<f64> {
    check_shapes(net, cov, params)?;
    let n = net.n();
    let mut edge_part = 0.0;
    let mut log_partition = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let zg = cov.dot(i, j, &params.gamma);
            if net.has_edge(i, j) {
                edge_part += params.nu + zg;
            }
            log_partition += log1p_exp(params.nu + params.alpha[i] + params.beta[j] + zg);
        }
    }
    let degree_part: f64 = params
        .alpha
        .iter()
        .zip(net.out_degrees())
        .chain(params.beta.iter().zip(net.in_degrees()))
        .map(|(p, &d)| p * d as f64)
        .sum();
    Ok(edge_part + degree_part - log_partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_instance, Lcg};

    fn bernoulli_loglik(net: &DirectedNetwork, cov: &EdgeCovariates, params: &ParamVector) -> f64 {
        let n = net.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let eta = params.nu + params.alpha[i] + params.beta[j];
                let lin = eta + cov.get(i, j).iter().zip(&params.gamma).map(|(a, b)| a * b).sum::<f64>();
                let m = libm::exp(lin) / (1.0 + libm::exp(lin));
                s += if net.has_edge(i, j) { libm::log(m) } else { libm::log(1.0 - m) };
            }
        }
        s
    }

    #[test]
    fn degrees_are_consistent() {
        let net = DirectedNetwork::from_edges(3, &[(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
        assert_eq!(net.out_degrees(), &[2, 1, 1]);
        assert_eq!(net.in_degrees(), &[1, 1, 2]);
        assert_eq!(net.out_degrees().iter().sum::<usize>(), net.in_degrees().iter().sum::<usize>());
        assert!(matches!(
            DirectedNetwork::from_edges(3, &[(1, 1)]),
            Err(Error::SelfLoopRequested(1))
        ));
        let mut adj = vec![0u8; 4];
        adj[0] = 1;
        assert!(DirectedNetwork::from_adjacency(2, adj).is_err());
    }

    #[test]
    fn link_probability_examples() {
        let cov = EdgeCovariates::zeros(3, 1);
        let params = ParamVector::zeros(3, 1, Restriction::Practical);
        assert_eq!(link_probability(&params, &cov, 0, 1).unwrap(), 0.5);
        assert!(matches!(link_probability(&params, &cov, 2, 2), Err(Error::SelfLoopRequested(2))));

        let mut p2 = params.clone();
        p2.nu = libm::log(1.0 / 3.0);
        assert!((link_probability(&p2, &cov, 1, 0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn link_probability_matches_scalar_evaluation() {
        let mut rng = Lcg::new(11);
        let (_, cov, params) = random_instance(&mut rng, 3, 2, Restriction::Practical);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let z = cov.get(i, j);
                let x = params.nu + params.alpha[i] + params.beta[j] + z[0] * params.gamma[0] + z[1] * params.gamma[1];
                let expect = 1.0 / (1.0 + libm::exp(-x));
                assert!((link_probability(&params, &cov, i, j).unwrap() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_node_null_loglik() {
        let cov = EdgeCovariates::zeros(2, 1);
        let params = ParamVector::zeros(2, 1, Restriction::Practical);
        for edges in [&[][..], &[(0, 1)][..], &[(0, 1), (1, 0)][..]] {
            let net = DirectedNetwork::from_edges(2, edges).unwrap();
            let ll = log_likelihood(&net, &cov, &params).unwrap();
            assert!((ll + 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn loglik_matches_bernoulli_form() {
        let mut rng = Lcg::new(3);
        for restriction in [Restriction::Practical, Restriction::Theory] {
            for _ in 0..5 {
                let (net, cov, params) = random_instance(&mut rng, 3, 2, restriction);
                let a = log_likelihood(&net, &cov, &params).unwrap();
                let b = bernoulli_loglik(&net, &cov, &params);
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn loglik_restriction_equivalence() {
        let mut rng = Lcg::new(5);
        let (net, cov, params) = random_instance(&mut rng, 5, 1, Restriction::Practical);
        let theory = params.to_restriction(Restriction::Theory);
        theory.check().unwrap();
        let a = log_likelihood(&net, &cov, &params).unwrap();
        let b = log_likelihood(&net, &cov, &theory).unwrap();
        assert!((a - b).abs() < 1e-10);
        let back = theory.to_restriction(Restriction::Practical);
        for (x, y) in back.free_vector().iter().zip(params.free_vector()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_violation_is_rejected() {
        let mut p = ParamVector::zeros(3, 0, Restriction::Theory);
        p.nu = 1.0;
        assert!(p.check().is_err());
        let mut p = ParamVector::zeros(3, 0, Restriction::Practical);
        p.alpha[2] = 1.0;
        assert!(p.check().is_err());
    }

    #[test]
    fn bounded_transform_keeps_diagonal_zero() {
        let cov = EdgeCovariates::from_fn(3, 1, |i, j, z| z[0] = (i * 10 + j) as f64).unwrap();
        let b = cov.bounded();
        assert_eq!(b.get(1, 1), &[0.0]);
        assert!((b.get(0, 1)[0] - mu(1.0)).abs() < 1e-15);
        assert!(b.z_max() < 1.0);
    }

    proptest::proptest! {
        #[test]
        fn loglik_translation_invariance(seed in 0u64..1000, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let mut rng = Lcg::new(seed);
            let (net, cov, params) = random_instance(&mut rng, 4, 1, Restriction::Practical);
            let mut shifted = params.clone();
            shifted.nu += 2.0 * c2;
            shifted.alpha.iter_mut().for_each(|a| *a -= c1 + c2);
            shifted.beta.iter_mut().for_each(|b| *b += c1 - c2);
            let a = log_likelihood(&net, &cov, &params).unwrap();
            let b = log_likelihood(&net, &cov, &shifted).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
