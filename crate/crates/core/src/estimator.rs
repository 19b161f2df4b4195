//! Two-stage maximum likelihood solver.
//!
//! For fixed `gamma` the degree parameters are profiled out by Newton's
//! method on `F_gamma(eta) = 0`, solving each linear system exactly with the
//! arrow factorization of `V`. The outer loop runs Newton on the profile
//! score `Q_c(gamma) = Q(eta_hat(gamma), gamma)` with Jacobian
//! `H = V_gg - V_eg' V^{-1} V_eg`.
//!
//! Internally every iterate lives in theory coordinates (`nu = 0`,
//! `beta_n = 0`); the result is mapped to the requested restriction at the end.
//! Both steps backtrack by halving whenever the (profile) log-likelihood would
//! decrease, so the undamped Newton iteration is the special case where every
//! full step is accepted.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, NonExistenceKind, Result};
use crate::linalg::{inf_norm, inf_norm_matrix, spd_inverse, spd_solve, ArrowFactor};
use crate::model::{DirectedNetwork, EdgeCovariates, ParamVector, Restriction};
use crate::score::{check_gamma_identified, f_from_pi, loglik_from_pi, mu_pair, q_from_pi, variances_from_pi, FisherBlocks};

/// Outer algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    /// Profile Newton: inner Newton for `eta`, outer Newton on `Q_c`.
    #[default]
    ProfileNewton,
    /// Alternate a fixed-point sweep over `eta` with one Newton step in `gamma`
    /// at fixed `eta`. Slower; kept for cross-checking.
    Alternating,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    /// Stop the inner solve once `||F||_inf` is at most this.
    pub tol_inner: f64,
    /// Stop the outer solve once `||Q_c||_inf` is at most this.
    pub tol_outer: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    /// `||eta||_inf` (or `||gamma||_inf`) beyond which the estimate is declared divergent.
    pub divergence_bound: f64,
    pub algorithm: Algorithm,
    /// Record per-iteration Newton-Kantorovich diagnostics for the outer loop.
    pub kantorovich: bool,
    /// Starting point; zeros when absent.
    pub warm_start: Option<ParamVector>,
    /// Sweep budget of the alternating algorithm.
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol_inner: 1e-10,
            tol_outer: 1e-8,
            max_inner: 100,
            max_outer: 50,
            divergence_bound: 30.0,
            algorithm: Algorithm::ProfileNewton,
            kantorovich: false,
            warm_start: None,
            max_sweeps: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Existence {
    Exists,
    NonexistentDiverged,
    NonexistentMaxiter,
}

impl From<NonExistenceKind> for Existence {
    fn from(k: NonExistenceKind) -> Self {
        match k {
            NonExistenceKind::Diverged => Existence::NonexistentDiverged,
            NonExistenceKind::MaxIterations => Existence::NonexistentMaxiter,
        }
    }
}

/// Newton-Kantorovich quantities of one outer step: `aleph = ||H^{-1}||`,
/// `delta = ||H^{-1} Q_c||`, a sampled Lipschitz proxy `lambda` for `H`, and
/// `rho = 2 aleph lambda delta`. Heuristic only: `lambda` is a finite-difference
/// estimate, not a certified bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KantorovichStep {
    pub aleph: f64,
    pub lambda: f64,
    pub delta: f64,
    pub rho: f64,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params_hat: ParamVector,
    pub converged: bool,
    pub existence: Existence,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// `(||F||_inf, ||Q||_inf)` at the returned point.
    pub final_score_norms: (f64, f64),
    pub log_likelihood: f64,
    /// Profile log-likelihood after each accepted outer step.
    pub loglik_trace: Vec<f64>,
    pub kantorovich_trace: Option<Vec<KantorovichStep>>,
}

impl FitResult {
    pub fn exists(&self) -> bool {
        self.existence == Existence::Exists
    }

    /// Turns a non-existent or unconverged fit into an error.
    pub fn require_converged(self) -> Result<Self> {
        match self.existence {
            Existence::Exists if self.converged => Ok(self),
            Existence::NonexistentDiverged => Err(Error::NonExistence {
                kind: NonExistenceKind::Diverged,
                iterations: self.inner_iterations,
            }),
            _ => Err(Error::NonExistence {
                kind: NonExistenceKind::MaxIterations,
                iterations: self.inner_iterations,
            }),
        }
    }
}

/// Converged inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `eta_hat(gamma)` in theory coordinates, length `2n - 1`.
    pub eta: Vec<f64>,
    pub iterations: usize,
    pub score_norm: f64,
    /// Log-likelihood after each accepted step (non-decreasing).
    pub loglik_trace: Vec<f64>,
}

/// Largest final Newton step accepted as convergence.
const STEP_TOL: f64 = 1e-4;

struct Problem<'a> {
    net: &'a DirectedNetwork,
    cov: &'a EdgeCovariates,
    n: usize,
    opts: &'a FitOptions,
}

struct InnerState {
    eta: Vec<f64>,
    pi: Vec<f64>,
    loglik: f64,
    iterations: usize,
    score_norm: f64,
    trace: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(net: &'a DirectedNetwork, cov: &'a EdgeCovariates, opts: &'a FitOptions) -> Result<Self> {
        if cov.n() != net.n() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "network has {} nodes, covariates {}",
                net.n(),
                cov.n()
            )));
        }
        Ok(Self { net, cov, n: net.n(), opts })
    }

    fn gamma_offsets(&self, gamma: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut zg = vec![0.0; n * n];
        if gamma.iter().all(|&g| g == 0.0) {
            return zg;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    zg[i * n + j] = self.cov.dot(i, j, gamma);
                }
            }
        }
        zg
    }

    fn predictors(&self, eta: &[f64], zg: &[f64], pi: &mut Vec<f64>) {
        let n = self.n;
        pi.resize(n * n, 0.0);
        for i in 0..n {
            let a = eta[i];
            for j in 0..n {
                let b = if j + 1 < n { eta[n + j] } else { 0.0 };
                pi[i * n + j] = if i == j { 0.0 } else { a + b + zg[i * n + j] };
            }
        }
    }

    fn line_search_slack(loglik: f64) -> f64 {
        1e-12 * (1.0 + loglik.abs())
    }

    /// Damped Newton for `F_gamma(eta) = 0` from `eta0`.
    fn inner(&self, zg: &[f64], eta0: Vec<f64>) -> Result<InnerState> {
        let n = self.n;
        let mut eta = eta0;
        let mut pi = Vec::new();
        self.predictors(&eta, zg, &mut pi);
        let mut loglik = loglik_from_pi(self.net, &pi);
        let mut f = f_from_pi(self.net, &pi);
        let mut trace = vec![loglik];
        let mut cand = vec![0.0; eta.len()];
        let mut pi_c = Vec::new();
        let mut best_norm = f64::INFINITY;
        let mut stalled = 0usize;
        for it in 0..=self.opts.max_inner {
            let norm = inf_norm(&f);
            if norm < best_norm {
                best_norm = norm;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if it == self.opts.max_inner || stalled > 10 {
                break;
            }
            let (u, rows, cols) = variances_from_pi(n, &pi);
            let factor = match ArrowFactor::new(&rows, &cols[..n - 1], |i| &u[i * n..i * n + n]) {
                Some(f) => f,
                // Variances underflow only when probabilities saturate.
                None => return Err(Error::NonExistence { kind: NonExistenceKind::Diverged, iterations: it }),
            };
            let step = factor.solve(&f);
            // A small score alone is not enough: along a divergent direction the
            // score decays geometrically while Newton keeps stepping by O(1).
            if norm <= self.opts.tol_inner && inf_norm(&step) <= STEP_TOL {
                return Ok(InnerState { eta, pi, loglik, iterations: it, score_norm: norm, trace });
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                for ((c, e), s) in cand.iter_mut().zip(&eta).zip(&step) {
                    *c = e - t * s;
                }
                self.predictors(&cand, zg, &mut pi_c);
                let ll = loglik_from_pi(self.net, &pi_c);
                if ll >= loglik - Self::line_search_slack(loglik) {
                    core::mem::swap(&mut eta, &mut cand);
                    core::mem::swap(&mut pi, &mut pi_c);
                    loglik = ll;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            trace.push(loglik);
            if inf_norm(&eta) > self.opts.divergence_bound {
                return Err(Error::NonExistence { kind: NonExistenceKind::Diverged, iterations: it + 1 });
            }
            f = f_from_pi(self.net, &pi);
        }
        Err(Error::NonExistence { kind: NonExistenceKind::MaxIterations, iterations: self.opts.max_inner })
    }

    fn blocks(&self, pi: &[f64]) -> FisherBlocks {
        FisherBlocks::from_pi(self.cov, pi)
    }

    fn profile_jacobian_at(&self, pi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let blocks = self.blocks(pi);
        let factor = blocks.factor()?;
        Ok(blocks.profile_information_with(&factor))
    }

    fn check_degenerate(&self) -> Result<()> {
        let n = self.n;
        for (node, (&d, &b)) in self.net.out_degrees().iter().zip(self.net.in_degrees()).enumerate() {
            let what = if d == 0 {
                "out-degree 0"
            } else if d == n - 1 {
                "full out-degree"
            } else if b == 0 {
                "in-degree 0"
            } else if b == n - 1 {
                "full in-degree"
            } else {
                continue;
            };
            return Err(Error::DegenerateNetwork { node, what });
        }
        Ok(())
    }

    fn start(&self, p: usize) -> (Vec<f64>, Vec<f64>) {
        match &self.opts.warm_start {
            Some(w) if w.n() == self.n && w.p() == p => (w.theory_eta(), w.gamma.clone()),
            _ => (vec![0.0; 2 * self.n - 1], vec![0.0; p]),
        }
    }

    fn lipschitz_proxy(&self, gamma: &[f64], eta: &[f64], h_at: &[f64]) -> Result<f64> {
        let p = gamma.len();
        let mut lambda = 0.0f64;
        for k in 0..p {
            let step = 1e-4 * (1.0 + gamma[k].abs());
            let mut g = gamma.to_vec();
            g[k] += step;
            let zg = self.gamma_offsets(&g);
            let st = self.inner(&zg, eta.to_vec())?;
            let (h2, _) = self.profile_jacobian_at(&st.pi)?;
            let diff: Vec<f64> = h2.iter().zip(h_at).map(|(a, b)| a - b).collect();
            lambda = lambda.max(inf_norm_matrix(&diff, p, p) / step);
        }
        Ok(lambda)
    }

    fn fit_newton(&self, p: usize) -> Result<FitResult> {
        let (eta0, mut gamma) = self.start(p);
        let mut zg = self.gamma_offsets(&gamma);
        let mut inner_total = 0usize;
        let mut state = match self.inner(&zg, eta0) {
            Ok(s) => s,
            Err(Error::NonExistence { kind, iterations }) => {
                return Ok(self.failed(kind, iterations, 0, gamma, p));
            }
            Err(e) => return Err(e),
        };
        inner_total += state.iterations;
        let mut loglik_trace = vec![state.loglik];
        let mut kantorovich = if self.opts.kantorovich { Some(Vec::new()) } else { None };
        let mut outer = 0usize;
        let last_q;
        loop {
            let q = q_from_pi(self.net, self.cov, &state.pi);
            let q_norm = inf_norm(&q);
            if p == 0 {
                last_q = q_norm;
                break;
            }
            let (h, sol) = self.profile_jacobian_at(&state.pi)?;
            let step = spd_solve(&h, p, &q).ok_or(Error::SingularInformation("profile information H"))?;
            if q_norm <= self.opts.tol_outer && inf_norm(&step) <= STEP_TOL {
                last_q = q_norm;
                break;
            }
            if outer == self.opts.max_outer {
                return Ok(self.failed(NonExistenceKind::MaxIterations, inner_total, outer, gamma, p));
            }
            outer += 1;
            if let Some(trace) = kantorovich.as_mut() {
                let h_inv = spd_inverse(&h, p).ok_or(Error::SingularInformation("profile information H"))?;
                let aleph = inf_norm_matrix(&h_inv, p, p);
                let delta = inf_norm(&step);
                let lambda = self.lipschitz_proxy(&gamma, &state.eta, &h)?;
                trace.push(KantorovichStep { aleph, lambda, delta, rho: 2.0 * aleph * lambda * delta });
            }
            // d eta_hat / d gamma' = -V^{-1} V_eg gives a first-order warm start.
            let dim = 2 * self.n - 1;
            let mut t = 1.0;
            let mut next = None;
            for _ in 0..40 {
                let cand_gamma: Vec<f64> = gamma.iter().zip(&step).map(|(g, s)| g - t * s).collect();
                let mut eta_pred = state.eta.clone();
                for a in 0..dim {
                    let mut s = 0.0;
                    for k in 0..p {
                        s += sol[a * p + k] * step[k];
                    }
                    eta_pred[a] += t * s;
                }
                let cand_zg = self.gamma_offsets(&cand_gamma);
                match self.inner(&cand_zg, eta_pred) {
                    Ok(st) => {
                        inner_total += st.iterations;
                        if st.loglik >= state.loglik - Self::line_search_slack(state.loglik) {
                            next = Some((cand_gamma, cand_zg, st));
                            break;
                        }
                    }
                    Err(Error::NonExistence { iterations, .. }) => inner_total += iterations,
                    Err(e) => return Err(e),
                }
                t *= 0.5;
            }
            let Some((g, z, st)) = next else {
                // No acceptable step: either converged to the noise floor or stuck.
                if q_norm <= 1e3 * self.opts.tol_outer {
                    last_q = q_norm;
                    break;
                }
                return Ok(self.failed(NonExistenceKind::MaxIterations, inner_total, outer, gamma, p));
            };
            gamma = g;
            zg = z;
            state = st;
            loglik_trace.push(state.loglik);
            if inf_norm(&gamma) > self.opts.divergence_bound {
                return Ok(self.failed(NonExistenceKind::Diverged, inner_total, outer, gamma, p));
            }
        }
        let _ = zg;
        let f_norm = state.score_norm;
        let converged = last_q <= self.opts.tol_outer || p == 0;
        let params_hat = ParamVector::from_theory_eta(&state.eta, gamma, Restriction::Theory);
        Ok(FitResult {
            params_hat,
            converged,
            existence: if converged { Existence::Exists } else { Existence::NonexistentMaxiter },
            inner_iterations: inner_total,
            outer_iterations: outer,
            final_score_norms: (f_norm, last_q),
            log_likelihood: state.loglik,
            loglik_trace,
            kantorovich_trace: kantorovich,
        })
    }

    fn fit_alternating(&self, p: usize) -> Result<FitResult> {
        let n = self.n;
        let (mut eta, mut gamma) = self.start(p);
        let mut pi = Vec::new();
        let out_deg: Vec<f64> = self.net.out_degrees().iter().map(|&d| d as f64).collect();
        let in_deg: Vec<f64> = self.net.in_degrees().iter().map(|&d| d as f64).collect();
        let mut loglik_trace = Vec::new();
        for sweep in 1..=self.opts.max_sweeps {
            let zg = self.gamma_offsets(&gamma);
            // alpha_i <- alpha_i + log(d_i / sum_k mu(pi_ik))
            self.predictors(&eta, &zg, &mut pi);
            for i in 0..n {
                let s: f64 = (0..n).filter(|&k| k != i).map(|k| mu_pair(pi[i * n + k]).0).sum();
                eta[i] += libm::log(out_deg[i] / s);
            }
            self.predictors(&eta, &zg, &mut pi);
            for j in 0..n - 1 {
                let s: f64 = (0..n).filter(|&k| k != j).map(|k| mu_pair(pi[k * n + j]).0).sum();
                eta[n + j] += libm::log(in_deg[j] / s);
            }
            self.predictors(&eta, &zg, &mut pi);
            if p > 0 {
                let blocks = self.blocks(&pi);
                let q = q_from_pi(self.net, self.cov, &pi);
                let step = spd_solve(blocks.v_gamma_gamma(), p, &q)
                    .ok_or(Error::SingularInformation("covariate information V_gg"))?;
                gamma.iter_mut().zip(&step).for_each(|(g, s)| *g -= s);
                let zg = self.gamma_offsets(&gamma);
                self.predictors(&eta, &zg, &mut pi);
            }
            if inf_norm(&eta) > self.opts.divergence_bound || inf_norm(&gamma) > self.opts.divergence_bound {
                return Ok(self.failed(NonExistenceKind::Diverged, sweep, sweep, gamma, p));
            }
            let f_norm = inf_norm(&f_from_pi(self.net, &pi));
            let q_norm = inf_norm(&q_from_pi(self.net, self.cov, &pi));
            if sweep % 100 == 0 {
                loglik_trace.push(loglik_from_pi(self.net, &pi));
            }
            if f_norm <= self.opts.tol_inner && q_norm <= self.opts.tol_outer {
                let loglik = loglik_from_pi(self.net, &pi);
                loglik_trace.push(loglik);
                return Ok(FitResult {
                    params_hat: ParamVector::from_theory_eta(&eta, gamma, Restriction::Theory),
                    converged: true,
                    existence: Existence::Exists,
                    inner_iterations: sweep,
                    outer_iterations: sweep,
                    final_score_norms: (f_norm, q_norm),
                    log_likelihood: loglik,
                    loglik_trace,
                    kantorovich_trace: None,
                });
            }
        }
        Ok(self.failed(NonExistenceKind::MaxIterations, self.opts.max_sweeps, self.opts.max_sweeps, gamma, p))
    }

    fn failed(&self, kind: NonExistenceKind, inner: usize, outer: usize, gamma: Vec<f64>, p: usize) -> FitResult {
        let mut gamma = gamma;
        gamma.resize(p, 0.0);
        FitResult {
            params_hat: ParamVector::zeros(self.n, p, Restriction::Theory),
            converged: false,
            existence: kind.into(),
            inner_iterations: inner,
            outer_iterations: outer,
            final_score_norms: (f64::NAN, f64::NAN),
            log_likelihood: f64::NAN,
            loglik_trace: Vec::new(),
            kantorovich_trace: None,
        }
        .with_gamma(gamma)
    }
}

impl FitResult {
    fn with_gamma(mut self, gamma: Vec<f64>) -> Self {
        self.params_hat.gamma = gamma;
        self
    }
}

/// Solves `F_gamma(eta) = 0` for the degree parameters at fixed `gamma`.
///
/// `eta0` is a warm start in theory coordinates (zeros when `None`). Fails
/// with [`Error::NonExistence`] when the iterates diverge or stall.
pub fn solve_eta_given_gamma(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    gamma: &[f64],
    eta0: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<InnerSolution> {
    let prob = Problem::new(net, cov, opts)?;
    if gamma.len() != cov.p() || gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidInput("gamma must be finite with length p".into()));
    }
    let start = match eta0 {
        Some(e) if e.len() == 2 * net.n() - 1 => e.to_vec(),
        Some(e) => return Err(Error::ShapeMismatch(alloc::format!("warm start has length {}", e.len()))),
        None => vec![0.0; 2 * net.n() - 1],
    };
    let st = prob.inner(&prob.gamma_offsets(gamma), start)?;
    Ok(InnerSolution { eta: st.eta, iterations: st.iterations, score_norm: st.score_norm, loglik_trace: st.trace })
}

/// Profile score `Q_c(gamma) = Q(eta_hat(gamma), gamma)`.
pub fn profile_score_qc(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    gamma: &[f64],
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let prob = Problem::new(net, cov, opts)?;
    let zg = prob.gamma_offsets(gamma);
    let st = prob.inner(&zg, vec![0.0; 2 * net.n() - 1])?;
    Ok(q_from_pi(net, cov, &st.pi))
}

/// Jacobian of the profile score, `H(eta_hat(gamma), gamma)`, row-major `p x p`.
pub fn profile_jacobian_qc(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    gamma: &[f64],
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let prob = Problem::new(net, cov, opts)?;
    let zg = prob.gamma_offsets(gamma);
    let st = prob.inner(&zg, vec![0.0; 2 * net.n() - 1])?;
    Ok(prob.profile_jacobian_at(&st.pi)?.0)
}

/// Maximum likelihood fit under `restriction`.
///
/// Non-existence of the estimate is reported through
/// [`FitResult::existence`] rather than as an error; structural problems
/// (degenerate degrees, unidentified covariates, singular information) are
/// errors.
pub fn fit(
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    restriction: Restriction,
    opts: &FitOptions,
) -> Result<FitResult> {
    let prob = Problem::new(net, cov, opts)?;
    prob.check_degenerate()?;
    check_gamma_identified(cov)?;
    let p = cov.p();
    let mut res = match opts.algorithm {
        Algorithm::ProfileNewton => prob.fit_newton(p)?,
        Algorithm::Alternating => prob.fit_alternating(p)?,
    };
    res.params_hat = res.params_hat.to_restriction(restriction);
    Ok(res)
}
