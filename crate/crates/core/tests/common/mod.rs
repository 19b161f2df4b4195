//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the crate's score or likelihood code: the
//! likelihood, its gradient and the optimizer are written from scratch.

#![allow(dead_code)]

use sparse_p0_core::{
    fisher_blocks, score_f, score_q, DirectedNetwork, EdgeCovariates, ParamVector, Restriction,
};

/// SplitMix64.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Random parameters and covariates; the network is redrawn until every
/// node has an out- and in-degree strictly between 0 and `n - 1`.
pub fn random_instance(rng: &mut Rng, n: usize, p: usize) -> (DirectedNetwork, EdgeCovariates, ParamVector) {
    let alpha: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let beta: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let gamma: Vec<f64> = (0..p).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nu = rng.uniform(-0.5, 0.5);
    let truth = ParamVector::normalized(nu, &alpha, &beta, gamma, Restriction::Practical);
    let cov = EdgeCovariates::from_fn(n, p, |_, _, z| z.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0))).unwrap();
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.uniform(0.0, 1.0) < sigmoid(truth.predictor(&cov, i, j)) {
                    edges.push((i, j));
                }
            }
        }
        let net = DirectedNetwork::from_edges(n, &edges).unwrap();
        let ok = |d: &usize| *d > 0 && *d < n - 1;
        if net.out_degrees().iter().all(ok) && net.in_degrees().iter().all(ok) {
            return (net, cov, truth);
        }
    }
}

/// Practical-restriction layout `(nu, alpha_0..alpha_{n-2}, beta_0..beta_{n-2}, gamma)`.
fn predictor(x: &[f64], cov: &EdgeCovariates, n: usize, i: usize, j: usize) -> f64 {
    let a = if i + 1 < n { x[1 + i] } else { 0.0 };
    let b = if j + 1 < n { x[n + j] } else { 0.0 };
    let z = cov.get(i, j);
    x[0] + a + b + z.iter().zip(&x[2 * n - 1..]).map(|(z, g)| z * g).sum::<f64>()
}

/// Bernoulli log-likelihood `sum a log m + (1 - a) log(1 - m)`.
pub fn bernoulli_loglik(net: &DirectedNetwork, cov: &EdgeCovariates, x: &[f64]) -> f64 {
    let n = net.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = predictor(x, cov, n, i, j);
            // log m = -log(1 + e^{-t}), log(1 - m) = -log(1 + e^{t})
            s -= if net.has_edge(i, j) { (-t).exp().ln_1p() } else { t.exp().ln_1p() };
        }
    }
    s
}

pub fn bernoulli_gradient(net: &DirectedNetwork, cov: &EdgeCovariates, x: &[f64]) -> Vec<f64> {
    let n = net.n();
    let mut g = vec![0.0; x.len()];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = (if net.has_edge(i, j) { 1.0 } else { 0.0 }) - sigmoid(predictor(x, cov, n, i, j));
            g[0] += r;
            if i + 1 < n {
                g[1 + i] += r;
            }
            if j + 1 < n {
                g[n + j] += r;
            }
            for (k, z) in cov.get(i, j).iter().enumerate() {
                g[2 * n - 1 + k] += r * z;
            }
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes the log-likelihood by BFGS with Armijo backtracking.
///
/// Returns the practical-restriction free vector, or `None` when the
/// iterates run off (no finite maximizer) or the budget is exhausted.
pub fn oracle_mle(net: &DirectedNetwork, cov: &EdgeCovariates) -> Option<Vec<f64>> {
    let d = 2 * net.n() - 1 + cov.p();
    let f = |x: &[f64]| -bernoulli_loglik(net, cov, x);
    let grad = |x: &[f64]| bernoulli_gradient(net, cov, x).iter().map(|g| -g).collect::<Vec<_>>();
    let mut x = vec![0.0; d];
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut h = identity(d);
    for _ in 0..5000 {
        if g.iter().all(|v| v.abs() < 1e-9) {
            return Some(x);
        }
        let mut dir: Vec<f64> = (0..d).map(|a| -dot(&h[a * d..(a + 1) * d], &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            h = identity(d);
            dir = g.iter().map(|v| -v).collect();
        }
        let slope = dot(&dir, &g);
        let mut t = 1.0;
        let mut xn = vec![0.0; d];
        let mut accepted = false;
        for _ in 0..60 {
            for a in 0..d {
                xn[a] = x[a] + t * dir[a];
            }
            if f(&xn) <= fx + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Converged to rounding level.
            return if g.iter().all(|v| v.abs() < 1e-8) { Some(x) } else { None };
        }
        let gn = grad(&xn);
        let s: Vec<f64> = (0..d).map(|a| xn[a] - x[a]).collect();
        let y: Vec<f64> = (0..d).map(|a| gn[a] - g[a]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let hy: Vec<f64> = (0..d).map(|a| dot(&h[a * d..(a + 1) * d], &y)).collect();
            let yhy = dot(&y, &hy);
            for a in 0..d {
                for b in 0..d {
                    h[a * d + b] += (sy + yhy) * s[a] * s[b] / (sy * sy) - (hy[a] * s[b] + s[a] * hy[b]) / sy;
                }
            }
        }
        x = xn;
        fx = f(&x);
        g = gn;
        if x.iter().any(|v| v.abs() > 25.0) {
            return None;
        }
    }
    g.iter().all(|v| v.abs() < 1e-8).then_some(x)
}

fn identity(d: usize) -> Vec<f64> {
    let mut h = vec![0.0; d * d];
    for a in 0..d {
        h[a * d + a] = 1.0;
    }
    h
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Worst relative errors `(gradient, jacobian)` of the analytic scores and
/// information blocks against central finite differences at one random point.
///
/// Differentiation is in theory coordinates, where the free vector is
/// `(alpha_0..alpha_{n-1}, beta_0..beta_{n-2}, gamma)` and `-(F, Q)` is
/// exactly the gradient of the log-likelihood.
pub fn score_jacobian_errors(rng: &mut Rng, n: usize, p: usize) -> (f64, f64) {
    let (net, cov, truth) = random_instance(rng, n, p);
    let mut at = truth.to_restriction(Restriction::Theory);
    for a in at.alpha.iter_mut() {
        *a += rng.uniform(-0.3, 0.3);
    }
    let v0 = at.free_vector();
    let d = v0.len();
    let eta_dim = 2 * n - 1;
    let theory = |v: &[f64]| ParamVector::from_free_vector(n, p, Restriction::Theory, v);
    let practical_ll = |v: &[f64]| {
        let x = theory(v).to_restriction(Restriction::Practical).free_vector();
        bernoulli_loglik(&net, &cov, &x)
    };
    let scores = |v: &[f64]| {
        let pv = theory(v);
        let mut s = score_f(&net, &cov, &pv).unwrap();
        s.extend(score_q(&net, &cov, &pv).unwrap());
        s
    };
    let h = 1e-5;
    let analytic = scores(&v0);
    let mut fd_grad = vec![0.0; d];
    let mut fd_jac = vec![0.0; d * d];
    for c in 0..d {
        let mut up = v0.clone();
        let mut dn = v0.clone();
        up[c] += h;
        dn[c] -= h;
        fd_grad[c] = -(practical_ll(&up) - practical_ll(&dn)) / (2.0 * h);
        let (su, sd) = (scores(&up), scores(&dn));
        for r in 0..d {
            fd_jac[r * d + c] = (su[r] - sd[r]) / (2.0 * h);
        }
    }
    let blocks = fisher_blocks(&net, &cov, &at).unwrap();
    let v = blocks.v_dense();
    let (veg, vgg) = (blocks.v_eta_gamma(), blocks.v_gamma_gamma());
    let mut jac = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            jac[r * d + c] = match (r < eta_dim, c < eta_dim) {
                (true, true) => v[r * eta_dim + c],
                (true, false) => veg[r * p + (c - eta_dim)],
                (false, true) => veg[c * p + (r - eta_dim)],
                (false, false) => vgg[(r - eta_dim) * p + (c - eta_dim)],
            };
        }
    }
    (rel_err(&analytic, &fd_grad), rel_err(&jac, &fd_jac))
}
