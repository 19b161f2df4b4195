//! Deterministic helpers shared by unit tests.

use alloc::vec::Vec;

use crate::logistic::mu;
use crate::model::{DirectedNetwork, EdgeCovariates, ParamVector, Restriction};

/// 64-bit LCG (Knuth MMIX constants); plenty for test fixtures.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Random interior parameters, covariates in [-1, 1] and a network drawn from the model.
pub fn random_instance(
    rng: &mut Lcg,
    n: usize,
    p: usize,
    restriction: Restriction,
) -> (DirectedNetwork, EdgeCovariates, ParamVector) {
    let alpha: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let beta: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let gamma: Vec<f64> = (0..p).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nu = rng.uniform(-0.5, 0.5);
    let params = ParamVector::normalized(nu, &alpha, &beta, gamma, restriction);
    let cov = EdgeCovariates::from_fn(n, p, |_, _, z| {
        z.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0))
    })
    .unwrap();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.next_f64() < mu(params.predictor(&cov, i, j)) {
                edges.push((i, j));
            }
        }
    }
    let net = DirectedNetwork::from_edges(n, &edges).unwrap();
    (net, cov, params)
}
