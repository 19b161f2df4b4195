//! Monte-Carlo harness for the ramp design: replicated data generation,
//! fitting and coverage bookkeeping.
//!
//! Node counts are totals: a design with `n` nodes labels them `0..n` and
//! uses `m = n - 1` in the parameter formulas, so `n = 101` reproduces the
//! "n = 100" rows of the usual tables.
//!
//! Randomness: every replication owns a ChaCha20 stream, seeded with
//! `base_seed` and selected by the replication index, so records do not
//! depend on scheduling and any single replication can be regenerated alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_p0_core::{
    contrast, critical_value, fisher_blocks, fit, gamma_information_and_bias, bias_corrected_gamma,
    gamma_standard_errors, mu, nu_standard_error, recover_signals, ContrastKind, DirectedNetwork, EdgeCovariates,
    Existence, FitOptions, ParamVector, Restriction,
};

/// One replicated simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    /// Total number of nodes.
    pub n: usize,
    /// Ramp coefficient: `alpha_i* = beta_i* = i c log(m) / m`.
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_gamma")]
    pub gamma_star: Vec<f64>,
    /// Defaults to `-log(m) / 4`.
    #[serde(default)]
    pub nu_star: Option<f64>,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_level")]
    pub ci_level: f64,
    /// Node pairs whose sender-effect difference is monitored; `(0, 0)` stands for `nu`.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    /// Start every fit at the true parameter instead of zero.
    #[serde(default)]
    pub warm_start_at_truth: bool,
}

fn default_gamma() -> Vec<f64> {
    vec![1.0, 1.0]
}

fn default_reps() -> usize {
    1000
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DesignError {
    #[error("design needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("covariates have 2 coordinates, gamma_star has {0}")]
    GammaLength(usize),
    #[error("confidence level {0} outside (0, 1)")]
    Level(f64),
    #[error("pair ({0}, {1}) refers to a node outside 0..{2}")]
    Pair(usize, usize, usize),
}

impl SimDesign {
    /// The default monitored pairs for an `n`-node design, mirroring the
    /// usual table layout: first, middle and last neighbours, the extremes,
    /// first-to-middle, and `nu`.
    pub fn table_pairs(n: usize) -> Vec<(usize, usize)> {
        let m = n - 1;
        vec![(1, 2), (m / 2, m / 2 + 1), (m - 1, m), (1, m), (1, m / 2), (0, 0)]
    }

    pub fn new(n: usize, c: f64, replications: usize, base_seed: u64) -> Self {
        Self {
            n,
            c,
            gamma_star: default_gamma(),
            nu_star: None,
            replications,
            base_seed,
            ci_level: default_level(),
            pairs: Self::table_pairs(n),
            warm_start_at_truth: false,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if self.n < 3 {
            return Err(DesignError::TooFewNodes(self.n));
        }
        if self.gamma_star.len() != 2 {
            return Err(DesignError::GammaLength(self.gamma_star.len()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(DesignError::Level(self.ci_level));
        }
        if let Some(&(i, j)) = self.pairs.iter().find(|(i, j)| *i >= self.n || *j >= self.n) {
            return Err(DesignError::Pair(i, j, self.n));
        }
        Ok(())
    }

    /// True parameter under the practical restriction.
    pub fn truth(&self) -> ParamVector {
        let m = (self.n - 1) as f64;
        let ramp: Vec<f64> = (0..self.n).map(|i| i as f64 * self.c * m.ln() / m).collect();
        let nu = self.nu_star.unwrap_or(-m.ln() / 4.0);
        ParamVector::normalized(nu, &ramp, &ramp, self.gamma_star.clone(), Restriction::Practical)
    }
}

/// Node attributes behind the simulated covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAttributes {
    /// Beta(2, 2) draws.
    pub x1: Vec<f64>,
    /// `+1` with probability 0.3, otherwise `-1`.
    pub x2: Vec<f64>,
}

fn gamma2<R: Rng>(rng: &mut R) -> f64 {
    // Gamma(2, 1) is a sum of two unit exponentials.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = 1.0 - rng.gen::<f64>();
    -(u1 * u2).ln()
}

/// Beta(2, 2) as `G1 / (G1 + G2)` with independent Gamma(2, 1) variables.
pub fn sample_beta22<R: Rng>(rng: &mut R) -> f64 {
    let g1 = gamma2(rng);
    let g2 = gamma2(rng);
    g1 / (g1 + g2)
}

/// Draws node attributes and builds `z_ij = (|x1_i - x1_j|, x2_i x2_j)`.
pub fn generate_covariates_with<R: Rng>(rng: &mut R, n: usize) -> (SimAttributes, EdgeCovariates) {
    let x1: Vec<f64> = (0..n).map(|_| sample_beta22(rng)).collect();
    let x2: Vec<f64> = (0..n).map(|_| if rng.gen::<f64>() < 0.3 { 1.0 } else { -1.0 }).collect();
    let cov = EdgeCovariates::from_fn(n, 2, |i, j, z| {
        z[0] = (x1[i] - x1[j]).abs();
        z[1] = x2[i] * x2[j];
    })
    .expect("simulated covariates are finite");
    (SimAttributes { x1, x2 }, cov)
}

pub fn generate_covariates(n: usize, seed: u64) -> (SimAttributes, EdgeCovariates) {
    generate_covariates_with(&mut ChaCha20Rng::seed_from_u64(seed), n)
}

/// Independent Bernoulli draws for every ordered pair.
pub fn generate_network_with<R: Rng>(rng: &mut R, params: &ParamVector, cov: &EdgeCovariates) -> DirectedNetwork {
    let n = params.n();
    let mut adjacency = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < mu(params.predictor(cov, i, j)) {
                adjacency[i * n + j] = 1;
            }
        }
    }
    DirectedNetwork::from_adjacency(n, adjacency).expect("generated adjacency is valid")
}

pub fn generate_network(params: &ParamVector, cov: &EdgeCovariates, seed: u64) -> DirectedNetwork {
    generate_network_with(&mut ChaCha20Rng::seed_from_u64(seed), params, cov)
}

/// Generator for replication `rep` of a design seeded with `base_seed`.
pub fn replication_rng(base_seed: u64, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(rep as u64);
    rng
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub existence: Existence,
    /// Structural failure (degenerate degrees, singular information) when present.
    pub error: Option<String>,
    /// Per monitored pair: did the interval cover the truth.
    pub pair_covered: Vec<bool>,
    pub pair_ci_length: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub gamma_bc: Vec<f64>,
    pub gamma_se: Vec<f64>,
    pub gamma_covered_bc: Vec<bool>,
    pub gamma_covered_uncorrected: Vec<bool>,
    /// `||eta_hat - eta*||_inf` in theory coordinates.
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub eta_error: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub gamma_error: f64,
    pub outer_iterations: usize,
}

impl ReplicationRecord {
    pub fn exists(&self) -> bool {
        self.existence == Existence::Exists && self.error.is_none()
    }

    fn failed(replication: usize, existence: Existence, error: Option<String>) -> Self {
        Self {
            replication,
            existence,
            error,
            pair_covered: Vec::new(),
            pair_ci_length: Vec::new(),
            gamma_hat: Vec::new(),
            gamma_bc: Vec::new(),
            gamma_se: Vec::new(),
            gamma_covered_bc: Vec::new(),
            gamma_covered_uncorrected: Vec::new(),
            eta_error: f64::NAN,
            gamma_error: f64::NAN,
            outer_iterations: 0,
        }
    }
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs replication `rep` of `design`.
pub fn run_replication(design: &SimDesign, rep: usize) -> ReplicationRecord {
    let mut rng = replication_rng(design.base_seed, rep);
    let truth = design.truth();
    let (_, cov) = generate_covariates_with(&mut rng, design.n);
    let net = generate_network_with(&mut rng, &truth, &cov);
    let opts = FitOptions {
        warm_start: design.warm_start_at_truth.then(|| truth.clone()),
        ..FitOptions::default()
    };
    let res = match fit(&net, &cov, Restriction::Practical, &opts) {
        Ok(r) => r,
        Err(e @ sparse_p0_core::Error::DegenerateNetwork { .. }) => {
            // Zero or full degrees: the estimate is infinite.
            return ReplicationRecord::failed(rep, Existence::NonexistentDiverged, Some(e.to_string()));
        }
        Err(e) => return ReplicationRecord::failed(rep, Existence::NonexistentMaxiter, Some(e.to_string())),
    };
    if !res.exists() {
        return ReplicationRecord::failed(rep, res.existence, None);
    }
    match summarize(design, &truth, &net, &cov, &res.params_hat) {
        Ok(mut rec) => {
            rec.replication = rep;
            rec.outer_iterations = res.outer_iterations;
            rec
        }
        Err(e) => ReplicationRecord::failed(rep, Existence::Exists, Some(e.to_string())),
    }
}

fn summarize(
    design: &SimDesign,
    truth: &ParamVector,
    net: &DirectedNetwork,
    cov: &EdgeCovariates,
    est: &ParamVector,
) -> sparse_p0_core::Result<ReplicationRecord> {
    let z = critical_value(design.ci_level);
    let blocks = fisher_blocks(net, cov, est)?;
    let mut pair_covered = Vec::with_capacity(design.pairs.len());
    let mut pair_ci_length = Vec::with_capacity(design.pairs.len());
    for &(i, j) in &design.pairs {
        let (estimate, target, se) = if (i, j) == (0, 0) {
            (est.nu, truth.nu, nu_standard_error(&blocks, Restriction::Practical)?)
        } else {
            let c = contrast(est, &blocks, ContrastKind::OutDifference, i, j)?;
            (c.estimate, truth.alpha[i] - truth.alpha[j], c.se)
        };
        pair_covered.push((estimate - target).abs() <= z * se);
        pair_ci_length.push(2.0 * z * se);
    }
    let n = net.n();
    let (i_hat, b_hat) = gamma_information_and_bias(net, cov, est)?;
    let gamma_bc = bias_corrected_gamma(&est.gamma, &i_hat, &b_hat, n)?;
    let gamma_se = gamma_standard_errors(&i_hat, n)?;
    let covered = |g: &[f64]| -> Vec<bool> {
        g.iter().zip(&truth.gamma).zip(&gamma_se).map(|((g, t), s)| (g - t).abs() <= z * s).collect()
    };
    Ok(ReplicationRecord {
        replication: 0,
        existence: Existence::Exists,
        error: None,
        pair_covered,
        pair_ci_length,
        gamma_covered_bc: covered(&gamma_bc),
        gamma_covered_uncorrected: covered(&est.gamma),
        eta_error: inf_dist(&est.theory_eta(), &truth.theory_eta()),
        gamma_error: inf_dist(&est.gamma, &truth.gamma),
        gamma_hat: est.gamma.clone(),
        gamma_bc,
        gamma_se,
        outer_iterations: 0,
    })
}

/// Coverage summary for one monitored pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub i: usize,
    pub j: usize,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub coverage: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub mean_ci_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCell {
    /// Zero-based coordinate.
    pub k: usize,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub coverage: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub coverage_uncorrected: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub mean_ci_length: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub mean_estimate: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub mean_estimate_bc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub design: SimDesign,
    pub replications: usize,
    /// Replications whose estimate exists (the coverage denominator).
    pub existing: usize,
    pub nonexistence: f64,
    pub pairs: Vec<PairCell>,
    pub gamma: Vec<GammaCell>,
    pub records: Vec<ReplicationRecord>,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, k) = it.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
    if k == 0 {
        f64::NAN
    } else {
        s / k as f64
    }
}

fn frac(it: impl Iterator<Item = bool>) -> f64 {
    mean(it.map(|b| if b { 1.0 } else { 0.0 }))
}

/// Aggregates replication records; the result does not depend on record order.
pub fn aggregate(design: &SimDesign, mut records: Vec<ReplicationRecord>) -> SimReport {
    records.sort_by_key(|r| r.replication);
    let ok: Vec<&ReplicationRecord> = records.iter().filter(|r| r.exists()).collect();
    let total = records.len();
    let pairs = design
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| PairCell {
            i,
            j,
            coverage: frac(ok.iter().map(|r| r.pair_covered[k])),
            mean_ci_length: mean(ok.iter().map(|r| r.pair_ci_length[k])),
        })
        .collect();
    let gamma = (0..design.gamma_star.len())
        .map(|k| GammaCell {
            k,
            coverage: frac(ok.iter().map(|r| r.gamma_covered_bc[k])),
            coverage_uncorrected: frac(ok.iter().map(|r| r.gamma_covered_uncorrected[k])),
            mean_ci_length: mean(ok.iter().map(|r| 2.0 * critical_value(design.ci_level) * r.gamma_se[k])),
            mean_estimate: mean(ok.iter().map(|r| r.gamma_hat[k])),
            mean_estimate_bc: mean(ok.iter().map(|r| r.gamma_bc[k])),
        })
        .collect();
    SimReport {
        design: design.clone(),
        replications: total,
        existing: ok.len(),
        nonexistence: if total == 0 { 0.0 } else { (total - ok.len()) as f64 / total as f64 },
        pairs,
        gamma,
        records,
    }
}

/// Runs all replications of `design` in parallel.
pub fn run_design(design: &SimDesign) -> Result<SimReport, DesignError> {
    design.validate()?;
    let records: Vec<ReplicationRecord> =
        (0..design.replications).into_par_iter().map(|rep| run_replication(design, rep)).collect();
    Ok(aggregate(design, records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub used: usize,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub median_eta_error: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub median_gamma_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log(median error)` against `log(n)`.
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub eta_slope: f64,
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub gamma_slope: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x.iter().copied());
    let my = mean(y.iter().copied());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Median estimation errors per design and their log-log slopes in `n`.
pub fn rate_sweep(designs: &[SimDesign]) -> Result<RateTable, DesignError> {
    let mut rows = Vec::with_capacity(designs.len());
    for d in designs {
        let report = run_design(d)?;
        let ok: Vec<&ReplicationRecord> = report.records.iter().filter(|r| r.exists()).collect();
        rows.push(RateRow {
            n: d.n,
            used: ok.len(),
            median_eta_error: median(ok.iter().map(|r| r.eta_error).collect()),
            median_gamma_error: median(ok.iter().map(|r| r.gamma_error).collect()),
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let eta: Vec<f64> = rows.iter().map(|r| r.median_eta_error.ln()).collect();
    let gamma: Vec<f64> = rows.iter().map(|r| r.median_gamma_error.ln()).collect();
    Ok(RateTable { eta_slope: ls_slope(&ln_n, &eta), gamma_slope: ls_slope(&ln_n, &gamma), rows })
}

/// Signal-recovery experiment: the first half of the nodes carry in-degree
/// effect `2 delta`, the rest (including the reference node) zero, with
/// `delta = 4 (log n / n)^{1/2}`, `alpha* = 0`, `nu* = -delta` and the usual
/// covariates with `gamma* = (1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n: usize,
    pub delta: f64,
    pub replications: usize,
    pub existing: usize,
    /// Fraction of all replications whose recovered set equals the true one.
    #[serde(deserialize_with = "crate::nan_or_f64")]
    pub exact_recovery: f64,
}

pub fn recovery_threshold(n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n.ln() / n).sqrt()
}

pub fn recovery_truth(n: usize) -> ParamVector {
    let delta = recovery_threshold(n);
    let beta: Vec<f64> = (0..n).map(|i| if i < n / 2 { 2.0 * delta } else { 0.0 }).collect();
    ParamVector::normalized(-delta, &vec![0.0; n], &beta, default_gamma(), Restriction::Practical)
}

/// Runs the recovery experiment, thresholding the estimated in-degree effects at `delta`.
pub fn run_recovery(n: usize, replications: usize, base_seed: u64, delta: f64) -> RecoveryReport {
    let truth = recovery_truth(n);
    let expected: Vec<usize> = (0..n / 2).collect();
    let outcomes: Vec<Option<bool>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(base_seed, rep);
            let (_, cov) = generate_covariates_with(&mut rng, n);
            let net = generate_network_with(&mut rng, &truth, &cov);
            match fit(&net, &cov, Restriction::Practical, &FitOptions::default()) {
                Ok(r) if r.exists() => Some(recover_signals(&r.params_hat, delta) == expected),
                _ => None,
            }
        })
        .collect();
    RecoveryReport {
        n,
        delta,
        replications,
        existing: outcomes.iter().filter(|o| o.is_some()).count(),
        exact_recovery: frac(outcomes.iter().map(|o| *o == Some(true))),
    }
}

/// One CSV row per monitored target.
pub fn report_csv(report: &SimReport) -> String {
    let d = &report.design;
    let mut out = String::from("n,c,target,coverage,coverage_uncorrected,mean_ci_length,nonexistence\n");
    for p in &report.pairs {
        let target = if (p.i, p.j) == (0, 0) { "nu".to_string() } else { format!("alpha({};{})", p.i, p.j) };
        out.push_str(&format!(
            "{},{},{},{},,{},{}\n",
            d.n, d.c, target, p.coverage, p.mean_ci_length, report.nonexistence
        ));
    }
    for g in &report.gamma {
        out.push_str(&format!(
            "{},{},gamma{},{},{},{},{}\n",
            d.n,
            d.c,
            g.k + 1,
            g.coverage,
            g.coverage_uncorrected,
            g.mean_ci_length,
            report.nonexistence
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariate_ranges_and_symmetry() {
        let (_, cov) = generate_covariates(40, 3);
        for i in 0..40 {
            for j in 0..40 {
                if i == j {
                    continue;
                }
                let z = cov.get(i, j);
                assert!((0.0..=1.0).contains(&z[0]));
                assert!(z[1] == 1.0 || z[1] == -1.0);
                assert_eq!(z, cov.get(j, i));
            }
        }
    }

    #[test]
    fn binary_attribute_mean() {
        let (attrs, _) = generate_covariates_with(&mut ChaCha20Rng::seed_from_u64(1), 2);
        assert_eq!(attrs.x2.len(), 2);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let k = 100_000;
        let s: f64 = (0..k).map(|_| if rng.gen::<f64>() < 0.3 { 1.0 } else { -1.0 }).sum();
        assert!((s / k as f64 + 0.4).abs() < 0.01);
    }

    #[test]
    fn beta22_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let k = 200_000;
        let xs: Vec<f64> = (0..k).map(|_| sample_beta22(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / k as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / k as f64;
        // Beta(2, 2): mean 1/2, variance 1/20.
        assert!((m - 0.5).abs() < 0.003);
        assert!((v - 0.05).abs() < 0.001);
    }

    #[test]
    fn network_extremes_and_density() {
        let n = 101;
        let cov = EdgeCovariates::zeros(n, 0);
        let mut p = ParamVector::zeros(n, 0, Restriction::Practical);
        p.nu = -50.0;
        assert_eq!(generate_network(&p, &cov, 1).edge_count(), 0);
        p.nu = 0.0;
        let net = generate_network(&p, &cov, 2);
        let density = net.edge_count() as f64 / (n * (n - 1)) as f64;
        assert!((density - 0.5).abs() < 0.02);
        assert_eq!(generate_network(&p, &cov, 2), net);
    }

    #[test]
    fn truth_follows_ramp() {
        let d = SimDesign::new(11, 0.6, 1, 0);
        let t = d.truth();
        let m = 10f64;
        // alpha_i* - alpha_j* survives the restriction.
        assert!((t.alpha[3] - t.alpha[1] - 2.0 * 0.6 * m.ln() / m).abs() < 1e-12);
        let ramp_end = 0.6 * m.ln();
        assert!((t.nu - (-m.ln() / 4.0 + 2.0 * ramp_end)).abs() < 1e-12);
    }

    #[test]
    fn replications_are_reproducible_and_order_free() {
        let d = SimDesign::new(30, 0.0, 6, 77);
        let a = run_design(&d).unwrap();
        let b = run_design(&d).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mut rev = a.records.clone();
        rev.reverse();
        assert_eq!(aggregate(&d, rev), a);
        assert_eq!(run_replication(&d, 4), a.records[4]);
    }

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [100f64, 200.0, 400.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [100f64, 200.0, 400.0].iter().map(|v| (3.0 * v.powf(-0.5)).ln()).collect();
        assert!((ls_slope(&x, &y) + 0.5).abs() < 1e-12);
    }
}
