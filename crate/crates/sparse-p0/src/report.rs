//! Result tables for real-data fits and their CSV, JSON and text renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sparse_p0_core::{FitResult, InferenceReport, Restriction};

use crate::io::Dataset;
use crate::sim::{RecoveryReport, SimReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub id: String,
    pub out_degree: usize,
    pub alpha: f64,
    /// `None` for a coordinate pinned by the restriction.
    pub alpha_se: Option<f64>,
    pub in_degree: usize,
    pub beta: f64,
    pub beta_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuRow {
    pub estimate: f64,
    pub se: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub name: String,
    pub estimate: f64,
    pub bias_corrected: f64,
    pub se: f64,
    /// Two-sided Wald p-value of the bias-corrected estimate.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub restriction: Restriction,
    pub ci_level: f64,
    pub nodes_in: usize,
    /// Ids removed by zero-degree pruning, in removal order.
    pub pruned: Vec<String>,
    pub reference_node: String,
    pub edges: usize,
    pub log_likelihood: f64,
    pub outer_iterations: usize,
    pub nu: Option<NuRow>,
    pub nodes: Vec<NodeRow>,
    pub covariates: Vec<CoefRow>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl FitReport {
    /// Assembles the report for a converged fit of `ds` (already pruned).
    pub fn new(
        ds: &Dataset,
        nodes_in: usize,
        pruned: Vec<String>,
        covariate_names: &[String],
        fit: &FitResult,
        inf: &InferenceReport,
    ) -> Self {
        let params = &fit.params_hat;
        let (d, b) = ds.degrees();
        let nodes = ds
            .node_ids
            .iter()
            .enumerate()
            .map(|(k, id)| NodeRow {
                id: id.clone(),
                out_degree: d[k],
                alpha: params.alpha[k],
                alpha_se: finite(inf.se_alpha[k]),
                in_degree: b[k],
                beta: params.beta[k],
                beta_se: finite(inf.se_beta[k]),
            })
            .collect();
        let covariates = covariate_names
            .iter()
            .enumerate()
            .map(|(k, name)| CoefRow {
                name: name.clone(),
                estimate: inf.gamma_hat[k],
                bias_corrected: inf.gamma_bc[k],
                se: inf.gamma_se[k],
                p_value: inf.gamma_p_values[k],
            })
            .collect();
        let nu = inf.se_nu.map(|se| NuRow {
            estimate: params.nu,
            se,
            p_value: inf.nu_p_value(params.nu).unwrap_or(f64::NAN),
        });
        Self {
            restriction: params.restriction,
            ci_level: inf.ci_level,
            nodes_in,
            pruned,
            reference_node: ds.node_ids.last().cloned().unwrap_or_default(),
            edges: ds.edges.len(),
            log_likelihood: fit.log_likelihood,
            outer_iterations: fit.outer_iterations,
            nu,
            nodes,
            covariates,
        }
    }

    /// One row per node, then `nu`, then one per covariate; numbers carry six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,name,d,alpha,alpha_se,b,beta,beta_se,estimate,bias_corrected,se,p_value\n");
        for r in &self.nodes {
            writeln!(
                out,
                "node,{},{},{},{},{},{},{},,,,",
                r.id,
                r.out_degree,
                sig6(r.alpha),
                opt6(r.alpha_se),
                r.in_degree,
                sig6(r.beta),
                opt6(r.beta_se)
            )
            .unwrap();
        }
        if let Some(nu) = &self.nu {
            writeln!(out, "nu,nu,,,,,,,{},,{},{}", sig6(nu.estimate), sig6(nu.se), sig6(nu.p_value)).unwrap();
        }
        for c in &self.covariates {
            writeln!(
                out,
                "gamma,{},,,,,,,{},{},{},{}",
                c.name,
                sig6(c.estimate),
                sig6(c.bias_corrected),
                sig6(c.se),
                sig6(c.p_value)
            )
            .unwrap();
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{} nodes fitted ({} read, {} pruned), {} edges, reference node {}",
            self.nodes.len(),
            self.nodes_in,
            self.pruned.len(),
            self.edges,
            self.reference_node
        )
        .unwrap();
        writeln!(out, "restriction {:?}, log-likelihood {:.4}", self.restriction, self.log_likelihood).unwrap();
        if let Some(nu) = &self.nu {
            writeln!(out, "nu = {:.4} (se {:.4}, p {:.4})", nu.estimate, nu.se, nu.p_value).unwrap();
        }
        if !self.covariates.is_empty() {
            writeln!(out, "\n{:<16} {:>10} {:>10} {:>10} {:>10}", "covariate", "gamma", "gamma_bc", "se", "p").unwrap();
            for c in &self.covariates {
                writeln!(
                    out,
                    "{:<16} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    c.name, c.estimate, c.bias_corrected, c.se, c.p_value
                )
                .unwrap();
            }
        }
        writeln!(
            out,
            "\n{:<12} {:>5} {:>9} {:>7} {:>5} {:>9} {:>7}",
            "node", "d", "alpha", "se", "b", "beta", "se"
        )
        .unwrap();
        let se = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        for r in &self.nodes {
            writeln!(
                out,
                "{:<12} {:>5} {:>9.2} {:>7} {:>5} {:>9.2} {:>7}",
                r.id,
                r.out_degree,
                r.alpha,
                se(r.alpha_se),
                r.in_degree,
                r.beta,
                se(r.beta_se)
            )
            .unwrap();
        }
        out
    }
}

/// Formats `v` with six significant digits, trimming trailing zeros.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects carries such as 9.999995 -> 10.
    let rounded: f64 = format!("{v:.5e}").parse().unwrap();
    let exp = rounded.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, rounded);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{rounded:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{e}")
    }
}

fn opt6(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

/// Any result the CLI stores as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum StoredReport {
    Fit(FitReport),
    Simulation(SimReport),
    Recovery(RecoveryReport),
}

impl StoredReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_csv(&self) -> String {
        match self {
            StoredReport::Fit(r) => r.to_csv(),
            StoredReport::Simulation(r) => crate::sim::report_csv(r),
            StoredReport::Recovery(r) => format!(
                "n,delta,replications,existing,exact_recovery\n{},{},{},{},{}\n",
                r.n,
                sig6(r.delta),
                r.replications,
                r.existing,
                sig6(r.exact_recovery)
            ),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            StoredReport::Fit(r) => r.to_text(),
            StoredReport::Simulation(r) => simulation_text(r),
            StoredReport::Recovery(r) => format!(
                "signal recovery, n = {}, threshold {:.4}\n{} of {} replications had a finite estimate\nexact recovery rate {:.4}\n",
                r.n, r.delta, r.existing, r.replications, r.exact_recovery
            ),
        }
    }
}

fn simulation_text(r: &SimReport) -> String {
    let d = &r.design;
    let mut out = String::new();
    writeln!(out, "simulation n = {}, c = {}, gamma* = {:?}, seed {}", d.n, d.c, d.gamma_star, d.base_seed).unwrap();
    writeln!(
        out,
        "{} replications, {} with a finite estimate, non-existence {:.2}%",
        r.replications,
        r.existing,
        100.0 * r.nonexistence
    )
    .unwrap();
    writeln!(out, "\n{:<14} {:>10} {:>12} {:>10}", "target", "coverage", "uncorrected", "length").unwrap();
    for p in &r.pairs {
        let target = if (p.i, p.j) == (0, 0) { "nu".to_string() } else { format!("alpha({},{})", p.i, p.j) };
        writeln!(out, "{:<14} {:>9.2}% {:>12} {:>10.3}", target, 100.0 * p.coverage, "", p.mean_ci_length).unwrap();
    }
    for g in &r.gamma {
        writeln!(
            out,
            "{:<14} {:>9.2}% {:>11.2}% {:>10.3}",
            format!("gamma{}", g.k + 1),
            100.0 * g.coverage,
            100.0 * g.coverage_uncorrected,
            g.mean_ci_length
        )
        .unwrap();
    }
    out
}
