//! Command dispatch for the `sparse-p0` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sparse_p0_core::{fit, infer, recover_signals, Error as CoreError, FitOptions, Restriction};

use crate::io::{build_edge_covariates, load_dataset, prune_zero_degree, AttributeSpec, IoError};
use crate::report::{FitReport, StoredReport};
use crate::sim::{recovery_threshold, run_design, run_recovery, DesignError, SimDesign};

#[derive(Debug, Parser)]
#[command(name = "sparse-p0", version, about = "Fit and simulate directed networks with degree heterogeneity and edge covariates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to an edge list and report estimates with standard errors.
    Fit(FitArgs),
    /// Run a Monte Carlo design read from a JSON config.
    Simulate(SimulateArgs),
    /// Threshold estimated in-degree effects, on a dataset or in simulation.
    Recover(RecoverArgs),
    /// Render a stored JSON result.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RestrictionArg {
    Practical,
    Theory,
}

impl From<RestrictionArg> for Restriction {
    fn from(r: RestrictionArg) -> Self {
        match r {
            RestrictionArg::Practical => Restriction::Practical,
            RestrictionArg::Theory => Restriction::Theory,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Edge list: one `from to` pair per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Node attribute table with `cat:`/`num:` typed columns.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// JSON covariate specification.
    #[arg(long, requires = "attrs")]
    pub spec: Option<PathBuf>,
    /// Keep nodes with zero out- or in-degree.
    #[arg(long)]
    pub no_prune: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "practical")]
    pub restriction: RestrictionArg,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `replications` in the config.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Overrides `base_seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Threshold on the in-degree effects; defaults to `4 (log n / n)^{1/2}`.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Dataset to fit; without it the simulated recovery design runs.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub attrs: Option<PathBuf>,
    #[arg(long, requires = "attrs")]
    pub spec: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub no_prune: bool,
    /// Nodes in the simulated design.
    #[arg(long, default_value_t = 200, conflicts_with = "edges")]
    pub n: usize,
    #[arg(long, default_value_t = 200, conflicts_with = "edges")]
    pub reps: usize,
    #[arg(long, default_value_t = 1, conflicts_with = "edges")]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON written by `fit`, `simulate` or `recover`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Model(#[from] CoreError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CliError {
    /// 2 for unreadable or invalid input, 3 when no finite estimate exists, 4 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(IoError::EmptyAfterPruning) => 3,
            CliError::Io(_) | CliError::Design(_) | CliError::Config { .. } | CliError::Argument(_) => 2,
            CliError::Model(e) => match e {
                CoreError::NonExistence { .. } | CoreError::DegenerateNetwork { .. } => 3,
                CoreError::SingularInformation(_) | CoreError::GammaUnidentified | CoreError::DegenerateVariance(_) => 4,
                CoreError::SelfLoopRequested(_)
                | CoreError::ShapeMismatch(_)
                | CoreError::InvalidInput(_)
                | CoreError::RestrictionMismatch { .. } => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(e) => match e {
                IoError::Io { .. } => "io",
                IoError::Parse { .. } => "parse",
                IoError::ReferentialIntegrity { .. } => "referential_integrity",
                IoError::SelfLoop { .. } => "self_loop",
                IoError::DuplicateEdge { .. } => "duplicate_edge",
                IoError::DuplicateNode { .. } => "duplicate_node",
                IoError::EmptyAfterPruning => "empty_after_pruning",
                IoError::RuleKindMismatch { .. } => "rule_kind_mismatch",
                IoError::UnknownAttribute(_) => "unknown_attribute",
                IoError::Spec(_) => "spec",
            },
            CliError::Model(e) => match e {
                CoreError::NonExistence { .. } => "non_existence",
                CoreError::DegenerateNetwork { .. } => "degenerate_network",
                CoreError::SingularInformation(_) => "singular_information",
                CoreError::GammaUnidentified => "gamma_unidentified",
                CoreError::DegenerateVariance(_) => "degenerate_variance",
                CoreError::SelfLoopRequested(_) => "self_loop",
                CoreError::ShapeMismatch(_) => "shape_mismatch",
                CoreError::InvalidInput(_) => "invalid_input",
                CoreError::RestrictionMismatch { .. } => "restriction_mismatch",
            },
            CliError::Design(_) => "design",
            CliError::Config { .. } => "config",
            CliError::Argument(_) => "argument",
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

fn render(report: &StoredReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<Option<String>, CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

fn fit_dataset(data: &DataArgs, restriction: Restriction, ci_level: f64) -> Result<FitReport, CliError> {
    if !(ci_level > 0.0 && ci_level < 1.0) {
        return Err(CliError::Argument(format!("--ci-level {ci_level} must lie in (0, 1)")));
    }
    let spec = match &data.spec {
        Some(p) => AttributeSpec::load(p)?,
        None => AttributeSpec::default(),
    };
    let raw = load_dataset(&data.edges, data.attrs.as_deref())?;
    let nodes_in = raw.n();
    let (ds, pruned) = if data.no_prune { (raw, Vec::new()) } else { prune_zero_degree(&raw)? };
    let cov = build_edge_covariates(&ds, &spec)?;
    let net = ds.network();
    let res = fit(&net, &cov, restriction, &FitOptions::default())?.require_converged()?;
    let inf = infer(&net, &cov, &res, ci_level, None)?;
    Ok(FitReport::new(&ds, nodes_in, pruned, &spec.names(), &res, &inf))
}

fn read_config(path: &Path) -> Result<SimDesign, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let mut design: SimDesign =
        serde_json::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    if design.pairs.is_empty() && design.n >= 4 {
        design.pairs = SimDesign::table_pairs(design.n);
    }
    Ok(design)
}

/// Dataset recovery result.
#[derive(Debug, serde::Serialize)]
struct DatasetRecovery<'a> {
    delta: f64,
    recovered: Vec<&'a str>,
}

/// Runs one command; returns what should go to stdout, if anything.
pub fn run(cli: Cli) -> Result<Option<String>, CliError> {
    match cli.command {
        Command::Fit(a) => {
            let report = StoredReport::Fit(fit_dataset(&a.data, a.restriction.into(), a.ci_level)?);
            emit(&render(&report, a.format), a.out.as_deref())
        }
        Command::Simulate(a) => {
            let mut design = read_config(&a.config)?;
            if let Some(r) = a.reps {
                design.replications = r;
            }
            if let Some(s) = a.seed {
                design.base_seed = s;
            }
            let report = StoredReport::Simulation(run_design(&design)?);
            emit(&render(&report, a.format), a.out.as_deref())
        }
        Command::Recover(a) => {
            if let Some(d) = a.delta {
                if !(d.is_finite() && d >= 0.0) {
                    return Err(CliError::Argument(format!("--delta {d} must be finite and non-negative")));
                }
            }
            match a.edges {
                Some(edges) => {
                    let data = DataArgs { edges, attrs: a.attrs, spec: a.spec, no_prune: a.no_prune };
                    let spec = match &data.spec {
                        Some(p) => AttributeSpec::load(p)?,
                        None => AttributeSpec::default(),
                    };
                    let raw = load_dataset(&data.edges, data.attrs.as_deref())?;
                    let (ds, _) = if data.no_prune { (raw, Vec::new()) } else { prune_zero_degree(&raw)? };
                    let cov = build_edge_covariates(&ds, &spec)?;
                    let res = fit(&ds.network(), &cov, Restriction::Practical, &FitOptions::default())?
                        .require_converged()?;
                    let delta = a.delta.unwrap_or_else(|| recovery_threshold(ds.n()));
                    let set = recover_signals(&res.params_hat, delta);
                    let out = DatasetRecovery { delta, recovered: set.iter().map(|&k| ds.node_ids[k].as_str()).collect() };
                    let text = match a.format {
                        Format::Json => serde_json::to_string_pretty(&out).expect("serializable"),
                        Format::Csv => std::iter::once("node".to_string())
                            .chain(out.recovered.iter().map(|s| s.to_string()))
                            .map(|l| l + "\n")
                            .collect(),
                        Format::Text => format!(
                            "threshold {:.4}: {} node(s) with in-degree effect above it\n{}\n",
                            delta,
                            out.recovered.len(),
                            out.recovered.join(" ")
                        ),
                    };
                    emit(&text, a.out.as_deref())
                }
                None => {
                    if a.n < 4 || a.reps == 0 {
                        return Err(CliError::Argument("--n must be at least 4 and --reps positive".into()));
                    }
                    let delta = a.delta.unwrap_or_else(|| recovery_threshold(a.n));
                    let report = StoredReport::Recovery(run_recovery(a.n, a.reps, a.seed, delta));
                    emit(&render(&report, a.format), a.out.as_deref())
                }
            }
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.input).map_err(|source| IoError::Io { path: a.input.clone(), source })?;
            let report: StoredReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Config { path: a.input.clone(), message: e.to_string() })?;
            Ok(Some(render(&report, a.format)))
        }
    }
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Some(text)) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            0
        }
        Ok(None) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
