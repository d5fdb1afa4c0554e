use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use compatkit::serde_ext::extended_f64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "compatkit", version, about = "Divergence and decision P-values, GLM fit geometry and simulations")]
pub struct Cli {
    /// Omit the echoed inputs from JSON output.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Re-run the command recorded in a previous JSON output.
    #[arg(long, global = true, value_name = "FILE")]
    pub from_json: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// P-value for H: μ = m.
    #[command(allow_negative_numbers = true)]
    Point(PointArgs),
    /// P-value for H: lo ≤ μ ≤ hi.
    #[command(allow_negative_numbers = true)]
    Interval(IntervalArgs),
    /// P-value for the nonequivalence hypothesis μ ≤ lo or μ ≥ hi.
    #[command(allow_negative_numbers = true)]
    Equivalence(EquivalenceArgs),
    /// S-value −log_base(p).
    Svalue(SvalueArgs),
    /// Lower bound on the Bayes factor for the tested model.
    Bfbound(BfboundArgs),
    /// Generalized linear model fits and nested comparisons.
    #[command(subcommand)]
    Glm(GlmCommand),
    /// Simultaneous and per-component P-values for a vector of means.
    #[command(allow_negative_numbers = true)]
    Scheffe(ScheffeArgs),
    /// P-value function, S-value curve and compatibility interval.
    #[command(allow_negative_numbers = true)]
    Curve(CurveArgs),
    /// Seeded Monte Carlo of P-value distributions.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SummaryArgs {
    /// Sample mean μ̂.
    #[arg(long)]
    pub mean: f64,
    /// Known standard deviation of one observation.
    #[arg(long)]
    pub sigma: f64,
    /// Sample size.
    #[arg(long)]
    pub n: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PointArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub summary: SummaryArgs,
    #[arg(long)]
    pub m: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct IntervalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub summary: SummaryArgs,
    /// Lower end; `-inf` for a half-line.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(with = "extended_f64")]
    pub lo: f64,
    /// Upper end; `inf` for a half-line.
    #[arg(long)]
    #[serde(with = "extended_f64")]
    pub hi: f64,
    #[arg(long, default_value = "divergence", value_parser = ["divergence", "hl"])]
    pub method: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EquivalenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub summary: SummaryArgs,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value = "tost", value_parser = ["tost", "divergence"])]
    pub method: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SvalueArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub base: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BfboundArgs {
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmCommand {
    /// Fit one model and report its goodness-of-fit statistics.
    Fit(GlmFitArgs),
    /// Compare a restricted design M against an embedding design A.
    Compare(GlmCompareArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FamilyArgs {
    #[arg(long, value_parser = ["gaussian", "poisson", "binomial"])]
    pub family: String,
    /// Response vector, one value per row.
    #[arg(long, value_name = "FILE")]
    pub response: PathBuf,
    /// Known covariance matrix (gaussian).
    #[arg(long, value_name = "FILE")]
    pub cov: Option<PathBuf>,
    /// Trials per row (binomial).
    #[arg(long, value_name = "FILE")]
    pub trials: Option<PathBuf>,
    /// Fixed offset added to the linear predictor.
    #[arg(long, value_name = "FILE")]
    pub offset: Option<PathBuf>,
    #[arg(long, default_value = "ml", value_parser = ["ml", "pearson", "gls"])]
    pub principle: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlmFitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_name = "FILE")]
    pub design: PathBuf,
    /// Mean vector used in place of the response when the saturated
    /// reference is undefined (zero counts).
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlmCompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_name = "FILE")]
    pub design_a: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub design_m: PathBuf,
    #[arg(long, default_value = "lr", value_parser = ["lr", "score", "wald"])]
    pub method: String,
    /// Information used by the Wald statistic.
    #[arg(long, default_value = "embedding", value_parser = ["embedding", "restricted"])]
    pub wald_anchor: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScheffeArgs {
    /// Comma-separated sample means.
    #[arg(long)]
    pub ybar: String,
    /// Covariance of one observation vector.
    #[arg(long, value_name = "FILE")]
    pub sigma: PathBuf,
    #[arg(long)]
    pub n: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CurveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub summary: SummaryArgs,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long)]
    pub steps: usize,
    /// Also report the π-compatibility interval.
    #[arg(long)]
    pub pi: Option<f64>,
    /// Scan intervals [β − w, β + w] instead of points.
    #[arg(long, value_name = "W")]
    pub half_width: Option<f64>,
    /// P-value method for interval scans.
    #[arg(long, default_value = "divergence", value_parser = ["divergence", "hl"])]
    pub method: String,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateCommand {
    /// Distribution of the P-value for one configuration.
    Pdist(SimulateArgs),
    /// Rejection rates over a grid of true means and sample sizes.
    Size(SimulateArgs),
    /// HL versus divergence power at one alternative.
    Power(PowerArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, env = "COMPATKIT_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimulateArgs,
    /// Replace the config's alternative by the one giving this HL power.
    #[arg(long)]
    pub target_power: Option<f64>,
}
