//! Flag surface.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ssbm::closedform::KldDirection;
use ssbm::distributions::Family;
use ssbm::ei::EiVariant;
use ssbm::grid::GridSpec;
use ssbm::Transform;

#[derive(Debug, Parser)]
#[command(name = "ssbm", version, about = "Sub-sampling block maxima analysis of extremes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extreme value index, plateau and risk levels for one series.
    Evi(EviArgs),
    /// Extremal index curve from rolling block maxima.
    Ei(EiArgs),
    /// MAPE benchmark on simulated AR(1) series.
    Simulate(SimulateArgs),
    /// Closed-form quantities for a parametric family.
    ClosedForm(ClosedFormArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    /// JSON report on stdout.
    Json,
    /// JSON report on stdout plus report.json and plot CSVs in --out-dir.
    CsvDir,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: String,
    /// Sort rows by this column (stable) before analysis.
    #[arg(long)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EviArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub transform: Transform,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "geometric:64")]
    pub grid: GridSpec,
    /// Plateau search floor; defaults to √N.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Block sizes for the risk block, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_extrapolate: Vec<f64>,
    /// Extremal index used for the reserve level m*/θ.
    #[arg(long)]
    pub ei_theta: Option<f64>,
    /// Exit with code 3 when the diagnostic is monotone_no_plateau.
    #[arg(long)]
    pub require_plateau: bool,
    #[arg(long, value_enum, default_value_t = OutputKind::Json)]
    pub output: OutputKind,
    #[arg(long, required_if_eq("output", "csv-dir"))]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginalKind {
    Ecdf,
    Exponential,
    Gpd,
    Gaussian,
}

impl MarginalKind {
    pub fn family(self) -> Option<Family> {
        match self {
            MarginalKind::Ecdf => None,
            MarginalKind::Exponential => Some(Family::Exponential),
            MarginalKind::Gpd => Some(Family::ParetoGpd),
            MarginalKind::Gaussian => Some(Family::Gaussian),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "identity")]
    pub transform: Transform,
    #[arg(long, value_enum, default_value_t = MarginalKind::Ecdf)]
    pub marginal: MarginalKind,
    #[arg(long, default_value = "bb")]
    pub variant: EiVariant,
    #[arg(long, default_value = "geometric:32")]
    pub grid: GridSpec,
    #[arg(long, value_enum, default_value_t = OutputKind::Json)]
    pub output: OutputKind,
    #[arg(long, required_if_eq("output", "csv-dir"))]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub phi: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub xi: Vec<f64>,
    #[arg(long, default_value_t = 365)]
    pub length: usize,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long)]
    pub seed: u64,
    /// Upper order statistics for hill, schultze_steinebach and smith; floor(√N) by default.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    /// Also write benchmark.csv and benchmark.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Quantity requested from `closed-form`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum What {
    Mpmr,
    MpmrAsymptotic,
    Emr,
    Variance,
    CdfOffset(f64),
    Kld(KldDirection),
}

impl FromStr for What {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "mpmr" => What::Mpmr,
            "mpmr-asymptotic" => What::MpmrAsymptotic,
            "emr" => What::Emr,
            "variance" => What::Variance,
            "kld-mx" => What::Kld(KldDirection::MToX),
            "kld-xm" => What::Kld(KldDirection::XToM),
            _ => match s.strip_prefix("cdf-offset:") {
                Some(k) => What::CdfOffset(k.parse().map_err(|_| format!("bad offset `{k}`"))?),
                None => {
                    return Err(format!(
                        "unknown quantity `{s}` (mpmr, mpmr-asymptotic, emr, variance, cdf-offset:<k>, kld-mx, kld-xm)"
                    ))
                }
            },
        })
    }
}

impl std::fmt::Display for What {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            What::Mpmr => write!(f, "mpmr"),
            What::MpmrAsymptotic => write!(f, "mpmr-asymptotic"),
            What::Emr => write!(f, "emr"),
            What::Variance => write!(f, "variance"),
            What::CdfOffset(k) => write!(f, "cdf-offset:{k}"),
            What::Kld(KldDirection::MToX) => write!(f, "kld-mx"),
            What::Kld(KldDirection::XToM) => write!(f, "kld-xm"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClosedFormArgs {
    #[arg(long)]
    pub model: Family,
    /// Scale σ for gaussian/halfnormal, ξ for pareto/exponential.
    #[arg(long, visible_aliases = ["xi", "sigma"], allow_hyphen_values = true)]
    pub param: f64,
    /// Block size; `inf` for the limit in cdf-offset.
    #[arg(long, allow_hyphen_values = true)]
    pub n: f64,
    #[arg(long)]
    pub what: What,
}
