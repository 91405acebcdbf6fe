use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphreg::estimation::{ErrorModel, FitConfig, GammaMode};
use sphreg::io::ColumnSpec;

#[derive(Debug, Parser)]
#[command(name = "sphreg", version, about = "Regression for directional responses on the sphere")]
pub struct Cli {
    /// Seed for every random choice; equal seeds give identical output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write the fit JSON and a text report.
    Fit(FitCmd),
    /// Predicted mean directions for a covariate file.
    Predict(PredictCmd),
    /// Simulate responses from a parameter or fit JSON.
    Simulate(SimulateCmd),
    /// Write a parameter JSON with a random link, for simulation.
    Params(ParamsCmd),
    /// Leave-one-out cross-validated prediction error.
    Cv(CvCmd),
    /// Parametric bootstrap: likelihood-ratio test or scale intervals.
    Bootstrap(BootstrapCmd),
    /// Number of free parameters of a model.
    Dof(DofCmd),
    /// Convert moment-tensor columns to unit vectors in R^5 or back.
    ConvertMt(ConvertMtCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Vmf,
    Svmf,
}

impl From<ModelArg> for ErrorModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Vmf => ErrorModel::Vmf,
            ModelArg::Svmf => ErrorModel::Svmf,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GammaArg {
    Estimated,
    TiedToB01,
    TiedToMean,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response columns (unit vectors).
    #[arg(long, value_delimiter = ',', required = true)]
    pub response: Vec<String>,
    /// Spherical covariate columns (unit vectors).
    #[arg(long, value_delimiter = ',')]
    pub spherical: Vec<String>,
    /// Euclidean covariate columns.
    #[arg(long, value_delimiter = ',')]
    pub euclidean: Vec<String>,
    /// Add a column of ones as the first Euclidean covariate.
    #[arg(long)]
    pub intercept: bool,
    /// Rescale non-constant Euclidean columns to mean 0 and sd 1.
    #[arg(long)]
    pub standardize: bool,
}

impl DataArgs {
    pub fn spec(&self) -> ColumnSpec {
        ColumnSpec {
            response: self.response.clone(),
            spherical: self.spherical.clone(),
            euclidean: self.euclidean.clone(),
            intercept: self.intercept,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "svmf")]
    pub model: ModelArg,
    /// How the base location of the orientation axes is chosen.
    #[arg(long, value_enum, default_value = "estimated")]
    pub gamma01: GammaArg,
    /// Keep an estimated base location at its starting value.
    #[arg(long)]
    pub freeze_gamma01: bool,
    /// Fixed tail scale a1.
    #[arg(long, default_value_t = 1.0)]
    pub a1: f64,
    /// Number of optimizer starts; starts after the first are randomized.
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    /// Skip the rotation and centering applied before fitting.
    #[arg(long)]
    pub no_preliminary: bool,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: u64,
}

impl ModelArgs {
    pub fn config(&self, seed: u64) -> FitConfig {
        FitConfig {
            model: self.model.into(),
            a1: self.a1,
            gamma01: match self.gamma01 {
                GammaArg::Estimated => GammaMode::Estimated,
                GammaArg::TiedToB01 => GammaMode::TiedToB01,
                GammaArg::TiedToMean => GammaMode::TiedToMean,
            },
            freeze_gamma01: self.freeze_gamma01,
            preliminary: !self.no_preliminary,
            max_iter: self.max_iter,
            n_starts: self.starts,
            seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fit JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Text report output; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    #[arg(long)]
    pub fit: PathBuf,
    /// Covariate CSV with the columns named in the fit.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    /// Parameter JSON written by `params`.
    #[arg(long, conflicts_with = "fit", required_unless_present = "fit")]
    pub params: Option<PathBuf>,
    /// Simulate from a fitted model instead.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Take covariates from this CSV instead of generating them.
    #[arg(long, conflicts_with = "n", required_unless_present = "n")]
    pub covariates: Option<PathBuf>,
    /// Number of cases with generated covariates.
    #[arg(long)]
    pub n: Option<usize>,
    /// Concentration of generated spherical covariates around their center.
    #[arg(long, default_value_t = 5.0)]
    pub spherical_kappa: f64,
    /// Standard deviation of generated Euclidean covariates.
    #[arg(long, default_value_t = 1.0)]
    pub euclidean_sd: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParamsCmd {
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub qs: usize,
    /// Euclidean covariate dimension, including the intercept when present.
    #[arg(long, default_value_t = 0)]
    pub qe: usize,
    /// Make the first Euclidean covariate a column of ones.
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, value_enum, default_value = "svmf")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 50.0)]
    pub kappa: f64,
    /// Scales a2..ap; their product must be one. Defaults to all ones.
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<f64>,
    /// Size of the random departure from the default link.
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Report JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-case squared errors as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BootstrapKind {
    /// Test the von Mises-Fisher model against the scaled one.
    Lrt,
    /// Percentile intervals for the scales of a scaled fit.
    Scales,
}

#[derive(Debug, Args)]
pub struct BootstrapCmd {
    #[arg(long, value_enum)]
    pub kind: BootstrapKind,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of resamples.
    #[arg(long, default_value_t = 99)]
    pub b: usize,
    /// Interval level for `--kind scales`.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Existing fit JSON for `--kind scales`; the data are fitted when absent.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// One row per resample as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DofCmd {
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub qs: usize,
    #[arg(long, default_value_t = 0)]
    pub qe: usize,
    #[arg(long, value_enum, default_value = "svmf")]
    pub model: ModelArg,
    /// Count the base location as estimated.
    #[arg(long)]
    pub estimate_gamma01: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MtDirection {
    /// Six tensor columns to five unit-vector columns.
    ToS4,
    /// Five unit-vector columns to six tensor columns.
    ToMt,
}

#[derive(Debug, Args)]
pub struct ConvertMtCmd {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub to: MtDirection,
    /// Remove the trace and rescale each tensor to unit norm first.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_delimiter = ',', default_value = "Mrr,Mtt,Mff,Mrt,Mrf,Mtf")]
    pub tensor_columns: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "s1,s2,s3,s4,s5")]
    pub vector_columns: Vec<String>,
}
