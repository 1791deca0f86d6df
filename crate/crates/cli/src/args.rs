use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wetspell::fitting::ModelKind;
use wetspell::segmentation::MissingPolicy;
use wetspell::windowing::TargetMode;

#[derive(Debug, Parser)]
#[command(
    name = "wetspell",
    version,
    about = "Anomalously heavy precipitation over wet periods"
)]
pub struct Cli {
    /// Seed for every random draw (overrides a simulation config's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for scan and simulate; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Split daily series into wet periods.
    Segment(SegmentArgs),
    /// Fit a model to wet periods, or sweep censoring thresholds with --table.
    Fit(FitArgs),
    /// Test every period's daily maximum against tempered Snedecor-Fisher quantiles.
    TestDaily(TestDailyArgs),
    /// Classify periods by a moving-window SR0 test on their totals.
    Scan(ScanArgs),
    /// Run the Monte Carlo experiments of a simulation config.
    Simulate(SimulateArgs),
    /// Generate a synthetic daily series.
    Synth(SynthArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Segment(_) => "segment",
            Self::Fit(_) => "fit",
            Self::TestDaily(_) => "test-daily",
            Self::Scan(_) => "scan",
            Self::Simulate(_) => "simulate",
            Self::Synth(_) => "synth",
            Self::Replay(_) => "replay",
        }
    }

    /// Makes every path absolute so a manifest can be replayed from anywhere.
    pub fn absolutize(&mut self) -> std::io::Result<()> {
        fn abs(p: &mut PathBuf) -> std::io::Result<()> {
            *p = std::path::absolute(&*p)?;
            Ok(())
        }
        match self {
            Self::Segment(a) => {
                abs(&mut a.input)?;
                abs(&mut a.output)
            }
            Self::Fit(a) => {
                abs(&mut a.periods)?;
                abs(&mut a.output)
            }
            Self::TestDaily(a) => {
                abs(&mut a.periods)?;
                abs(&mut a.output)?;
                if let Some(t) = a.thresholds.as_mut() {
                    abs(t)?;
                }
                if let Some(f) = a.fit.as_mut() {
                    abs(f)?;
                }
                Ok(())
            }
            Self::Scan(a) => {
                abs(&mut a.periods)?;
                abs(&mut a.output)
            }
            Self::Simulate(a) => {
                abs(&mut a.config)?;
                abs(&mut a.output_dir)
            }
            Self::Synth(a) => {
                abs(&mut a.config)?;
                abs(&mut a.output)
            }
            Self::Replay(a) => {
                abs(&mut a.manifest)?;
                abs(&mut a.output_dir)
            }
        }
    }

    /// Points every output of the command into `dir`, keeping file names.
    pub fn redirect(&mut self, dir: &Path) {
        let move_into = |p: &mut PathBuf| {
            if let Some(name) = p.file_name() {
                *p = dir.join(name);
            }
        };
        match self {
            Self::Segment(a) => move_into(&mut a.output),
            Self::Fit(a) => move_into(&mut a.output),
            Self::TestDaily(a) => {
                move_into(&mut a.output);
                if let Some(t) = a.thresholds.as_mut() {
                    move_into(t);
                }
            }
            Self::Scan(a) => move_into(&mut a.output),
            Self::Simulate(a) => a.output_dir = dir.to_path_buf(),
            Self::Synth(a) => move_into(&mut a.output),
            Self::Replay(_) => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingArg {
    Break,
    Skip,
}

impl From<MissingArg> for MissingPolicy {
    fn from(m: MissingArg) -> Self {
        match m {
            MissingArg::Break => MissingPolicy::Break,
            MissingArg::Skip => MissingPolicy::Skip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Negbin,
    TsfQuantile,
    TsfLs,
    GammaTotals,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Negbin => ModelKind::Negbin,
            ModelArg::TsfQuantile => ModelKind::TemperedSfQuantile,
            ModelArg::TsfLs => ModelKind::TemperedSfLs,
            ModelArg::GammaTotals => ModelKind::GammaTotals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetArg {
    Max,
    Fixed,
}

impl From<TargetArg> for TargetMode {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Max => TargetMode::WindowMax,
            TargetArg::Fixed => TargetMode::FixedCoordinate,
        }
    }
}

/// Which periods of a periods file to use.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PeriodFilter {
    /// Keep only this station (required when the file holds several).
    #[arg(long)]
    pub station: Option<String>,

    /// Drop periods that touch missing days.
    #[arg(long)]
    pub exclude_flagged: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SegmentArgs {
    /// Daily CSV: `date,precip_mm` or `station,date,precip_mm`.
    pub input: PathBuf,

    /// Periods file (.json or .csv).
    #[arg(short, long)]
    pub output: PathBuf,

    /// A day is wet when its precipitation exceeds this many mm.
    #[arg(long, default_value_t = 0.0)]
    pub wet_threshold: f64,

    #[arg(long, value_enum, default_value_t = MissingArg::Break)]
    pub missing: MissingArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Periods file written by `segment`.
    pub periods: PathBuf,

    /// FitReport (.json), or the censoring table (.csv) with --table.
    #[arg(short, long)]
    pub output: PathBuf,

    #[arg(long, value_enum, default_value_t = ModelArg::TsfQuantile)]
    pub model: ModelArg,

    #[arg(long, default_value_t = 1)]
    pub min_duration: u32,

    /// Quantile orders p1,p2,p3 of the quantile method.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.25, 0.5, 0.75])]
    pub quantiles: Vec<f64>,

    /// Negative binomial shape; estimated from the durations when absent.
    #[arg(long)]
    pub r: Option<f64>,

    /// Fit both tempered estimators at minimum durations 1, 2, 3, 4, 6, 8, 10, 15.
    #[arg(long)]
    pub table: bool,

    /// Minimum sample size of the maximum-likelihood fits.
    #[arg(long, default_value_t = 30)]
    pub min_samples: usize,

    #[command(flatten)]
    pub filter: PeriodFilter,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestDailyArgs {
    pub periods: PathBuf,

    /// Verdicts (.jsonl or .csv).
    #[arg(short, long)]
    pub output: PathBuf,

    /// Significance levels; defaults give the 0.9, 0.95 and 0.99 quantiles.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.01])]
    pub epsilon: Vec<f64>,

    /// Threshold lines for plotting; defaults to `<output stem>.thresholds.csv`.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,

    /// FitReport JSON holding tempered Snedecor-Fisher parameters.
    #[arg(long, conflicts_with_all = ["lambda", "gamma"])]
    pub fit: Option<PathBuf>,

    #[arg(long)]
    pub r: Option<f64>,

    #[arg(long, requires = "gamma")]
    pub lambda: Option<f64>,

    #[arg(long, requires = "lambda")]
    pub gamma: Option<f64>,

    /// Estimator used when parameters are fitted here.
    #[arg(long, value_enum, default_value_t = ModelArg::TsfQuantile)]
    pub model: ModelArg,

    /// Censoring threshold of the fit done here.
    #[arg(long, default_value_t = 1)]
    pub min_duration: u32,

    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.25, 0.5, 0.75])]
    pub quantiles: Vec<f64>,

    #[command(flatten)]
    pub filter: PeriodFilter,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    pub periods: PathBuf,

    /// Window verdicts (.jsonl or .csv).
    #[arg(short, long)]
    pub output: PathBuf,

    /// Window length in days, converted with the mean gap between period onsets.
    #[arg(long, conflicts_with = "m")]
    pub horizon_days: Option<u32>,

    /// Window width in periods.
    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value_t = TargetArg::Max)]
    pub target: TargetArg,

    /// Negative binomial shape; estimated from the durations when absent.
    #[arg(long)]
    pub r: Option<f64>,

    #[command(flatten)]
    pub filter: PeriodFilter,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Simulation config (.json or .toml).
    pub config: PathBuf,

    #[arg(short, long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Synthetic series config (.json or .toml).
    pub config: PathBuf,

    /// Daily CSV.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,

    /// Where the replayed outputs go.
    #[arg(short, long)]
    pub output_dir: PathBuf,
}
