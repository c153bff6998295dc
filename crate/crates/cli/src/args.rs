use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "capgate",
    version,
    about = "Risk-calibrated process capability approval"
)]
pub struct Cli {
    /// Seed for every randomized step; recorded in the run manifest.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (estimate, decide, batch, synth) or directory (simulate).
    /// Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plug-in Cpk and its standard error.
    Estimate(SampleArgs),
    /// Accept or reject under one rule of the guard-band family.
    Decide(DecideArgs),
    /// Monte Carlo operating characteristics (presets or a custom grid).
    Simulate(SimulateArgs),
    /// Assess a multi-dimension dataset across a cost-ratio grid.
    Batch(BatchArgs),
    /// Write a synthetic multi-dimension dataset.
    Synth(SynthArgs),
}

/// Measurements either as long-form CSV (`dimension_id,lsl,usl,value`) or as
/// one value per line with `--lsl/--usl`.
#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, required_unless_present = "values")]
    pub input: Option<PathBuf>,

    /// Comma-separated measurements, instead of `--input`.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "input",
        allow_negative_numbers = true
    )]
    pub values: Option<Vec<f64>>,

    #[arg(long, allow_negative_numbers = true)]
    pub lsl: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub usl: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("rule")
        .required(true)
        .args(["deterministic", "lcb", "alpha", "lambda"])
))]
pub struct DecideArgs {
    #[command(flatten)]
    pub sample: SampleArgs,

    #[arg(long, default_value_t = 1.33)]
    pub c0: f64,

    /// Accept iff Cpk-hat >= c0.
    #[arg(long)]
    pub deterministic: bool,

    /// Accept iff the lower confidence bound at tail level GAMMA is >= c0.
    #[arg(long, value_name = "GAMMA")]
    pub lcb: Option<f64>,

    /// Accept iff the failure probability is at most ALPHA.
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,

    /// Cost ratio of a false accept to a false reject (alpha = 1/(1+LAMBDA)).
    #[arg(long, value_name = "LAMBDA")]
    pub lambda: Option<f64>,

    /// Use the bootstrap failure probability instead of the normal theory one.
    #[arg(long)]
    pub bootstrap: bool,

    #[arg(long, default_value_t = 1000)]
    pub b_boot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// lambda, alpha and k for lambda in {1, 4, 9, 19, 99}.
    Table1,
    /// Expected loss of deterministic vs cost-sensitive rules at the boundary.
    Table2,
    /// Acceptance at Cpk = c0 against Phi(-k), n = 500.
    Boundary,
    /// Acceptance surface over the standard grid with 0.5 contours.
    Surface,
    /// False-accept / false-reject rates across lambda.
    Tradeoff,
    /// Expected loss against true capability.
    LossCurve,
    /// Deterministic, analytic and bootstrap rules on lognormal data.
    Nonnormal,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("preset_flag")
        .args(["table1", "table2", "boundary", "preset", "grid"])
))]
pub struct SimulateArgs {
    #[arg(long)]
    pub table1: bool,
    #[arg(long)]
    pub table2: bool,
    #[arg(long)]
    pub boundary: bool,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// JSON grid file: {cpk_true_values, n_values, lambda_values, context}.
    #[arg(long)]
    pub grid: Option<PathBuf>,

    #[arg(long, default_value_t = 0.80)]
    pub cpk_from: f64,
    #[arg(long, default_value_t = 2.00)]
    pub cpk_to: f64,
    #[arg(long, default_value_t = 0.02)]
    pub cpk_step: f64,
    #[arg(long, value_delimiter = ',', default_value = "32")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50,100")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub replications: usize,
    #[arg(long, default_value_t = 1.33)]
    pub c0: f64,
    /// Process mean as a fraction of the half-width (0 = centered).
    #[arg(long, default_value_t = 0.0)]
    pub mean_offset: f64,
    /// Charge the boundary state Cpk = c0 as capable instead of incapable.
    #[arg(long)]
    pub boundary_capable: bool,
}

impl SimulateArgs {
    pub fn chosen_preset(&self) -> Option<Preset> {
        if self.table1 {
            Some(Preset::Table1)
        } else if self.table2 {
            Some(Preset::Table2)
        } else if self.boundary {
            Some(Preset::Boundary)
        } else {
            self.preset
        }
    }
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Long-form CSV: dimension_id,lsl,usl,value.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.33)]
    pub c0: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub b_boot: usize,
    /// Significance level of the normality test.
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub dimensions: usize,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 1.33)]
    pub c0: f64,
    #[arg(long, default_value_t = 0.25)]
    pub below_fraction: f64,
    #[arg(long, default_value_t = 0.2)]
    pub near_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub near_halfwidth: f64,
    #[arg(long, default_value_t = 0.3)]
    pub non_normal_fraction: f64,
}
