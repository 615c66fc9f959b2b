mod analysis;
#[cfg(test)]
mod e2e;
mod attribution;
mod augment;
mod error;
mod inputs;
mod oracle_spec;
mod replay;
mod run;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::CliError;
use run::Run;

/// Group Shapley attribution for multi-keypoint predictors.
#[derive(Parser, Debug, Clone)]
#[command(name = "keyshap", version, about)]
pub struct Cli {
    /// Root seed; every random stream derives from it through named sub-seeds.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for oracle evaluation and per-image work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Skeleton document (names + edges). Defaults to the built-in COCO-17 schema.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,

    /// Directory for artifacts and `manifest.json`. Without it the primary
    /// artifact goes to stdout and no manifest is written.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Estimate the drop matrix and perturbation influence from an oracle.
    Interdep(InterdepArgs),
    /// Cluster keypoints from a drop matrix or PI matrix plus skeleton connectivity.
    Cluster(ClusterArgs),
    /// Group Shapley attribution report.
    Shapley(ShapleyArgs),
    /// Brute-force Shapley values of a small explicit game.
    Exact(ExactArgs),
    /// Oracle query budget of group Shapley versus full enumeration.
    Cost(CostArgs),
    /// Perturbation masks around one keypoint.
    Masks(MasksArgs),
    /// Group-based keypoint removal.
    #[command(subcommand)]
    Gkr(GkrCommand),
    /// Pairwise confidence correlation.
    Corr(CorrArgs),
    /// Render a labelled matrix CSV as an SVG heatmap.
    Render(RenderArgs),
    /// Oracle utilities.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Re-run a recorded command and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    /// `tabular:<csv>`, `synthetic:<config.json>` or `external:<command line>`.
    #[arg(long)]
    pub oracle: String,

    /// Reply timeout for external oracles.
    #[arg(long, env = "KEYSHAP_ORACLE_TIMEOUT_MS", default_value_t = 60_000)]
    #[serde(skip)]
    pub oracle_timeout_ms: u64,

    /// Comma-separated instance ids; all instances when omitted.
    #[arg(long, value_delimiter = ',')]
    pub instances: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InterdepArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Trials per single-removal coalition.
    #[arg(long, default_value_t = keyshap::perturb::DEFAULT_TRIALS)]
    pub trials: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
#[group(required = true, multiple = false, id = "source")]
pub struct ClusterSource {
    /// Drop matrix CSV (percent, COCO reference layout).
    #[arg(long)]
    pub delta: Option<PathBuf>,
    /// Labelled PI matrix CSV (fractions).
    #[arg(long)]
    pub pi: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: ClusterSource,
    #[arg(long, default_value_t = keyshap::grouping::DEFAULT_GROUPS)]
    pub g: usize,
    #[arg(long, default_value_t = keyshap::Linkage::default())]
    pub linkage: keyshap::Linkage,
    /// Cluster on PI alone, without skeleton connectivity.
    #[arg(long)]
    pub no_connectivity: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ShapleyArgs {
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Grouping JSON as written by `cluster`.
    #[arg(long)]
    pub grouping: PathBuf,
    /// Oracle trials averaged per coalition.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// How a foreign group's share is spread over its members.
    #[arg(long, default_value = "uniform")]
    pub split: keyshap::shapley::SplitMode,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExactArgs {
    /// CSV `coalition_hex,value` listing all 2^n coalitions.
    #[arg(long)]
    pub game: PathBuf,
    /// Also report a permutation-sampling estimate with this many permutations.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CostArgs {
    /// Group sizes, e.g. `5,3,3,3,3`.
    #[arg(long, value_delimiter = ',', conflicts_with = "grouping", required_unless_present = "grouping")]
    pub groups: Option<Vec<usize>>,
    /// Keypoint count; must equal the sum of `--groups` when given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Grouping JSON instead of explicit sizes.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Instance batches per coalition.
    #[arg(long, default_value_t = 1)]
    pub batches: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MasksArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[arg(long)]
    pub width: u32,
    #[arg(long)]
    pub height: u32,
    #[arg(long, default_value_t = keyshap::perturb::DEFAULT_TRIALS)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub base_scale: f64,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GkrCommand {
    /// Erase plans (JSON lines) for every annotated person.
    Plan(GkrPlanArgs),
    /// Apply erase plans to PPM images.
    Apply(GkrApplyArgs),
    /// Occlusion-ratio buckets per image.
    Stats(GkrStatsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GkrPlanArgs {
    /// COCO person_keypoints JSON.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Grouping JSON; required for the gkr planner.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    /// Keep threshold: each group is erased with probability 1 - p.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = keyshap::gkr::HEAD_SCALE)]
    pub head_scale: f64,
    #[arg(long, default_value_t = keyshap::gkr::BODY_SCALE)]
    pub body_scale: f64,
    /// `gkr`, or `random-erasing` for the grouping-agnostic baseline.
    #[arg(long, default_value = "gkr")]
    pub planner: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GkrApplyArgs {
    /// Plans written by `gkr plan`.
    #[arg(long)]
    pub plans: PathBuf,
    /// Directory holding the PPM images named in the plans.
    #[arg(long)]
    pub images: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GkrStatsArgs {
    #[arg(long)]
    pub annotations: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CorrArgs {
    /// Confidence CSV: header of keypoint names, one row per instance, empty = missing.
    #[arg(long)]
    pub table: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RenderArgs {
    /// Labelled square matrix CSV.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Decimals printed in each cell.
    #[arg(long, default_value_t = 2)]
    pub decimals: usize,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleCommand {
    /// Serve a synthetic oracle over the line-delimited JSON protocol on stdio.
    ServeSynthetic(ServeArgs),
    /// Write a synthetic oracle config whose single-removal drops match a drop matrix.
    SyntheticFromDelta(FromDeltaArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FromDeltaArgs {
    #[arg(long)]
    pub delta: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReplayArgs {
    /// `manifest.json` of the run to reproduce.
    pub manifest: PathBuf,
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    if let Command::Replay(args) = &cli.command {
        return replay::replay(cli, args);
    }
    if let Command::Oracle(OracleCommand::ServeSynthetic(args)) = &cli.command {
        return serve::serve_synthetic(cli, args);
    }
    let mut run = Run::new(cli, argv)?;
    match &cli.command {
        Command::Interdep(a) => attribution::interdep(&mut run, a)?,
        Command::Cluster(a) => attribution::cluster(&mut run, a)?,
        Command::Shapley(a) => attribution::shapley(&mut run, a)?,
        Command::Exact(a) => attribution::exact(&mut run, a)?,
        Command::Cost(a) => attribution::cost(&mut run, a)?,
        Command::Masks(a) => attribution::masks(&mut run, a)?,
        Command::Gkr(GkrCommand::Plan(a)) => augment::plan(&mut run, a)?,
        Command::Gkr(GkrCommand::Apply(a)) => augment::apply(&mut run, a)?,
        Command::Gkr(GkrCommand::Stats(a)) => augment::stats(&mut run, a)?,
        Command::Corr(a) => analysis::corr(&mut run, a)?,
        Command::Render(a) => analysis::render(&mut run, a)?,
        Command::Oracle(OracleCommand::SyntheticFromDelta(a)) => serve::synthetic_from_delta(&mut run, a)?,
        Command::Oracle(OracleCommand::ServeSynthetic(_)) | Command::Replay(_) => unreachable!(),
    }
    run.finish()
}

/// Parse-free entry point shared by `main` and `replay`.
pub fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be >= 1".into())),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli, argv))
        }
        None => dispatch(cli, argv),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match execute(&cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
