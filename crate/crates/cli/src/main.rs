mod commands;
mod error;
mod predictions;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use relgraph_core::config::RunConfig;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "relgraph", version, about = "Keyword-targeted relation/value extraction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags every subcommand accepts. Each one overrides the config file and
/// the `RELGRAPH_*` environment.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; the run manifest is written here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset root (`<vertical>/<website>/pages/*.htm`).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a dataset and write the canonical corpus directory.
    Ingest,
    /// Generate a synthetic planted-relation dataset under `--out`.
    SynthGen(SynthArgs),
    /// Pretrain the graph network on the training split and freeze it.
    PretrainGraph,
    /// Fit the fusion head over a frozen graph model.
    TrainHead(TrainHeadArgs),
    /// Extract tuples for one keyword from HTML pages of one website.
    Extract(ExtractArgs),
    /// Score predictions against the test split (or all pages).
    Evaluate(EvaluateArgs),
    /// Run the four ablation arms on the configured split.
    Ablate,
    /// Render metrics or ablation JSON as a table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub verticals: usize,
    #[arg(long, default_value_t = 3)]
    pub websites: usize,
    #[arg(long, default_value_t = 50)]
    pub pages: usize,
    #[arg(long, value_enum, default_value_t = Noise::Moderate)]
    pub noise: Noise,
    /// Label relations with their keyword instead of site-chosen synonyms.
    #[arg(long)]
    pub verbatim_labels: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Zero,
    Moderate,
}

#[derive(Args, Debug)]
pub struct TrainHeadArgs {
    /// Frozen graph model (default: `<out>/graph.bin` when present).
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[arg(long)]
    pub keyword: String,
    #[arg(long, default_value = "")]
    pub description: String,
    /// Directory holding the trained models (default: `--out`).
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// HTML files, or directories of them, all from one website.
    #[arg(required = true)]
    pub pages: Vec<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Directory holding the trained models (default: `--out`).
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Score this predictions TSV instead of running the models.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Which pages are scored.
    #[arg(long, value_enum, default_value_t = PageSet::Test)]
    pub pages: PageSet,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PageSet {
    Test,
    All,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// `metrics.json` or `ablation.json` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

fn resolve_config(common: &Common) -> Result<RunConfig, CliError> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            let parsed: toml::Table = toml::from_str(&text)
                .map_err(|e| CliError::BadInput { path: path.clone(), line: 0, message: e.to_string() })?;
            Some(serde_json::to_value(parsed).expect("toml tables map onto json"))
        }
        None => None,
    };
    let mut flags: Vec<(&str, Value)> = Vec::new();
    if let Some(s) = common.seed {
        flags.push(("seed", json!(s)));
    }
    if let Some(w) = common.workers {
        flags.push(("workers", json!(w)));
    }
    if let Some(o) = &common.out {
        flags.push(("out", json!(o)));
    }
    if let Some(d) = &common.dataset {
        flags.push(("dataset", json!(d)));
    }
    Ok(RunConfig::resolve(file, std::env::vars(), &flags)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.common)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    }
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::SynthGen(a) => commands::synth_gen(&cfg, &a),
        Command::PretrainGraph => commands::pretrain_graph(&cfg),
        Command::TrainHead(a) => commands::train_head(&cfg, &a),
        Command::Extract(a) => commands::extract(&cfg, &a),
        Command::Evaluate(a) => commands::evaluate(&cfg, &a),
        Command::Ablate => commands::ablate(&cfg),
        Command::Report(a) => commands::report(&cfg, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
