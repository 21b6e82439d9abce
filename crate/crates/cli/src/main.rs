//! `career-forge`: corpus ingestion, synthetic corpora, factor series,
//! datasets, model training and evaluation, and analysis reports.

mod artifacts;
mod commands;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use career_forge::data::Society;
use career_forge::datasets::Mode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Analysis, AnalysisOptions, Preset};
use config::RunConfig;
use pipeline::ModelKind;

/// Bad invocation: unknown values, missing inputs, malformed config. Exits
/// with status 2, like clap's own usage errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "career-forge",
    version,
    about = "Scholarly career modeling pipeline"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Corpus directory with scholars.jsonl and publications.jsonl.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    society: Option<SocietyArg>,
    /// Calendar year, or an inclusive range such as 2015..2019.
    #[arg(long, global = true)]
    cy: Option<String>,
    /// Seed for every random choice (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Drop noisy Fellow records after loading the corpus.
    #[arg(long, global = true)]
    filter: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SocietyArg {
    Acm,
    Ieee,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Classification,
    Regression,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and summarize it per society and gender.
    Ingest,
    /// Generate a synthetic corpus and its ground-truth ledger.
    Synth {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Write factor series as CSV (through --cy, or the last observed year).
    Features {
        /// Restrict to these scholar ids.
        #[arg(long = "scholar")]
        scholars: Vec<String>,
    },
    /// Build and store the train/test split for one calendar year.
    Dataset {
        #[arg(long, value_enum, default_value = "classification")]
        mode: ModeArg,
    },
    /// Fit one model for one calendar year and save it.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
    },
    /// Fit and score a model for each calendar year, with an average row.
    Evaluate {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Also write wall-clock timings.
        #[arg(long)]
        timing: bool,
    },
    /// Run one analysis.
    Analyze {
        #[arg(value_enum)]
        name: Analysis,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Run every analysis into one directory.
    Report {
        #[command(flatten)]
        opts: AnalysisArgs,
    },
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Hop scopes for the co-author evolution curves.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    hops: Vec<usize>,
    /// Output directory of a `train --model cls-fellow` run.
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

impl From<AnalysisArgs> for AnalysisOptions {
    fn from(a: AnalysisArgs) -> Self {
        AnalysisOptions {
            hops: a.hops,
            model_dir: a.model_dir,
        }
    }
}

fn resolve(common: Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if common.corpus.is_some() {
        cfg.corpus = common.corpus;
    }
    if common.out.is_some() {
        cfg.out = common.out;
    }
    if let Some(s) = common.society {
        cfg.society = Some(match s {
            SocietyArg::Acm => Society::Acm,
            SocietyArg::Ieee => Society::Ieee,
        });
    }
    if common.cy.is_some() {
        cfg.cy = common.cy;
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.filter {
        cfg.filter = Some(true);
    }
    // Surface a malformed --cy before any work starts.
    cfg.years()?;
    Ok(cfg)
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("CAREER_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        UsageError(format!(
            "CAREER_FORGE_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<PathBuf> {
    configure_threads()?;
    let cfg = resolve(cli.common)?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Synth { preset } => commands::synth(&cfg, preset),
        Command::Features { scholars } => commands::features(&cfg, &scholars),
        Command::Dataset { mode } => commands::dataset(
            &cfg,
            match mode {
                ModeArg::Classification => Mode::Classification,
                ModeArg::Regression => Mode::Regression,
            },
        ),
        Command::Train { model } => commands::train_model(&cfg, model),
        Command::Evaluate { model, timing } => commands::evaluate(&cfg, model, timing),
        Command::Analyze { name, opts } => commands::analyze(&cfg, name, &opts.into()),
        Command::Report { opts } => commands::report(&cfg, &opts.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
