use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use emergence::config::RunConfig;
use emergence::corpus::BackendKind;
use emergence::pipeline::{Command, Pipeline};
use emergence::synth::{self, SynthSpec};

#[derive(Parser)]
#[command(name = "emergence", version, about = "Trace new vocabulary terms and forecast which ones emerge")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Fixture,
    Live,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply the exclusion rules to each cohort.
    Select,
    /// Yearly major-topic counts for the selected terms.
    Counts,
    /// Categories, narrower terms, clinical significance and pathogen status.
    Profile,
    /// Trend classes, quartiles and statistical tests.
    Analyze,
    /// Forecasting sweep and full-data logistic fit.
    Train,
    /// Clinical-lag staging.
    Lag,
    /// Every step above.
    All,
    /// Write a synthetic fixture with a config pointing at it.
    Generate {
        #[arg(long, default_value = "fixture")]
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        terms_per_cohort: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let command = match cli.command {
        Cmd::Select => Command::Select,
        Cmd::Counts => Command::Counts,
        Cmd::Profile => Command::Profile,
        Cmd::Analyze => Command::Analyze,
        Cmd::Train => Command::Train,
        Cmd::Lag => Command::Lag,
        Cmd::All => Command::All,
        Cmd::Generate { dir, terms_per_cohort } => {
            let mut spec = SynthSpec {
                terms_per_cohort,
                ..SynthSpec::default()
            };
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let path = synth::write_fixture(&dir, &spec)
                .with_context(|| format!("writing fixture to {}", dir.display()))?;
            println!("{}", path.display());
            return Ok(());
        }
    };

    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(b) = cli.backend {
        config.backend = match b {
            Backend::Fixture => BackendKind::Fixture,
            Backend::Live => BackendKind::Live,
        };
    }
    config.live = config.live.with_env_overrides();

    let pipeline = Pipeline::load(config)?;
    for path in pipeline.run(command)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
