#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use artifacts::Artifacts;
use config::{Config, ConfigError, Experiment, KERNEL_CHECKS};

#[derive(Parser)]
#[command(name = "sdlab", version, about = "Experiments on -Δ + b·∇ with singular drift")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "sdlab-out")]
    out: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; `SDL_THREADS` takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    Constants,
    EstimateClass,
    Resolvent,
    PseudoResolvent,
    NormBounds,
    ConvergenceStudy,
    Semigroup,
    Ultracontractivity,
    VerifyKernels {
        /// Subset of A0,A1,A2,A3,A4,A5.
        #[arg(long, value_delimiter = ',')]
        which: Option<Vec<String>>,
    },
    HolderProbe,
    SmoothingStudy,
    WeakIdentity,
    Simulate,
    /// Runs the acceptance criteria (all, or `criteria` from the config).
    Acceptance,
    /// Writes `digest.md` for the artifacts in `--out`.
    Report,
    /// Runs the experiment named in the config.
    Run,
}

impl Cmd {
    fn experiment(&self) -> Option<Experiment> {
        Some(match self {
            Cmd::Constants => Experiment::Constants,
            Cmd::EstimateClass => Experiment::EstimateClass,
            Cmd::Resolvent => Experiment::Resolvent,
            Cmd::PseudoResolvent => Experiment::PseudoResolvent,
            Cmd::NormBounds => Experiment::NormBounds,
            Cmd::ConvergenceStudy => Experiment::ConvergenceStudy,
            Cmd::Semigroup => Experiment::Semigroup,
            Cmd::Ultracontractivity => Experiment::Ultracontractivity,
            Cmd::VerifyKernels { .. } => Experiment::VerifyKernels,
            Cmd::HolderProbe => Experiment::HolderProbe,
            Cmd::SmoothingStudy => Experiment::SmoothingStudy,
            Cmd::WeakIdentity => Experiment::WeakIdentity,
            Cmd::Simulate => Experiment::Simulate,
            Cmd::Acceptance => Experiment::Acceptance,
            Cmd::Report | Cmd::Run => return None,
        })
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>> {
    match std::env::var("SDL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::new("SDL_THREADS", format!("expected a positive integer (got {v:?})")).into()),
        },
        Err(_) => Ok(cli.threads.filter(|&n| n > 0)),
    }
}

fn execute(cli: Cli) -> Result<bool> {
    if let Cmd::Report = cli.command {
        let digest = report::write_digest(&cli.out)?;
        println!("wrote {}", digest.path.display());
        for g in &digest.gaps {
            println!("gap: {g}");
        }
        return Ok(true);
    }
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let exp = match (cli.command.experiment(), cfg.experiment) {
        (Some(sub), Some(named)) if sub != named => {
            return Err(ConfigError::new(
                "experiment",
                format!("config names `{}` but the subcommand is `{}`", named.name(), sub.name()),
            )
            .into());
        }
        (Some(sub), _) => sub,
        (None, Some(named)) => named,
        (None, None) => return Err(ConfigError::new("experiment", "required by `run`").into()),
    };
    cfg.experiment = Some(exp);
    cfg.grid = Some(cfg.grid());
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Cmd::VerifyKernels { which: Some(w) } = &cli.command {
        if let Some(bad) = w.iter().find(|k| !KERNEL_CHECKS.contains(&k.as_str())) {
            return Err(ConfigError::new("--which", format!("unknown check {bad:?}")).into());
        }
        cfg.which = Some(w.clone());
    }
    if let Some(n) = threads(&cli)? {
        sdlab::exec::configure_threads(n);
    }
    let mut out = Artifacts::create(&cli.out)?;
    let ok = experiments::run(exp, &cfg, &mut out)?;
    let seed = cfg.seed;
    let manifest = out.finish(exp.name(), &cfg, seed, sdlab::exec::thread_count())?;
    println!("wrote {}", manifest.display());
    Ok(ok)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<ConfigError>()) {
        return 2;
    }
    let guard = e
        .chain()
        .any(|c| matches!(c.downcast_ref::<sdlab::Error>(), Some(sdlab::Error::Guard(_))));
    if guard {
        eprintln!("note: δ lies outside the admissible range (m_d c_p δ must stay below 1)");
        return 3;
    }
    1
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
