//! Command-line driver: experiment subcommands writing CSV or JSON tables.

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use vpurify_core::channels::NoiseFamily;

use crate::config::RunConfig;
use crate::emit::{emit, Format};

#[derive(Parser, Debug)]
#[command(name = "vpurify", version, about = "Purification and error-cancellation experiments for noisy metrology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration (schema = 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Channel count(s), comma separated.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// Noise rate(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    p: Vec<f64>,
    /// Purification order.
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    layers: Option<usize>,
    #[arg(long, global = true)]
    shots: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One experiment from the config.
    Run,
    /// Gap against N for each method at its best layer count.
    ScanN,
    /// Estimate under noise confined to one cSWAP region at a time.
    NoiseLocations,
    /// Cost of ignoring control noise against cancelling it.
    CostCompare {
        #[arg(long, value_parser = parse_family)]
        family: Option<NoiseFamily>,
    },
    /// Control-noise invariance report.
    Theorem1,
    /// Analytic bias and variance curves.
    Scaling,
    /// Adaptive multi-parameter loop.
    Feedback,
    /// Correlated cSWAP noise with miscalibrated cancellation.
    Robustness,
}

fn parse_family(s: &str) -> std::result::Result<NoiseFamily, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if !self.n.is_empty() {
            if let (Some(task), [n]) = (cfg.task.as_mut(), self.n.as_slice()) {
                task.n_channels = *n;
            }
            cfg.scan.n = self.n.clone();
        }
        if !self.p.is_empty() {
            cfg.scan.p = self.p.clone();
        }
        if let Some(m) = self.m {
            cfg.mitigation.order = m;
            cfg.scaling.m = vec![m];
        }
        if let Some(l) = self.layers {
            cfg.mitigation.layers = l;
            cfg.scaling.layers = vec![l];
            cfg.scan.max_layers = Some(l);
        }
        if let Some(s) = self.shots {
            cfg.run.shots = Some(s);
        }
        if let Some(t) = self.trials {
            cfg.run.trials = t;
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let loaded = cli.common.config.as_deref().map(RunConfig::load).transpose()?;
    let defaults = match &cli.command {
        Command::NoiseLocations => commands::noise_locations_defaults(),
        Command::Theorem1 => commands::theorem1_defaults(),
        Command::Feedback => commands::feedback_defaults(),
        Command::Robustness => commands::robustness_defaults(),
        Command::Run | Command::ScanN => {
            if loaded.is_none() {
                bail!("{} needs --config", command_name(&cli.command));
            }
            RunConfig::default()
        }
        Command::CostCompare { .. } | Command::Scaling => RunConfig::default(),
    };
    let mut cfg = match loaded {
        Some(c) => commands::with_default_task(c, &defaults),
        None => defaults,
    };
    cli.common.apply(&mut cfg);
    cfg.validate()?;

    let table = match &cli.command {
        Command::Run => commands::run(&cfg)?,
        Command::ScanN => commands::scan_n(&cfg)?,
        Command::NoiseLocations => commands::noise_locations(&cfg)?,
        Command::CostCompare { family } => commands::cost_compare(&cfg, *family)?,
        Command::Theorem1 => commands::theorem1(&cfg)?,
        Command::Scaling => commands::scaling(&cfg)?,
        Command::Feedback => commands::feedback(&cfg)?,
        Command::Robustness => commands::robustness(&cfg)?,
    };
    emit(&table, cfg.format, cfg.out.as_deref())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Run => "run",
        Command::ScanN => "scan-n",
        Command::NoiseLocations => "noise-locations",
        Command::CostCompare { .. } => "cost-compare",
        Command::Theorem1 => "theorem1",
        Command::Scaling => "scaling",
        Command::Feedback => "feedback",
        Command::Robustness => "robustness",
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>().is_some_and(
                |ce| matches!(ce.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe),
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
