use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coded_caching::analysis::{cutoff_curve, optimize_mtilde, thm2_bound, BoundRow};
use coded_caching::config::{analyze, sweep, ExperimentConfig, SchemeName};
use coded_caching::harness::monte_carlo;
use coded_caching::model::RequestMode;
use coded_caching::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ccsim",
    version,
    about = "Coded caching bounds and Monte Carlo delivery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every analytical bound at one parameter point.
    Analyze(Common),
    /// Truncation cutoff minimizing the truncated-uniform bound.
    Optimize(Common),
    /// Monte Carlo delivery with exact decoding at every user.
    Simulate(Common),
    /// Grid runs described by the config's `sweep` section.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeName>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RequestMode>,
}

fn parse_scheme(s: &str) -> std::result::Result<SchemeName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<RequestMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(scheme) = self.scheme {
            cfg.scheme = scheme;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        Ok(cfg)
    }

    fn emit(&self, csv: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, csv)?,
            None => std::io::stdout().write_all(csv.as_bytes())?,
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => {
            let cfg = args.load()?;
            let mut csv = format!("{}\n", BoundRow::HEADER);
            for row in analyze(&cfg)? {
                csv.push_str(&row.to_csv());
                csv.push('\n');
            }
            args.emit(&csv)
        }
        Command::Optimize(args) => {
            let cfg = args.load()?;
            let (params, q) = (cfg.params()?, cfg.demand()?);
            let (best, bound) = optimize_mtilde(&params, &q)?;
            let uniform = thm2_bound(&params)?.value();
            eprintln!(
                "m_tilde={best} value={} uniform={uniform} ratio={}",
                bound.value(),
                bound.value() / uniform
            );
            let mut csv = String::from("m_tilde,value,binding_component\n");
            for (t, b) in cutoff_curve(&params, &q)? {
                csv.push_str(&format!("{t},{},{}\n", b.value(), b.binding()));
            }
            args.emit(&csv)
        }
        Command::Simulate(args) => {
            let cfg = args.load()?;
            let report = monte_carlo(
                &cfg.params()?,
                &cfg.scheme()?,
                &cfg.demand()?,
                cfg.mode,
                cfg.trials,
                cfg.seed,
            )?;
            eprintln!(
                "scheme={} trials={} mean_rate={} std_error={}",
                report.scheme,
                report.trial_count(),
                report.mean_rate,
                report.std_error
            );
            for (label, value) in &report.bounds {
                eprintln!("bound {label}={value}");
            }
            args.emit(&report.trials_csv())
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            args.emit(&sweep(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_decode_failure() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
