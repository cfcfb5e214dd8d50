//! `xjulia`: zeros, filled Julia sets and equilibrium-measure samples of
//! exceptional Jacobi polynomials.

mod commands;
mod failure;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::Failure;
use settings::{parse_n_list, parse_threshold, resolve, FlagOverrides, NList, Settings};

#[derive(Parser)]
#[command(name = "xjulia", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zeros of each P_n: CSV of regular/exceptional zeros and a diagnostic JSON.
    Zeros(Common),
    /// Escape-time raster (PGM) of the filled Julia set of each P_n.
    Julia(Common),
    /// Equilibrium-measure samples by random backward iteration.
    Brolin(Common),
    /// Aggregate earlier outputs into report.json with pass/fail verdicts.
    Report(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named family preset (weight exponents from --alpha/--beta).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// A single index (same as --n-list N).
    #[arg(long, conflicts_with = "n_list")]
    n: Option<usize>,
    /// Comma-separated ascending indices; "" for none.
    #[arg(long, value_parser = parse_n_list)]
    n_list: Option<NList>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent backward orbits per sample.
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    max_iter: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Threshold override, `key=value` with a JSON value; repeatable.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    thresholds: Vec<(String, serde_json::Value)>,
}

impl Common {
    fn settings(&self) -> Result<Settings, Failure> {
        let flags = FlagOverrides {
            preset: self.preset.clone(),
            alpha: self.alpha,
            beta: self.beta,
            n_list: self
                .n
                .map(|n| vec![n])
                .or_else(|| self.n_list.clone().map(|l| l.0)),
            samples: self.samples,
            burn_in: self.burn_in,
            seed: self.seed,
            chains: self.chains,
            resolution: self.resolution,
            max_iter: self.max_iter,
            out: self.out.clone(),
            thresholds: self.thresholds.clone(),
        };
        resolve(self.config.as_deref(), &flags)
    }
}

fn limit_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("XJULIA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::config(
            format!("XJULIA_THREADS must be a positive integer, got {raw:?}"),
            Some("XJULIA_THREADS".into()),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string(), Some("XJULIA_THREADS".into())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    limit_threads()?;
    let written = match &cli.command {
        Command::Zeros(c) => commands::cmd_zeros(&c.settings()?)?,
        Command::Julia(c) => commands::cmd_julia(&c.settings()?)?,
        Command::Brolin(c) => commands::cmd_brolin(&c.settings()?)?,
        Command::Report(c) => vec![commands::cmd_report(&c.settings()?)?],
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::config(e.to_string().trim().to_string(), None);
            eprintln!("{}", failure.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
