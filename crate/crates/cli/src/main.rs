use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bosemix::harness::{self, RunConfig};
use bosemix::Error;

/// Two-species mean-field runs, exact N-body comparison and rate fits.
#[derive(Parser)]
#[command(name = "bosemix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a configuration and print R and the (SR) margin.
    Check { config: PathBuf },
    /// Mean-field evolution only.
    Hartree {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One exact run, for the mixture at `--index` in the configured list.
    Manybody {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every mixture of the configuration; writes sweep.csv, reports.json, summary.json.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Log-log slope of a sweep quantity against N1.
    Fit {
        csv: PathBuf,
        /// a, a1, a2, trace_norm or hs_norm
        #[arg(long, default_value = "a")]
        quantity: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Emit plotting scripts next to a sweep's CSV.
    Plots { dir: PathBuf },
}

fn load(path: &PathBuf) -> Result<RunConfig, Error> {
    RunConfig::load(path)
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.raw.output.clone())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Check { config } => {
            let cfg = load(&config)?;
            println!("R = {:.6}", cfg.r);
            match cfg.sr {
                Some(s) => println!("(SR) margin = {:.6}", s.margin),
                None => println!("(SR) not applicable (no semi-relativistic species)"),
            }
            println!("epsilon = {:.6}", cfg.couplings.epsilon);
            for m in &cfg.mixtures {
                println!("N = ({}, {}): state dimension {}", m.n1, m.n2, (cfg.grid.sites() as u128).pow(m.total() as u32));
            }
            println!("ok");
        }
        Command::Hartree { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = harness::run_hartree(&cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Manybody { config, index, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = harness::run_manybody(&cfg, index, &dir)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(&cfg, out);
            let s = harness::run_sweep(&cfg, &dir)?;
            for p in &s.points {
                match &p.error {
                    None => println!(
                        "N = ({}, {}): a1+a2 = {:.3e}, trace norm = {:.3e}, violating rows {}",
                        p.n1, p.n2, p.final_a, p.final_trace_norm, p.violating_rows
                    ),
                    Some(e) => eprintln!("N = ({}, {}) failed: {e}", p.n1, p.n2),
                }
            }
            for f in &s.fits {
                println!("slope[{} theta={}] = {:.4}", f.quantity, f.theta, f.slope);
            }
            println!("wrote {}", dir.display());
            if s.failed_points() > 0 {
                return Err(Error::Format(format!("{} sweep point(s) failed", s.failed_points())));
            }
        }
        Command::Fit { csv, quantity, t, theta } => {
            let f = harness::fit_rate(&csv, &quantity, t, theta)?;
            println!("{}", serde_json::to_string_pretty(&f)?);
        }
        Command::Plots { dir } => {
            for p in harness::emit_plots(&dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
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
