use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use specden_cli::config::{Mode, Overrides, RunConfig};
use specden_cli::{run, study};

#[derive(Parser)]
#[command(
    name = "specden",
    version,
    about = "Spectral density estimation with spline mixture priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the spectrum of a CSV series
    Estimate(CommonArgs),
    /// Run the autoregressive simulation study
    Simulate(CommonArgs),
    /// Analyze the bundled yearly solar activity series
    Sunspot(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Plain-text config file of `key = value` lines (flags win)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input series CSV: one column, optional `value` header
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mixture family: bspline or bernstein
    #[arg(long)]
    prior: Option<String>,
    /// Total MCMC sweeps
    #[arg(long)]
    iters: Option<u64>,
    /// Burn-in sweeps (default: half of iters)
    #[arg(long)]
    burnin: Option<u64>,
    /// Keep every thin-th sweep after burn-in
    #[arg(long)]
    thin: Option<u64>,
    /// Largest mixture size
    #[arg(long)]
    kmax: Option<usize>,
    /// Spline degree
    #[arg(long)]
    degree: Option<usize>,
    /// Number of tempered chains (1 runs a single serial chain)
    #[arg(long)]
    chains: Option<usize>,
    /// Coldest ladder temperature in (0, 1]
    #[arg(long)]
    tmin: Option<f64>,
    /// Master RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Study replication count
    #[arg(long)]
    reps: Option<usize>,
    /// Study scenario: ar1 or ar4
    #[arg(long)]
    scenario: Option<String>,
    /// Study series length (128, 256, or 512)
    #[arg(long)]
    n: Option<usize>,
    /// Square-root transform before analysis
    #[arg(long)]
    sqrt: bool,
    /// First-difference before analysis
    #[arg(long)]
    difference: bool,
    /// Apply a Hann taper before analysis
    #[arg(long)]
    hann: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            input: self.input.clone(),
            out: self.out.clone(),
            prior: self.prior.clone(),
            iters: self.iters,
            burnin: self.burnin,
            thin: self.thin,
            kmax: self.kmax,
            degree: self.degree,
            chains: self.chains,
            tmin: self.tmin,
            seed: self.seed,
            reps: self.reps,
            scenario: self.scenario.clone(),
            n: self.n,
            sqrt: self.sqrt,
            difference: self.difference,
            hann: self.hann,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (mode, args) = match &cli.command {
        Command::Estimate(args) => (Mode::Estimate, args),
        Command::Simulate(args) => (Mode::Simulate, args),
        Command::Sunspot(args) => (Mode::Sunspot, args),
    };
    let cfg = match RunConfig::resolve(mode, &args.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(1);
        }
    };
    match execute(mode, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(mode: Mode, cfg: &RunConfig) -> anyhow::Result<()> {
    match mode {
        Mode::Estimate => {
            let out = run::estimate(cfg)?;
            println!(
                "estimated {} frequencies from a series of length {}",
                out.summary.grid.len(),
                out.series_len
            );
            println!("wrote {}", out.summary_path.display());
            println!("wrote {}", out.trace_path.display());
            println!("wrote {}", out.manifest_path.display());
        }
        Mode::Simulate => {
            let out = study::simulate_study(cfg)?;
            println!(
                "{} scenario, {} replications of length {}",
                cfg.scenario.name(),
                out.rows.len(),
                cfg.n
            );
            println!("median IAE {}", out.median_iae);
            println!("band coverage {}", out.coverage);
            println!("wrote {}", out.replications_path.display());
            println!("wrote {}", out.aggregate_path.display());
            println!("wrote {}", out.manifest_path.display());
        }
        Mode::Sunspot => {
            let (out, peak) = run::sunspot(cfg)?;
            println!("peak frequency {} cycles/year", peak.frequency);
            println!("period {} years", peak.period);
            println!("wrote {}", out.summary_path.display());
            println!("wrote {}", out.trace_path.display());
            println!("wrote {}", out.manifest_path.display());
        }
    }
    Ok(())
}
