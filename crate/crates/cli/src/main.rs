use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rsvub_cli::{config, execute, CliError, Mode, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "rsvub", version, about = "Regularised Saint-Venant simulator over uneven, moving bathymetry")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Nonlinear run with diagnostics and snapshots.
    Simulate(Common),
    /// Frozen-coefficient Picard iteration on a short horizon.
    Picard(Common),
    /// Manufactured-solution refinement study.
    Mms(Common),
    /// Random round-trip and coercivity checks of the Sturm-Liouville solve.
    Probe(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults are used for a missing file argument.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn prepare(mode: Mode, c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    let o = Overrides { mode: Some(mode), n: c.n, eps: c.eps, t_end: c.t_end, out: c.out.clone(), seed: c.seed };
    cfg.apply(&o)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.verb {
        Verb::Simulate(c) => (Mode::Simulate, c),
        Verb::Picard(c) => (Mode::Picard, c),
        Verb::Mms(c) => (Mode::MmsConvergence, c),
        Verb::Probe(c) => (Mode::OperatorProbe, c),
    };
    let result = prepare(mode, common).and_then(|cfg| execute(&cfg));
    match result {
        Ok(summary) => {
            println!("{}", summary.message);
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(summary.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
