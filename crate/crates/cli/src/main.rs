use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mkfk_cli::{execute, Command, ExitStatus, RunConfig};

#[derive(Parser)]
#[command(name = "mkfk", version, about = "Weighted particle systems with Feynman-Kac interaction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// override one setting, e.g. `--set model.lambda=2`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// output directory, overrides `output.dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// print the resolved configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fixed-point solve on a path ensemble
    FkSolve(#[command(flatten)] Common),
    /// Interacting particle system, or driven by a stored field
    Simulate {
        /// `field.csv` written by fk-solve or simulate
        #[arg(long)]
        field: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-volume solve of the limit equations
    Pde(#[command(flatten)] Common),
    /// Propagation-of-chaos study over particle counts
    ChaosStudy(#[command(flatten)] Common),
    /// Dictionary estimate of the path-space distance to the limit law
    D2Study(#[command(flatten)] Common),
    /// Particle field against the finite-volume solution
    Compare(#[command(flatten)] Common),
    /// Weak-form residual of the empirical measure
    WeakResidual(#[command(flatten)] Common),
    /// Property checks
    Invariants(#[command(flatten)] Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, cli) = match cli.cmd {
        Cmd::FkSolve(c) => (Command::FkSolve, c),
        Cmd::Simulate { field, common } => (Command::Simulate { field }, common),
        Cmd::Pde(c) => (Command::Pde, c),
        Cmd::ChaosStudy(c) => (Command::ChaosStudy, c),
        Cmd::D2Study(c) => (Command::D2Study, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::WeakResidual(c) => (Command::WeakResidual, c),
        Cmd::Invariants(c) => (Command::Invariants, c),
    };
    let loaded = match &cli.config {
        Some(p) => RunConfig::from_file(p, &cli.set),
        None => RunConfig::from_toml_str("", "defaults", &cli.set),
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(ExitStatus::Config.code() as u8);
        }
    };
    if let Some(o) = cli.out {
        cfg.output.dir = o;
    }
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let dir = cfg.output.dir.clone();
    let status = execute(&cmd, &cfg, &dir, std::env::args().collect());
    ExitCode::from(status.code() as u8)
}
