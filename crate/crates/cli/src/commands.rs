//! Subcommand dispatch and the exit-code contract.

use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{read_field, OutputDir};
use crate::studies::{self, Outcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    FkSolve,
    /// interacting run, or driven by the field in `field` (a `field.csv`)
    Simulate { field: Option<PathBuf> },
    Pde,
    ChaosStudy,
    D2Study,
    Compare,
    WeakResidual,
    Invariants,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FkSolve => "fk-solve",
            Command::Simulate { .. } => "simulate",
            Command::Pde => "pde",
            Command::ChaosStudy => "chaos-study",
            Command::D2Study => "d2-study",
            Command::Compare => "compare",
            Command::WeakResidual => "weak-residual",
            Command::Invariants => "invariants",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok,
    Config,
    Numerical,
    CheckFailed,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::Config => 2,
            ExitStatus::Numerical => 3,
            ExitStatus::CheckFailed => 4,
        }
    }

    fn label(self) -> &'static str {
        match self {
            ExitStatus::Ok => "ok",
            ExitStatus::Config => "config-error",
            ExitStatus::Numerical => "numerical-failure",
            ExitStatus::CheckFailed => "check-failure",
        }
    }
}

enum Failure {
    Config(String),
    Numerical(String),
}

fn run(cmd: &Command, cfg: &RunConfig, hash: &str) -> Result<Outcome, Failure> {
    let lift = |e: mkfk_core::Error| {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    };
    match cmd {
        Command::FkSolve => studies::fk_solve_study(cfg),
        Command::Simulate { field: None } => studies::simulate_study(cfg, None, hash),
        Command::Simulate { field: Some(path) } => {
            let f = read_field(path, cfg.time_grid(), cfg.kernel())
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            studies::simulate_study(cfg, Some(&f), hash)
        }
        Command::Pde => studies::pde_study(cfg),
        Command::ChaosStudy => studies::chaos_study(cfg),
        Command::D2Study => studies::d2_study(cfg),
        Command::Compare => studies::compare_study(cfg),
        Command::WeakResidual => studies::weak_study(cfg),
        Command::Invariants => studies::invariants_study(cfg),
    }
    .map_err(lift)
}

fn write_outcome(dir: &mut OutputDir, cfg: &RunConfig, o: &Outcome) -> io::Result<()> {
    dir.write_bytes("config.toml", cfg.to_toml().as_bytes())?;
    for t in &o.tables {
        dir.write_table(t)?;
    }
    for (name, bytes) in &o.blobs {
        dir.write_bytes(name, bytes)?;
    }
    dir.write_json("checks.json", &o.checks)?;
    dir.write_json("summary.json", &Value::Object(o.summary.clone()))?;
    Ok(())
}

/// Run `cmd` writing into `out`; prints one line per check to stdout and
/// diagnostics to stderr.
pub fn execute(cmd: &Command, cfg: &RunConfig, out: &Path, argv: Vec<String>) -> ExitStatus {
    let hash = cfg.hash();
    let mut dir = match OutputDir::create(out) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", out.display());
            return ExitStatus::Config;
        }
    };
    let (status, reason) = match run(cmd, cfg, &hash) {
        Ok(o) => {
            for c in &o.checks {
                let v = if c.passed() { "PASS" } else { "FAIL" };
                println!("{v} {}: value {:e}, bound {:e}", c.name, c.value, c.bound);
            }
            if let Err(e) = write_outcome(&mut dir, cfg, &o) {
                eprintln!("error: writing outputs: {e}");
                return ExitStatus::Config;
            }
            if o.passed() {
                (ExitStatus::Ok, None)
            } else {
                let n = o.checks.iter().filter(|c| !c.passed()).count();
                (ExitStatus::CheckFailed, Some(format!("{n} check(s) failed")))
            }
        }
        Err(Failure::Config(m)) => (ExitStatus::Config, Some(m)),
        Err(Failure::Numerical(m)) => (ExitStatus::Numerical, Some(m)),
    };
    if let Some(r) = &reason {
        eprintln!("error: {r}");
        let marker = json!({ "status": status.label(), "reason": r });
        if let Err(e) = dir.mark_failed(&marker.to_string()) {
            eprintln!("error: writing failure marker: {e}");
        }
    }
    if let Err(e) = dir.finish(&hash, cfg.seed, argv, cmd.name(), status.label()) {
        eprintln!("error: writing manifest: {e}");
    }
    status
}
