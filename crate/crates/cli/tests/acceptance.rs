//! Acceptance suite. One line per criterion; exits nonzero when any fails.
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p mkfk-cli --test acceptance -- 3 9`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mkfk_cli::studies::{self, Outcome};
use mkfk_cli::RunConfig;
use mkfk_core::metrics::Check;
use mkfk_core::noise::derive_seed;
use mkfk_core::verify::{brownian_ensemble, drift_checks, kernel_certificate, killing_lemmas, picard_checks};

struct Verdict {
    pass: bool,
    detail: String,
}

type Run = fn() -> Verdict;

fn config(overrides: &[&str]) -> RunConfig {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::from_toml_str("", "acceptance", &o).expect("acceptance config is valid")
}

fn describe(c: &Check) -> String {
    let v = if c.passed() { "ok" } else { "FAILED" };
    format!("{} = {:.4e} (bound {:.4e}) {v}", c.name, c.value, c.bound)
}

/// All checks must pass; the detail lists the failures, or the `show`
/// checks when everything passed.
fn from_checks(checks: &[Check], show: &[&str]) -> Verdict {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed()).map(describe).collect();
    if failed.is_empty() {
        let shown: Vec<String> = checks
            .iter()
            .filter(|c| show.iter().any(|s| c.name.contains(s)))
            .map(describe)
            .collect();
        Verdict {
            pass: !checks.is_empty(),
            detail: format!("{} checks; {}", checks.len(), shown.join("; ")),
        }
    } else {
        Verdict {
            pass: false,
            detail: failed.join("; "),
        }
    }
}

fn within_time(mut v: Verdict, spent: Duration, limit: Duration) -> Verdict {
    if spent > limit {
        v.pass = false;
        v.detail = format!("runtime {:.1} s over the {:.0} s limit; {}", spent.as_secs_f64(), limit.as_secs_f64(), v.detail);
    }
    v
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn or_error(r: mkfk_core::Result<Outcome>, show: &[&str]) -> Verdict {
    match r {
        Ok(o) => from_checks(&o.checks, show),
        Err(e) => Verdict {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn c1_mollifier() -> Verdict {
    let cfg = config(&[]);
    let (checks, t) = timed(|| kernel_certificate(&cfg.kernel(), 100_000, 11));
    within_time(from_checks(&checks, &["mass"]), t, Duration::from_secs(1))
}

fn c2_killing() -> Verdict {
    let cfg = config(&[]);
    let p = cfg.params();
    let (r, t) = timed(|| -> mkfk_core::Result<Vec<Check>> {
        let mut c = killing_lemmas(&p, 10_000, 12)?;
        c.extend(drift_checks(&p, &cfg.kernel(), 10_000, 13)?);
        Ok(c)
    });
    let v = match r {
        Ok(c) => from_checks(&c, &["slack"]),
        Err(e) => Verdict {
            pass: false,
            detail: e.to_string(),
        },
    };
    within_time(v, t, Duration::from_secs(1))
}

fn c3_picard() -> Verdict {
    let cfg = config(&["time.dt=1e-3", "model.horizon=1.0"]);
    let (r, t) = timed(|| {
        let paths = brownian_ensemble(cfg.time_grid(), 32, derive_seed(cfg.seed, 4))?;
        picard_checks(&paths, &cfg.kernel(), &cfg.params(), &cfg.fk_options())
    });
    let v = match r {
        Ok(p) => from_checks(&p.checks, &["contraction", "gap"]),
        Err(e) => Verdict {
            pass: false,
            detail: e.to_string(),
        },
    };
    within_time(v, t, Duration::from_secs(30))
}

fn c4_scalar_oracle() -> Verdict {
    let cfg = config(&["invariants.oracle_steps=1000"]);
    match studies::scalar_oracle_check(&cfg) {
        Ok(c) => from_checks(&[c], &["oracle"]),
        Err(e) => Verdict {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn c5_field_bounds() -> Verdict {
    let mut all = Vec::new();
    // a default run, a fast-killing run and a narrow kernel
    for o in [
        vec![],
        vec!["model.lambda=4.0", "particles.n=500"],
        vec!["kernel.eps=0.1", "particles.n=500", "time.dt=2e-3"],
    ] {
        match studies::field_bounds_study(&config(&o)) {
            Ok(out) => all.extend(out.checks),
            Err(e) => {
                return Verdict {
                    pass: false,
                    detail: format!("{o:?}: {e}"),
                }
            }
        }
    }
    from_checks(&all, &[])
}

fn c6_reduction() -> Verdict {
    let cfg = config(&[
        "reduction.n=4000",
        "reduction.horizon=0.5",
        "reduction.dt=5e-3",
        "pde.h=0.02",
        "pde.dt=1e-4",
    ]);
    let (r, t) = timed(|| studies::heat_reduction(&cfg));
    within_time(or_error(r, &["relative"]), t, Duration::from_secs(120))
}

fn c7_pde_structure() -> Verdict {
    let cfg = config(&[]);
    let r = studies::pde_study(&cfg).and_then(|mut o| {
        let c = studies::pde_convergence(&cfg)?;
        o.checks.extend(c.checks);
        Ok(o)
    });
    or_error(r, &["balance", "drift", "ratio"])
}

fn c8_d2() -> Verdict {
    let cfg = config(&[
        "d2.ns=[16, 64, 256]",
        "d2.replicas=200",
        "d2.reference=10000",
        "time.dt=1e-2",
        "kernel.eps=0.1",
    ]);
    let (r, t) = timed(|| studies::d2_study(&cfg));
    within_time(or_error(r, &["d2"]), t, Duration::from_secs(300))
}

fn c9_chaos() -> Verdict {
    let cfg = config(&[
        "chaos.ns=[50, 100, 200, 400, 800]",
        "chaos.n_ref=4000",
        "chaos.replicas=8",
        "time.dt=1e-3",
        "model.horizon=1.0",
    ]);
    let (r, t) = timed(|| studies::chaos_study(&cfg));
    let mut v = or_error(r, &["slope", "strictly"]);
    v.detail = format!("{} [{:.0} s]", v.detail, t.as_secs_f64());
    v
}

fn c10_compare() -> Verdict {
    let cfg = config(&[
        "compare.ns=[500, 2000, 4000]",
        "compare.tolerance=0.1",
        "kernel.eps=0.1",
        "time.dt=2e-3",
        "pde.mode=\"nonlocal\"",
    ]);
    or_error(studies::compare_study(&cfg), &["terminal"])
}

fn c11_weak() -> Verdict {
    let cfg = config(&[
        "model.horizon=0.1",
        "kernel.eps=0.05",
        "init={ kind = \"gaussian\", mean = 0.0, sigma = 2.0 }",
        "weak.dts=[2e-3, 1e-3, 5e-4]",
        "weak.ns=[1000, 2000, 4000]",
        "weak.replicas=16",
    ]);
    or_error(studies::weak_study(&cfg), &["spread"])
}

const MICRO: &[&str] = &[
    "--set", "model.horizon=0.1",
    "--set", "time.dt=0.01",
    "--set", "particles.n=80",
    "--set", "diagnostics.points=21",
    "--set", "diagnostics.every=5",
    "--set", "fk.paths=8",
    "--set", "pde.h=0.1",
    "--set", "pde.dt=2e-3",
    "--set", "pde.snapshot_every=10",
    "--set", "chaos.ns=[8, 16, 32, 80]",
    "--set", "chaos.n_ref=120",
    "--set", "chaos.replicas=2",
    "--set", "d2.ns=[8, 16]",
    "--set", "d2.replicas=30",
    "--set", "d2.reference=200",
    "--set", "d2.field_particles=50",
    "--set", "compare.ns=[40, 80]",
    "--set", "weak.dts=[0.02, 0.01]",
    "--set", "weak.ns=[40, 80]",
    "--set", "weak.replicas=2",
    "--set", "invariants.samples=2000",
    "--set", "invariants.pairs=500",
    "--set", "invariants.oracle_steps=200",
    "--set", "output.paths_binary=true",
];

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "bin")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c12_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let subs = [
        "fk-solve",
        "simulate",
        "pde",
        "chaos-study",
        "d2-study",
        "compare",
        "weak-residual",
        "invariants",
    ];
    let mut files = 0;
    for sub in subs {
        let mut seen = Vec::new();
        for threads in ["1", "4", "4"] {
            let out = tmp.path().join(format!("{sub}-{threads}-{}", seen.len()));
            let st = Command::new(env!("CARGO_BIN_EXE_mkfk"))
                .arg(sub)
                .args(MICRO)
                .args(["--threads", threads, "--out"])
                .arg(&out)
                .output()
                .unwrap();
            // exit 4 is a failed study check at micro sizes, not a crash
            if !matches!(st.status.code(), Some(0 | 4)) {
                return Verdict {
                    pass: false,
                    detail: format!("{sub} exited {:?}: {}", st.status.code(), String::from_utf8_lossy(&st.stderr)),
                };
            }
            seen.push(csv_bodies(&out));
        }
        if seen[0].is_empty() || seen.iter().any(|s| *s != seen[0]) {
            return Verdict {
                pass: false,
                detail: format!("{sub}: outputs differ across runs or worker counts"),
            };
        }
        files += seen[0].len();
    }
    Verdict {
        pass: true,
        detail: format!("{} subcommands, {files} files identical over 1, 4 and 4 workers", subs.len()),
    }
}

fn main() {
    let criteria: [(u32, &str, Run); 12] = [
        (1, "mollifier certificate", c1_mollifier),
        (2, "killing and weight lemmas", c2_killing),
        (3, "fixed point on Brownian paths", c3_picard),
        (4, "scalar oracle", c4_scalar_oracle),
        (5, "field bounds during simulation", c5_field_bounds),
        (6, "zero-rate reduction", c6_reduction),
        (7, "finite-volume structure", c7_pde_structure),
        (8, "path-space distance bound", c8_d2),
        (9, "propagation of chaos", c9_chaos),
        (10, "particles against the finite-volume field", c10_compare),
        (11, "weak-form residual", c11_weak),
        (12, "determinism", c12_determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let (v, t) = timed(run);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {title} [{:.1} s]: {}", t.as_secs_f64(), v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
