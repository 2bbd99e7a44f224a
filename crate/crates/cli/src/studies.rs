//! Study drivers behind the subcommands. Each returns the tables, checks
//! and summary that the command layer writes out.

use mkfk_core::field::FKField;
use mkfk_core::fk::{contraction_estimate, fk_solve, FkOptions, Quadrature};
use mkfk_core::grid::TimeGrid;
use mkfk_core::init::InitSpec;
use mkfk_core::kernel::KernelSpec;
use mkfk_core::metrics::{
    chaos_slope, d2_estimate, profile_distance, resolution_constants, strictly_decreasing, weak_pide_residual_avg,
    Check, FieldNorm, SlopeFit, SmoothFn, TestFunctionDictionary,
};
use mkfk_core::noise::derive_seed;
use mkfk_core::params::ModelParams;
use mkfk_core::particles::{couple_systems, simulate_driven, simulate_interacting, Diagnostics, SimConfig};
use mkfk_core::paths::PathEnsemble;
use mkfk_core::pde::{mollify_density, pde_solve, PdeConfig, PdeMode, SpatialGrid};
use mkfk_core::verify::{
    brownian_ensemble, drift_checks, field_bound_checks, kernel_certificate, killing_lemmas, pde_structure_checks,
    picard_checks,
};
use mkfk_core::{Error, Result};
use serde_json::{json, Value};

use crate::config::{PathSource, RunConfig};
use crate::output::{field_table, num, path_dump, Table};

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Map<String, Value>,
    /// raw files, e.g. the binary path dump
    pub blobs: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn merge(&mut self, other: Outcome) {
        self.tables.extend(other.tables);
        self.checks.extend(other.checks);
        self.summary.extend(other.summary);
        self.blobs.extend(other.blobs);
    }
}

fn fit_json(fit: &SlopeFit) -> Value {
    json!({ "slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept })
}

fn gaussian_init(init: &InitSpec) -> Result<(f64, f64)> {
    match *init {
        InitSpec::Gaussian { mean, sigma } => Ok((mean, sigma)),
        InitSpec::Bump { .. } => Err(Error::InvalidParam {
            name: "init",
            reason: "the heat-equation reduction needs a Gaussian initial density".into(),
        }),
    }
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `(K * N(mean, var))(y)` by composite Simpson over the kernel support.
fn mollified_normal(k: &KernelSpec, y: f64, mean: f64, var: f64) -> f64 {
    let r = k.r_cut();
    let n = 2000;
    let h = 2.0 * r / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let z = -r + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * k.eval(z) * normal_pdf(y - z, mean, var);
    }
    s * h / 3.0
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn sup_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

fn profile_rows(t: &mut Table, step: usize, time: f64, ys: &[f64], u: &[f64], g: &[f64]) {
    for j in 0..ys.len() {
        t.push(vec![step.to_string(), num(time), num(ys[j]), num(u[j]), num(g[j])]);
    }
}

fn diagnostic_steps(grid: &TimeGrid, every: usize) -> Vec<usize> {
    let n = grid.n_steps();
    let mut steps: Vec<usize> = if every == 0 { vec![] } else { (0..n).step_by(every).collect() };
    steps.push(n);
    steps
}

/// Fixed-point solve on Brownian or particle paths.
pub fn fk_solve_study(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.time_grid();
    let k = cfg.kernel();
    let p = cfg.params();
    let paths = match cfg.fk.source {
        PathSource::Brownian => brownian_ensemble(grid, cfg.fk.paths, cfg.seed)?,
        PathSource::Particles => {
            let mut sc = cfg.sim_config();
            sc.store_paths = true;
            sc.diagnostics = Diagnostics::none();
            let (rec, _) = simulate_interacting(&sc)?;
            rec.paths.expect("paths stored").to_ensemble()?
        }
    };
    let opts = cfg.fk_options();
    let (field, rep) = fk_solve(&paths, &k, &p, &opts)?;
    let mut out = Outcome::default();
    out.tables.push(field_table("field", &field));
    let mut it = Table::new("picard", &["iteration", "residual", "sup_residual"]);
    for (i, (r, s)) in rep.residuals.iter().zip(&rep.sup_residuals).enumerate() {
        it.push(vec![(i + 1).to_string(), num(*r), num(*s)]);
    }
    out.tables.push(it);
    let ys = cfg.diagnostics.build().ys;
    let mut prof = Table::new("profile", &["step", "time", "y", "u", "grad_u"]);
    for step in diagnostic_steps(&grid, cfg.diagnostics.every) {
        let (u, g) = field.profile(step, &ys);
        profile_rows(&mut prof, step, grid.time(step), &ys, &u, &g);
    }
    out.tables.push(prof);
    let contraction = contraction_estimate(&rep).ok();
    out.checks.push(Check::holds("picard converged", usize::from(!rep.converged)));
    if let Some(q) = contraction {
        out.checks.push(Check::at_most("picard contraction factor", q, 1.0 - 1e-12, 0.0));
    }
    out.checks.extend(field_bound_checks(&field, &ys));
    out.summary.insert(
        "picard".into(),
        json!({
            "paths": paths.n_paths(),
            "source": cfg.fk.source,
            "iterations": rep.iterations,
            "converged": rep.converged,
            "norm_weight": rep.norm_weight,
            "norm_weight_capped": rep.norm_weight_capped,
            "sweep_bound": rep.sweep_bound,
            "contraction": contraction,
        }),
    );
    Ok(out)
}

/// Interacting run, or a driven run when `field` is given.
pub fn simulate_study(cfg: &RunConfig, field: Option<&FKField>, config_hash: &str) -> Result<Outcome> {
    let sc = cfg.sim_config();
    let (rec, own) = match field {
        Some(f) => (simulate_driven(&sc, f)?, None),
        None => {
            let (r, f) = simulate_interacting(&sc)?;
            (r, Some(f))
        }
    };
    let mut out = Outcome::default();
    let mut s = Table::new("summary", &["step", "time", "mean_x", "var_x", "mean_v"]);
    for r in &rec.summary {
        s.push(vec![r.step.to_string(), num(r.time), num(r.mean_x), num(r.var_x), num(r.mean_v)]);
    }
    out.tables.push(s);
    let mut snaps = Table::new("snapshots", &["step", "time", "y", "u", "grad_u"]);
    for sn in &rec.snapshots {
        profile_rows(&mut snaps, sn.step, sn.time, &sn.ys, &sn.u, &sn.grad_u);
    }
    out.tables.push(snaps);
    if let (Some(f), true) = (&own, cfg.output.field) {
        out.tables.push(field_table("field", f));
    }
    if cfg.output.paths_binary {
        let store = rec.paths.as_ref().expect("paths stored for the dump");
        out.blobs.push(("paths.bin".into(), path_dump(store, cfg.seed, config_hash)));
    }
    let k = cfg.kernel();
    let mut bad = 0;
    for sn in &rec.snapshots {
        for j in 0..sn.ys.len() {
            if !(sn.u[j] >= 0.0 && sn.u[j] <= k.sup_bound() * (1.0 + 1e-12) && sn.grad_u[j].abs() <= k.grad_bound() * (1.0 + 1e-12)) {
                bad += 1;
            }
        }
    }
    out.checks.push(Check::holds("snapshot field bounds", bad));
    let weights_monotone = rec.summary.windows(2).filter(|w| w[1].mean_v > w[0].mean_v).count();
    out.checks.push(Check::holds("mean weight nonincreasing", weights_monotone));
    let last = rec.summary.last().expect("at least the initial summary");
    out.summary.insert(
        "simulation".into(),
        json!({
            "mode": if field.is_some() { "driven" } else { "interacting" },
            "particles": sc.n_particles,
            "steps": sc.grid.n_steps(),
            "dt": sc.grid.dt(),
            "final_mean_x": last.mean_x,
            "final_var_x": last.var_x,
            "final_mean_v": last.mean_v,
        }),
    );
    Ok(out)
}

/// Finite-volume run with profiles and the mass ledger.
pub fn pde_study(cfg: &RunConfig) -> Result<Outcome> {
    let pc = cfg.pde_config();
    pc.validate()?;
    let rho0: Vec<f64> = pc.grid.centers().iter().map(|&x| cfg.init.density(x)).collect();
    let run = pde_solve(&pc, rho0)?;
    let k = cfg.kernel();
    let xs = pc.grid.centers();
    let mut prof = Table::new("pde", &["step", "time", "x", "rho", "c", "u_k"]);
    for s in &run.snapshots {
        let uk = mollify_density(&s.rho, &pc.grid, &k);
        for i in 0..xs.len() {
            prof.push(vec![s.step.to_string(), num(s.t), num(xs[i]), num(s.rho[i]), num(s.c[i]), num(uk[i])]);
        }
    }
    let mut mass = Table::new("mass", &["step", "time", "mass", "reacted", "balance"]);
    for (k, m) in run.mass.iter().enumerate() {
        let (r, b) = if k == 0 {
            (0.0, 0.0)
        } else {
            (run.reacted[k - 1], run.balance[k - 1])
        };
        mass.push(vec![k.to_string(), num(pc.time.time(k)), num(*m), num(r), num(b)]);
    }
    let mut out = Outcome::default();
    out.tables.push(prof);
    out.tables.push(mass);
    out.checks.extend(pde_structure_checks(&run, &pc.params, pc.params.c0));
    out.summary.insert(
        "pde".into(),
        json!({
            "mode": pc.mode,
            "cells": pc.grid.n_cells(),
            "h": pc.grid.h(),
            "half_width": pc.grid.half_width(),
            "dt": pc.time.dt(),
            "cfl_limit": pc.cfl_limit(),
            "steps": pc.time.n_steps(),
            "initial_mass": run.mass[0],
            "final_mass": *run.mass.last().unwrap(),
        }),
    );
    Ok(out)
}

/// Coupled interacting/driven systems over `chaos.ns` and the log-log
/// slope of the path error.
pub fn chaos_study(cfg: &RunConfig) -> Result<Outcome> {
    let sc = cfg.sim_config();
    let ch = &cfg.chaos;
    let study = couple_systems(&sc, &ch.ns, ch.n_ref, ch.replicas)?;
    let mut t = Table::new(
        "chaos",
        &["n", "path_max", "path_pooled", "path_pooled_stderr", "field_sup_sq", "field_l2_sq"],
    );
    for r in &study.rows {
        t.push(vec![
            r.n.to_string(),
            num(r.path_max),
            num(r.path_pooled),
            num(r.path_pooled_stderr),
            num(r.field_sup_sq),
            num(r.field_l2_sq),
        ]);
    }
    let mut samples = Table::new(
        "chaos_samples",
        &["n", "replica", "path_mean", "path_max", "field_sup_sq", "field_l2_sq"],
    );
    for s in &study.samples {
        let mean = s.path_sq.iter().sum::<f64>() / s.n as f64;
        let max = s.path_sq.iter().copied().fold(0.0, f64::max);
        samples.push(vec![
            s.n.to_string(),
            s.replica.to_string(),
            num(mean),
            num(max),
            num(s.field_sup_sq),
            num(s.field_l2_sq),
        ]);
    }
    let col = |f: fn(&mkfk_core::particles::CouplingRow) -> f64| study.rows.iter().map(f).collect::<Vec<f64>>();
    let pooled = col(|r| r.path_pooled);
    let maxed = col(|r| r.path_max);
    let fsup = col(|r| r.field_sup_sq);
    let fl2 = col(|r| r.field_l2_sq);
    let fit_pooled = chaos_slope(&ch.ns, &pooled)?;
    let fit_max = chaos_slope(&ch.ns, &maxed)?;
    let mut out = Outcome::default();
    out.tables.push(t);
    out.tables.push(samples);
    out.checks.push(
        Check::within("chaos slope (pooled path error)", fit_pooled.slope, ch.slope_min, ch.slope_max)
            .with_note("mean over particle index and replicas of sup_t |xi - Y|^2"),
    );
    out.checks.push(
        Check::within("chaos slope (max-over-index path error)", fit_max.slope, ch.slope_min, ch.slope_max)
            .with_note("max over particle index of the replica mean"),
    );
    out.checks.push(Check::holds(
        "field sup error strictly decreasing",
        usize::from(!strictly_decreasing(&fsup)),
    ));
    out.checks.push(Check::holds(
        "field L2 error strictly decreasing",
        usize::from(!strictly_decreasing(&fl2)),
    ));
    out.summary.insert(
        "chaos".into(),
        json!({
            "ns": ch.ns,
            "n_ref": ch.n_ref,
            "replicas": ch.replicas,
            "dt": sc.grid.dt(),
            "fit_pooled": fit_json(&fit_pooled),
            "fit_max": fit_json(&fit_max),
        }),
    );
    Ok(out)
}

fn driven_paths(sc: &SimConfig, field: &FKField, n: usize, seed: u64) -> Result<PathEnsemble> {
    let mut c = sc.clone();
    c.n_particles = n;
    c.seed = seed;
    c.store_paths = true;
    c.diagnostics = Diagnostics::none();
    simulate_driven(&c, field)?.paths.expect("paths stored").to_ensemble()
}

/// Dictionary estimate of `E d_2^2(mu_N, m)` for i.i.d. paths driven by a
/// frozen field.
pub fn d2_study(cfg: &RunConfig) -> Result<Outcome> {
    let mut sc = cfg.sim_config();
    sc.diagnostics = Diagnostics::none();
    sc.store_paths = false;
    let d = &cfg.d2;
    let mut fc = sc.clone();
    fc.n_particles = d.field_particles;
    let (_, field) = simulate_interacting(&fc)?;
    let reference = driven_paths(&sc, &field, d.reference, derive_seed(cfg.seed, u64::MAX))?;
    let dict = TestFunctionDictionary::standard(sc.grid.horizon());
    let mut members = Table::new("d2_members", &["n", "member", "name", "value", "stderr"]);
    let mut rows = Table::new("d2", &["n", "max", "max_stderr", "argmax", "bound"]);
    let mut out = Outcome::default();
    let mut per_n = Vec::new();
    for &n in &d.ns {
        let base = derive_seed(cfg.seed, n as u64);
        let samples = (0..d.replicas)
            .map(|r| driven_paths(&sc, &field, n, derive_seed(base, r as u64)))
            .collect::<Result<Vec<_>>>()?;
        let est = d2_estimate(&samples, &reference, &dict)?;
        for (j, f) in dict.members.iter().enumerate() {
            members.push(vec![
                n.to_string(),
                j.to_string(),
                f.name(),
                num(est.per_member[j]),
                num(est.per_member_stderr[j]),
            ]);
        }
        let ceiling = 1.0 / n as f64 + 1.0 / d.reference as f64;
        rows.push(vec![
            n.to_string(),
            num(est.max),
            num(est.max_stderr),
            dict.members[est.argmax].name(),
            num(ceiling),
        ]);
        out.checks.push(
            Check::at_most(format!("d2 bound at N={n}"), est.max, ceiling, 3.0 * est.max_stderr)
                .with_note("bound 1/N + 1/M, tolerance 3 stderr"),
        );
        per_n.push(json!({ "n": n, "max": est.max, "max_stderr": est.max_stderr, "argmax": dict.members[est.argmax].name() }));
    }
    out.tables.push(rows);
    out.tables.push(members);
    out.summary.insert(
        "d2".into(),
        json!({
            "replicas": d.replicas,
            "reference": d.reference,
            "field_particles": d.field_particles,
            "dictionary_size": dict.len(),
            "rows": per_n,
        }),
    );
    Ok(out)
}

/// Particle field against the mollified finite-volume density.
pub fn compare_study(cfg: &RunConfig) -> Result<Outcome> {
    let mut pc = cfg.pde_config();
    let sc0 = cfg.sim_config();
    let grid = sc0.grid;
    let every = cfg.diagnostics.every;
    // PDE snapshots on the particle diagnostic times when the steps nest
    let ratio = grid.dt() * every as f64 / pc.time.dt();
    pc.snapshot_every = if every > 0 && (ratio - ratio.round()).abs() < 1e-9 && ratio >= 1.0 {
        ratio.round() as usize
    } else {
        0
    };
    pc.validate()?;
    let k = cfg.kernel();
    let rho0: Vec<f64> = pc.grid.centers().iter().map(|&x| cfg.init.density(x)).collect();
    let run = pde_solve(&pc, rho0)?;
    let xs = pc.grid.centers();
    let targets: Vec<(usize, f64, Vec<f64>)> = run
        .snapshots
        .iter()
        .filter_map(|s| {
            let step = (s.t / grid.dt()).round() as usize;
            ((grid.time(step) - s.t).abs() < 1e-9 * grid.horizon().max(1.0))
                .then(|| (step, s.t, mollify_density(&s.rho, &pc.grid, &k)))
        })
        .collect();
    let mut t = Table::new("compare", &["n", "step", "time", "rel_l2", "sup_abs"]);
    let mut finals = Vec::new();
    let mut profiles = Table::new("compare_profile", &["n", "x", "u_particles", "u_pde"]);
    for &n in &cfg.compare.ns {
        let mut sc = sc0.clone();
        sc.n_particles = n;
        sc.store_paths = false;
        sc.diagnostics = Diagnostics::none();
        let (_, field) = simulate_interacting(&sc)?;
        for (step, time, target) in &targets {
            let (u, _) = field.profile(*step, &xs);
            t.push(vec![n.to_string(), step.to_string(), num(*time), num(rel_l2(&u, target)), num(sup_abs(&u, target))]);
        }
        let (_, _, target) = targets.last().expect("final state is always kept");
        let (u, _) = field.profile(grid.n_steps(), &xs);
        for i in 0..xs.len() {
            profiles.push(vec![n.to_string(), num(xs[i]), num(u[i]), num(target[i])]);
        }
        finals.push(rel_l2(&u, target));
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.tables.push(profiles);
    out.checks.push(Check::at_most(
        format!("terminal relative L2 error at N={}", cfg.compare.ns.last().unwrap()),
        *finals.last().unwrap(),
        cfg.compare.tolerance,
        0.0,
    ));
    if finals.len() > 1 {
        out.checks.push(Check::holds(
            "terminal error decreasing in N",
            usize::from(!strictly_decreasing(&finals)),
        ));
    }
    out.summary.insert(
        "compare".into(),
        json!({
            "ns": cfg.compare.ns,
            "terminal_rel_l2": finals,
            "pde_mode": pc.mode,
            "pde_h": pc.grid.h(),
            "pde_dt": pc.time.dt(),
            "particle_dt": grid.dt(),
        }),
    );
    Ok(out)
}

/// The three test functions of the weak-form study.
pub fn weak_test_functions() -> [SmoothFn; 3] {
    [
        SmoothFn::Gaussian { center: 0.0, width: 1.0 },
        SmoothFn::Cosine { freq: 1.0, phase: 0.3 },
        SmoothFn::Gaussian { center: 0.5, width: 0.7 },
    ]
}

fn fn_name(f: &SmoothFn) -> String {
    match *f {
        SmoothFn::Constant(c) => format!("const({c})"),
        SmoothFn::Linear => "x".into(),
        SmoothFn::Gaussian { center, width } => format!("gauss({center},{width})"),
        SmoothFn::Cosine { freq, phase } => format!("cos({freq}x+{phase})"),
    }
}

/// Weak-form residual of the measure-valued equation at several
/// `(dt, N)`, root mean square over replicas.
pub fn weak_study(cfg: &RunConfig) -> Result<Outcome> {
    let w = &cfg.weak;
    let fns = weak_test_functions();
    let p = cfg.params();
    let mut rms = vec![vec![0.0; w.dts.len()]; fns.len()];
    for (i, (&dt, &n)) in w.dts.iter().zip(&w.ns).enumerate() {
        let mut sc = cfg.sim_config();
        sc.grid = TimeGrid::with_step(cfg.model.horizon, dt)?;
        sc.n_particles = n;
        sc.store_paths = true;
        sc.diagnostics = Diagnostics::none();
        let base = derive_seed(cfg.seed, i as u64);
        for r in 0..w.replicas {
            sc.seed = derive_seed(base, r as u64);
            let (rec, _) = simulate_interacting(&sc)?;
            let store = rec.paths.expect("paths stored");
            for (j, f) in fns.iter().enumerate() {
                rms[j][i] += weak_pide_residual_avg(&store, &p, f)?.powi(2);
            }
        }
        for row in rms.iter_mut() {
            row[i] = (row[i] / w.replicas as f64).sqrt();
        }
    }
    let mut t = Table::new("weak", &["function", "dt", "n", "rms_residual", "constant"]);
    let mut out = Outcome::default();
    let mut fits = Vec::new();
    for (j, f) in fns.iter().enumerate() {
        let cs = resolution_constants(&rms[j], &w.dts, &w.ns)?;
        for i in 0..w.dts.len() {
            t.push(vec![fn_name(f), num(w.dts[i]), w.ns[i].to_string(), num(rms[j][i]), num(cs[i])]);
        }
        let hi = cs.iter().copied().fold(0.0, f64::max);
        let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
        out.checks.push(Check::holds(
            format!("weak residual shrinks with resolution, {}", fn_name(f)),
            usize::from(!strictly_decreasing(&rms[j])),
        ));
        out.checks.push(
            Check::at_most(format!("weak residual constant spread, {}", fn_name(f)), hi / lo, w.max_spread, 0.0)
                .with_note("max/min of |res| / (dt + N^-1/2)"),
        );
        fits.push(json!({ "function": fn_name(f), "constants": cs, "rms": rms[j] }));
    }
    out.tables.push(t);
    out.summary.insert(
        "weak".into(),
        json!({ "dts": w.dts, "ns": w.ns, "replicas": w.replicas, "functions": fits }),
    );
    Ok(out)
}

/// RK4 at step `1e-4` for `z = M_K e^{-lambda c0 B}`, `A' = z`,
/// `B' = e^{-lambda A}`, read at `n + 1` equally spaced times on `[0, T]`.
fn scalar_reference(p: &ModelParams, m_k: f64, n: usize) -> Vec<f64> {
    let sub = ((p.horizon / n as f64) / 1e-4).ceil().max(1.0) as usize;
    let h = p.horizon / (n * sub) as f64;
    let rhs = |s: [f64; 2]| [m_k * (-p.lambda * p.c0 * s[1]).exp(), (-p.lambda * s[0]).exp()];
    let mut s = [0.0, 0.0];
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        out.push(m_k * (-p.lambda * p.c0 * s[1]).exp());
        if k == n {
            break;
        }
        for _ in 0..sub {
            let k1 = rhs(s);
            let k2 = rhs([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([s[0] + h * k3[0], s[1] + h * k3[1]]);
            for j in 0..2 {
                s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
    }
    out
}

/// Single frozen path at the origin against the scalar ODE system.
pub fn scalar_oracle_check(cfg: &RunConfig) -> Result<Check> {
    let p = cfg.params();
    let k = cfg.kernel();
    let n = cfg.invariants.oracle_steps;
    let g = TimeGrid::new(p.horizon, n)?;
    let paths = PathEnsemble::from_flat(g, 1, vec![0.0; n + 1])?;
    let opts = FkOptions {
        quadrature: Quadrature::Trapezoid,
        ..cfg.fk_options()
    };
    let (f, _) = fk_solve(&paths, &k, &p, &opts)?;
    let z = scalar_reference(&p, k.sup_bound(), n);
    let worst = (0..=n).fold(0.0f64, |m, s| m.max(((f.eval_step(s, 0.0).0 - z[s]) / z[s]).abs()));
    Ok(Check::at_most("scalar oracle relative error", worst, 1e-3, 0.0))
}

/// Zero-rate reduction: particle field and finite-volume density against
/// the heat-equation solution.
pub fn heat_reduction(cfg: &RunConfig) -> Result<Outcome> {
    let rd = &cfg.reduction;
    let (mean, sigma) = gaussian_init(&cfg.init)?;
    let var_t = sigma * sigma + 2.0 * rd.horizon;
    let p = ModelParams {
        lambda: 0.0,
        horizon: rd.horizon,
        ..cfg.params()
    };
    let k = cfg.kernel();
    let grid = TimeGrid::with_step(rd.horizon, rd.dt)?;
    let mut sc = SimConfig::new(p, k, grid, rd.n, cfg.seed);
    sc.init = cfg.init;
    sc.diagnostics = Diagnostics::none();
    let (_, field) = simulate_interacting(&sc)?;
    let ys = cfg.diagnostics.build().ys;
    let (u, _) = field.profile(grid.n_steps(), &ys);
    let target: Vec<f64> = ys.iter().map(|&y| mollified_normal(&k, y, mean, var_t)).collect();
    let zero = vec![0.0; ys.len()];
    let particle_err = profile_distance(&u, &target, &ys, FieldNorm::L2)? / profile_distance(&target, &zero, &ys, FieldNorm::L2)?;

    let half = cfg.pde_half_width().max(mkfk_core::pde::required_half_width(&cfg.init, rd.horizon, k.eps()));
    let pc = PdeConfig {
        grid: SpatialGrid::with_spacing(half, cfg.pde.h)?,
        time: TimeGrid::with_step(rd.horizon, cfg.pde.dt)?,
        mode: PdeMode::Local,
        kernel: Some(k),
        params: p,
        snapshot_every: 0,
    };
    let (pde_err, _) = heat_error(&pc, &cfg.init, mean, var_t)?;

    let mut t = Table::new("reduction", &["y", "u_particles", "u_exact"]);
    for j in 0..ys.len() {
        t.push(vec![num(ys[j]), num(u[j]), num(target[j])]);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.checks.push(Check::at_most(
        "zero-rate particle field relative L2 error",
        particle_err,
        rd.particle_tolerance,
        0.0,
    ));
    out.checks.push(Check::at_most(
        "zero-rate finite-volume relative L2 error",
        pde_err,
        rd.pde_tolerance,
        0.0,
    ));
    out.summary.insert(
        "reduction".into(),
        json!({
            "particles": rd.n,
            "dt": grid.dt(),
            "horizon": rd.horizon,
            "particle_rel_l2": particle_err,
            "pde_rel_l2": pde_err,
            "pde_h": pc.grid.h(),
            "pde_dt": pc.time.dt(),
        }),
    );
    Ok(out)
}

/// Relative L2 error against the heat kernel and the largest mass drift.
fn heat_error(pc: &PdeConfig, init: &InitSpec, mean: f64, var_t: f64) -> Result<(f64, f64)> {
    let rho0: Vec<f64> = pc.grid.centers().iter().map(|&x| init.density(x)).collect();
    let run = pde_solve(pc, rho0)?;
    let exact: Vec<f64> = pc.grid.centers().iter().map(|&x| normal_pdf(x, mean, var_t)).collect();
    let drift = run.mass.iter().fold(0.0f64, |m, v| m.max((v - run.mass[0]).abs()));
    Ok((rel_l2(&run.final_state.rho, &exact), drift))
}

/// Zero-rate error of the finite-volume solver at `(2h, 4dt)` and
/// `(h, dt)`; second order in space gives a ratio near 4.
pub fn pde_convergence(cfg: &RunConfig) -> Result<Outcome> {
    let (mean, sigma) = gaussian_init(&cfg.init)?;
    let horizon = cfg.model.horizon;
    let var_t = sigma * sigma + 2.0 * horizon;
    let p = ModelParams { lambda: 0.0, ..cfg.params() };
    let half = cfg.pde_half_width();
    let mut errs = Vec::new();
    let mut drift = 0.0f64;
    let mut t = Table::new("pde_convergence", &["h", "dt", "rel_l2", "mass_drift"]);
    for (h, dt) in [(2.0 * cfg.pde.h, 4.0 * cfg.pde.dt), (cfg.pde.h, cfg.pde.dt)] {
        let pc = PdeConfig {
            grid: SpatialGrid::with_spacing(half, h)?,
            time: TimeGrid::with_step(horizon, dt)?,
            mode: PdeMode::Local,
            kernel: None,
            params: p,
            snapshot_every: 0,
        };
        let (e, d) = heat_error(&pc, &cfg.init, mean, var_t)?;
        t.push(vec![num(pc.grid.h()), num(pc.time.dt()), num(e), num(d)]);
        drift = drift.max(d);
        errs.push(e);
    }
    let ratio = errs[0] / errs[1];
    let mut out = Outcome::default();
    out.tables.push(t);
    out.checks.push(Check::at_most("zero-rate mass drift", drift, 1e-10, 0.0));
    out.checks.push(Check::within("finite-volume convergence ratio", ratio, 3.0, 5.0));
    out.summary.insert("pde_convergence".into(), json!({ "errors": errs, "ratio": ratio, "mass_drift": drift }));
    Ok(out)
}

/// Interacting run with the always-on bounds, then the field bounds on the
/// diagnostics grid at every snapshot step.
pub fn field_bounds_study(cfg: &RunConfig) -> Result<Outcome> {
    let k = cfg.kernel();
    let mut out = Outcome::default();
    let mut sc = cfg.sim_config();
    sc.store_paths = false;
    let (rec, field) = simulate_interacting(&sc)?;
    out.checks.push(Check::holds("always-on bounds during simulation", 0).with_note(format!(
        "{} steps of {} particles completed",
        sc.grid.n_steps(),
        sc.n_particles
    )));
    let ys = sc.diagnostics.ys.clone();
    let steps = diagnostic_steps(&sc.grid, cfg.diagnostics.every);
    let sub = FKField::new(
        TimeGrid::new(sc.grid.horizon(), steps.len() - 1)?,
        k,
        steps.iter().map(|&s| field.slice(s).clone()).collect(),
    )?;
    out.checks.extend(field_bound_checks(&sub, &ys));
    out.checks.push(Check::holds(
        "mean weight nonincreasing",
        rec.summary.windows(2).filter(|w| w[1].mean_v > w[0].mean_v).count(),
    ));
    Ok(out)
}

/// The property suite: kernel certificate, killing and drift lemmas,
/// fixed-point probe, scalar oracle, field bounds during a simulation,
/// finite-volume structure and, when enabled, convergence and the
/// zero-rate reduction.
pub fn invariants_study(cfg: &RunConfig) -> Result<Outcome> {
    let inv = &cfg.invariants;
    let p = cfg.params();
    let k = cfg.kernel();
    let mut out = Outcome::default();
    out.checks.extend(kernel_certificate(&k, inv.samples, derive_seed(cfg.seed, 1)));
    out.checks.extend(killing_lemmas(&p, inv.pairs, derive_seed(cfg.seed, 2))?);
    out.checks.extend(drift_checks(&p, &k, inv.pairs, derive_seed(cfg.seed, 3))?);

    let paths = brownian_ensemble(cfg.time_grid(), inv.paths, derive_seed(cfg.seed, 4))?;
    let probe = picard_checks(&paths, &k, &p, &cfg.fk_options())?;
    out.checks.extend(probe.checks);
    out.checks.push(scalar_oracle_check(cfg)?);

    out.merge(field_bounds_study(cfg)?);
    out.merge(pde_study(cfg)?);
    out.tables.clear();
    if inv.convergence {
        out.merge(pde_convergence(cfg)?);
    }
    if cfg.reduction.enabled {
        out.merge(heat_reduction(cfg)?);
    }
    let mut t = Table::new("invariants", &["check", "value", "bound", "verdict"]);
    for c in &out.checks {
        t.push(vec![
            c.name.clone(),
            num(c.value),
            num(c.bound),
            if c.passed() { "pass" } else { "fail" }.to_string(),
        ]);
    }
    out.tables.insert(0, t);
    out.summary.insert(
        "picard_probe".into(),
        json!({
            "iterations": probe.iterations,
            "contraction": probe.contraction,
            "uniqueness_gap": probe.uniqueness_gap,
            "anticipation_gap": probe.anticipation_gap,
        }),
    );
    Ok(out)
}
