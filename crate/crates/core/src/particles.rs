//! Euler-Maruyama simulation of the weighted particle system.
//!
//! Per step `k -> k+1`, in this order:
//! 1. build the field slice from the positions and weights at `t_k`;
//! 2. read `u`, `grad u` at every particle;
//! 3. advance the path accumulators (left endpoint);
//! 4. move `x += b(A, G) dt + sqrt(2 dt) xi`.
//!
//! In a driven run step 1 reads the slice of a frozen field instead.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::PathAccumulators;
use crate::error::{Error, Result};
use crate::field::{FKField, FieldSlice};
use crate::grid::TimeGrid;
use crate::init::InitSpec;
use crate::kernel::KernelSpec;
use crate::killing::{drift_bound, drift_unchecked};
use crate::noise::NoiseSource;
use crate::params::ModelParams;
use crate::paths::PathEnsemble;

/// Relative slack on the always-on bound checks (rounding only).
const CHECK_SLACK: f64 = 1e-12;

/// Where and how often field snapshots are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub ys: Vec<f64>,
    /// snapshot every this many steps (0: final step only); the last step
    /// is always included
    pub every: usize,
}

impl Diagnostics {
    pub fn uniform(lo: f64, hi: f64, n: usize, every: usize) -> Self {
        let n = n.max(2);
        let h = (hi - lo) / (n - 1) as f64;
        Self {
            ys: (0..n).map(|i| lo + i as f64 * h).collect(),
            every,
        }
    }

    pub fn none() -> Self {
        Self {
            ys: Vec::new(),
            every: 0,
        }
    }

    fn wants(&self, k: usize, n_steps: usize) -> bool {
        !self.ys.is_empty() && (k == n_steps || (self.every > 0 && k % self.every == 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    pub kernel: KernelSpec,
    pub grid: TimeGrid,
    pub n_particles: usize,
    pub seed: u64,
    pub init: InitSpec,
    pub store_paths: bool,
    pub diagnostics: Diagnostics,
}

impl SimConfig {
    pub fn new(params: ModelParams, kernel: KernelSpec, grid: TimeGrid, n_particles: usize, seed: u64) -> Self {
        Self {
            params,
            kernel,
            grid,
            n_particles,
            seed,
            init: InitSpec::default(),
            store_paths: false,
            diagnostics: Diagnostics::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_particles == 0 {
            return Err(Error::param("n_particles", "must be >= 1"));
        }
        if (self.grid.horizon() - self.params.horizon).abs() > 1e-12 * self.params.horizon {
            return Err(Error::Mismatch(format!(
                "time grid horizon {} differs from model horizon {}",
                self.grid.horizon(),
                self.params.horizon
            )));
        }
        self.init.validate(self.params.s_cap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub step: usize,
    pub x: Vec<f64>,
    pub acc: Vec<PathAccumulators>,
}

impl EnsembleState {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Field slice carried by the current positions and weights.
    pub fn slice(&self) -> FieldSlice {
        FieldSlice::new(self.x.iter().zip(&self.acc).map(|(&x, a)| (x, a.weight)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub time: f64,
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub ys: Vec<f64>,
    pub u: Vec<f64>,
    pub grad_u: Vec<f64>,
}

/// Step-major record of every particle. `drift[k]` is the velocity used
/// for the move out of `t_k` (at the last step, the velocity the next
/// move would use).
#[derive(Debug, Clone, PartialEq)]
pub struct PathStore {
    pub grid: TimeGrid,
    pub n: usize,
    pub x: Vec<f64>,
    pub weight: Vec<f64>,
    pub hist: Vec<f64>,
    pub drift: Vec<f64>,
}

impl PathStore {
    fn new(grid: TimeGrid, n: usize) -> Self {
        let cap = n * grid.n_points();
        Self {
            grid,
            n,
            x: Vec::with_capacity(cap),
            weight: Vec::with_capacity(cap),
            hist: Vec::with_capacity(cap),
            drift: Vec::with_capacity(cap),
        }
    }

    pub fn n_steps_recorded(&self) -> usize {
        self.x.len() / self.n.max(1)
    }

    fn row<'a>(&self, v: &'a [f64], k: usize) -> &'a [f64] {
        &v[k * self.n..(k + 1) * self.n]
    }

    pub fn positions(&self, k: usize) -> &[f64] {
        self.row(&self.x, k)
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        self.row(&self.weight, k)
    }

    pub fn hists(&self, k: usize) -> &[f64] {
        self.row(&self.hist, k)
    }

    pub fn drifts(&self, k: usize) -> &[f64] {
        self.row(&self.drift, k)
    }

    pub fn to_ensemble(&self) -> Result<PathEnsemble> {
        let np = self.grid.n_points();
        let mut data = vec![0.0; self.n * np];
        for k in 0..np {
            for (i, &x) in self.positions(k).iter().enumerate() {
                data[i * np + k] = x;
            }
        }
        PathEnsemble::from_flat(self.grid, self.n, data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub summary: Vec<StepSummary>,
    pub snapshots: Vec<Snapshot>,
    pub paths: Option<PathStore>,
    pub final_state: EnsembleState,
}

/// i.i.d. draws from the initial density; all accumulators empty.
pub fn init_ensemble(cfg: &SimConfig, noise: &NoiseSource) -> Result<EnsembleState> {
    cfg.validate()?;
    let x = (0..cfg.n_particles)
        .into_par_iter()
        .map(|i| cfg.init.sample(noise.stream(i).init_rng()))
        .collect();
    Ok(EnsembleState {
        step: 0,
        x,
        acc: vec![PathAccumulators::default(); cfg.n_particles],
    })
}

fn check_finite(state: &EnsembleState) -> Result<()> {
    if let Some(i) = state.x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "particle {i} left the finite range at step {}",
            state.step
        )));
    }
    Ok(())
}

/// Advance every particle one step in `slice` (interacting or frozen).
fn advance(
    state: &mut EnsembleState,
    cfg: &SimConfig,
    noise: &NoiseSource,
    slice: &FieldSlice,
    kernel: &KernelSpec,
) -> Result<Vec<f64>> {
    let k = state.step;
    if k >= cfg.grid.n_steps() {
        return Err(Error::domain("step", format!("already at the final step {k}")));
    }
    let p = &cfg.params;
    let dt = cfg.grid.dt();
    let sdt = (2.0 * dt).sqrt();
    let u_max = cfg.kernel.sup_bound() * (1.0 + CHECK_SLACK);
    let g_max = cfg.kernel.grad_bound() * (1.0 + CHECK_SLACK);
    let b_max = drift_bound(p, &cfg.kernel, cfg.grid.time(k + 1)) * (1.0 + 1e-9) + 1e-300;
    let out: Vec<std::result::Result<f64, String>> = state
        .x
        .par_iter_mut()
        .zip(state.acc.par_iter_mut())
        .enumerate()
        .map(|(i, (x, a))| {
            let (u, g) = slice.eval(kernel, *x);
            if !(u >= 0.0 && u <= u_max) {
                return Err(format!("field value {u} at particle {i} outside [0, M_K]"));
            }
            if !(g.abs() <= g_max) {
                return Err(format!("field gradient {g} at particle {i} exceeds M_K'"));
            }
            let v_old = a.weight;
            a.advance(p, u, g, dt);
            if !(a.weight > 0.0 && a.weight <= v_old) {
                return Err(format!("weight of particle {i} went from {v_old} to {}", a.weight));
            }
            let b = drift_unchecked(p, a.hist, a.grad_hist);
            if !(b.abs() <= b_max) {
                return Err(format!("drift {b} at particle {i} exceeds bound {b_max}"));
            }
            *x += b * dt + sdt * noise.increment(i, k);
            Ok(b)
        })
        .collect();
    let mut drifts = Vec::with_capacity(out.len());
    for r in out {
        match r {
            Ok(b) => drifts.push(b),
            Err(msg) => return Err(Error::Invariant(format!("step {k}: {msg}"))),
        }
    }
    state.step = k + 1;
    check_finite(state)?;
    Ok(drifts)
}

/// One step of the interacting system.
pub fn step_interacting(state: &EnsembleState, cfg: &SimConfig, noise: &NoiseSource) -> Result<EnsembleState> {
    let mut next = state.clone();
    let slice = state.slice();
    advance(&mut next, cfg, noise, &slice, &cfg.kernel)?;
    Ok(next)
}

fn summarize(state: &EnsembleState, grid: &TimeGrid) -> StepSummary {
    let n = state.len() as f64;
    let mean_x = state.x.iter().sum::<f64>() / n;
    let var_x = state.x.iter().map(|x| (x - mean_x) * (x - mean_x)).sum::<f64>() / n;
    let mean_v = state.acc.iter().map(|a| a.weight).sum::<f64>() / n;
    StepSummary {
        step: state.step,
        time: grid.time(state.step),
        mean_x,
        var_x,
        mean_v,
    }
}

fn snapshot(cfg: &SimConfig, step: usize, slice: &FieldSlice, kernel: &KernelSpec) -> Result<Snapshot> {
    let ys = cfg.diagnostics.ys.clone();
    let (u, grad_u): (Vec<f64>, Vec<f64>) = ys.iter().map(|&y| slice.eval(kernel, y)).unzip();
    let m = cfg.kernel.sup_bound() * (1.0 + CHECK_SLACK);
    let mg = cfg.kernel.grad_bound() * (1.0 + CHECK_SLACK);
    let lk = cfg.kernel.lipschitz();
    for j in 0..ys.len() {
        if !(u[j] >= 0.0 && u[j] <= m && grad_u[j].abs() <= mg) {
            return Err(Error::Invariant(format!(
                "snapshot at step {step}: (u, grad u) = ({}, {}) at y = {} out of bounds",
                u[j], grad_u[j], ys[j]
            )));
        }
        if j > 0 {
            let dy = (ys[j] - ys[j - 1]).abs();
            if (u[j] - u[j - 1]).abs() > lk * dy * (1.0 + 1e-9) + 1e-15 {
                return Err(Error::Invariant(format!(
                    "snapshot at step {step}: Lipschitz bound broken between y = {} and {}",
                    ys[j - 1], ys[j]
                )));
            }
        }
    }
    Ok(Snapshot {
        step,
        time: cfg.grid.time(step),
        ys,
        u,
        grad_u,
    })
}

fn store_row(store: &mut PathStore, state: &EnsembleState, drifts: &[f64]) {
    store.x.extend_from_slice(&state.x);
    store.weight.extend(state.acc.iter().map(|a| a.weight));
    store.hist.extend(state.acc.iter().map(|a| a.hist));
    store.drift.extend_from_slice(drifts);
}

fn run(cfg: &SimConfig, frozen: Option<&FKField>, noise: &NoiseSource) -> Result<(TrajectoryRecord, Vec<FieldSlice>)> {
    cfg.validate()?;
    if let Some(f) = frozen {
        if !f.grid().same_as(&cfg.grid) {
            return Err(Error::Mismatch(format!(
                "frozen field has {} steps over {}, simulation {} over {}",
                f.grid().n_steps(),
                f.grid().horizon(),
                cfg.grid.n_steps(),
                cfg.grid.horizon()
            )));
        }
        if f.kernel() != &cfg.kernel {
            return Err(Error::Mismatch("frozen field uses a different kernel".into()));
        }
    }
    let mut state = init_ensemble(cfg, noise)?;
    let n_steps = cfg.grid.n_steps();
    let mut summary = vec![summarize(&state, &cfg.grid)];
    let mut snapshots = Vec::new();
    let mut slices = Vec::new();
    let mut store = cfg.store_paths.then(|| PathStore::new(cfg.grid, cfg.n_particles));
    let slice_at = |state: &EnsembleState, k: usize| match frozen {
        Some(f) => f.slice(k).clone(),
        None => state.slice(),
    };
    for k in 0..n_steps {
        let slice = slice_at(&state, k);
        if cfg.diagnostics.wants(k, n_steps) {
            snapshots.push(snapshot(cfg, k, &slice, &cfg.kernel)?);
        }
        let pre = store.as_ref().map(|_| state.clone());
        let drifts = advance(&mut state, cfg, noise, &slice, &cfg.kernel)?;
        if let (Some(s), Some(pre)) = (store.as_mut(), pre) {
            store_row(s, &pre, &drifts);
        }
        if frozen.is_none() {
            slices.push(slice);
        }
        summary.push(summarize(&state, &cfg.grid));
    }
    let last = slice_at(&state, n_steps);
    if cfg.diagnostics.wants(n_steps, n_steps) {
        snapshots.push(snapshot(cfg, n_steps, &last, &cfg.kernel)?);
    }
    if let Some(s) = store.as_mut() {
        let drifts: Vec<f64> = state
            .acc
            .iter()
            .map(|a| drift_unchecked(&cfg.params, a.hist, a.grad_hist))
            .collect();
        store_row(s, &state, &drifts);
    }
    if frozen.is_none() {
        slices.push(last);
    }
    Ok((
        TrajectoryRecord {
            summary,
            snapshots,
            paths: store,
            final_state: state,
        },
        slices,
    ))
}

/// Run the interacting system; also returns its empirical field.
pub fn simulate_interacting(cfg: &SimConfig) -> Result<(TrajectoryRecord, FKField)> {
    simulate_interacting_with(cfg, &NoiseSource::new(cfg.seed))
}

/// As `simulate_interacting`, with an explicit noise source.
pub fn simulate_interacting_with(cfg: &SimConfig, noise: &NoiseSource) -> Result<(TrajectoryRecord, FKField)> {
    let (rec, slices) = run(cfg, None, noise)?;
    let field = FKField::new(cfg.grid, cfg.kernel, slices)?;
    Ok((rec, field))
}

/// Run non-interacting particles in a frozen field.
pub fn simulate_driven(cfg: &SimConfig, field: &FKField) -> Result<TrajectoryRecord> {
    Ok(run(cfg, Some(field), &NoiseSource::new(cfg.seed))?.0)
}

/// One `(N, replica)` cell of a coupling study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSample {
    pub n: usize,
    pub replica: usize,
    /// `sup_k |xi_i - Y_i|^2` per particle index
    pub path_sq: Vec<f64>,
    /// `sup_y |u_N(T, y) - u_ref(T, y)|^2` over the diagnostics grid
    pub field_sup_sq: f64,
    /// `int |u_N(T) - u_ref(T)|^2 dy` (trapezoid on the diagnostics grid)
    pub field_l2_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRow {
    pub n: usize,
    /// `max_i` of the replica mean of `sup_k |xi_i - Y_i|^2`
    pub path_max: f64,
    /// the same quantity averaged over `i` and replicas
    pub path_pooled: f64,
    pub path_pooled_stderr: f64,
    pub field_sup_sq: f64,
    pub field_l2_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingStudy {
    pub n_ref: usize,
    pub replicas: usize,
    pub rows: Vec<CouplingRow>,
    #[serde(skip)]
    pub samples: Vec<CouplingSample>,
}

/// Path-wise coupling of one interacting system of size `cfg.n_particles`
/// with the driven system in `reference`, sharing initial draws and noise.
pub fn couple_once(cfg: &SimConfig, reference: &FKField) -> Result<(Vec<f64>, f64, f64)> {
    let mut c = cfg.clone();
    c.store_paths = true;
    let (ri, fi) = simulate_interacting(&c)?;
    let rd = simulate_driven(&c, reference)?;
    let (pi, pd) = (ri.paths.as_ref().unwrap(), rd.paths.as_ref().unwrap());
    let mut sq = vec![0.0f64; c.n_particles];
    for k in 0..c.grid.n_points() {
        for (i, (a, b)) in pi.positions(k).iter().zip(pd.positions(k)).enumerate() {
            sq[i] = sq[i].max((a - b) * (a - b));
        }
    }
    let ys = &c.diagnostics.ys;
    let n = c.grid.n_steps();
    let (mut sup, mut l2) = (0.0f64, 0.0);
    let diff: Vec<f64> = ys
        .iter()
        .map(|&y| fi.eval_step(n, y).0 - reference.eval_step(n, y).0)
        .collect();
    for j in 0..ys.len() {
        sup = sup.max(diff[j] * diff[j]);
        if j > 0 {
            l2 += 0.5 * (diff[j] * diff[j] + diff[j - 1] * diff[j - 1]) * (ys[j] - ys[j - 1]);
        }
    }
    Ok((sq, sup, l2))
}

/// Coupling study: reference field from an interacting run of size
/// `n_ref` with `cfg.seed`; replica `r` of every size uses
/// `derive_seed(cfg.seed, r)`.
pub fn couple_systems(cfg: &SimConfig, ns: &[usize], n_ref: usize, replicas: usize) -> Result<CouplingStudy> {
    if ns.is_empty() {
        return Err(Error::param("ns", "need at least one particle count"));
    }
    let n_max = *ns.iter().max().unwrap();
    if n_ref <= n_max {
        return Err(Error::param(
            "n_ref",
            format!("reference size {n_ref} must exceed the largest study size {n_max}"),
        ));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be >= 1"));
    }
    if cfg.diagnostics.ys.len() < 2 {
        return Err(Error::param("diagnostics", "need at least two diagnostic points"));
    }
    let mut rc = cfg.clone();
    rc.n_particles = n_ref;
    rc.store_paths = false;
    let (_, reference) = simulate_interacting(&rc)?;
    let mut samples = Vec::new();
    let mut rows = Vec::new();
    for &n in ns {
        let mut per_rep = Vec::with_capacity(replicas);
        for r in 0..replicas {
            let mut c = cfg.clone();
            c.n_particles = n;
            c.seed = crate::noise::derive_seed(cfg.seed, r as u64);
            let (sq, sup, l2) = couple_once(&c, &reference)?;
            per_rep.push(CouplingSample {
                n,
                replica: r,
                path_sq: sq,
                field_sup_sq: sup,
                field_l2_sq: l2,
            });
        }
        rows.push(aggregate(n, &per_rep));
        samples.extend(per_rep);
    }
    Ok(CouplingStudy {
        n_ref,
        replicas,
        rows,
        samples,
    })
}

fn aggregate(n: usize, reps: &[CouplingSample]) -> CouplingRow {
    let r = reps.len() as f64;
    let path_max = (0..n)
        .map(|i| reps.iter().map(|s| s.path_sq[i]).sum::<f64>() / r)
        .fold(0.0, f64::max);
    // replica means of the index average are i.i.d. across replicas
    let rep_means: Vec<f64> = reps
        .iter()
        .map(|s| s.path_sq.iter().sum::<f64>() / n as f64)
        .collect();
    let pooled = rep_means.iter().sum::<f64>() / r;
    let stderr = if reps.len() > 1 {
        (rep_means.iter().map(|m| (m - pooled).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
    } else {
        f64::NAN
    };
    CouplingRow {
        n,
        path_max,
        path_pooled: pooled,
        path_pooled_stderr: stderr,
        field_sup_sq: reps.iter().map(|s| s.field_sup_sq).sum::<f64>() / r,
        field_l2_sq: reps.iter().map(|s| s.field_l2_sq).sum::<f64>() / r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, phi1: f64, n: usize, steps: usize) -> SimConfig {
        let p = ModelParams::new(lambda, 1.0, 0.5, phi1, 1.0).unwrap();
        let k = KernelSpec::gaussian(0.3).unwrap();
        let g = TimeGrid::new(1.0, steps).unwrap();
        SimConfig::new(p, k, g, n, 5)
    }

    #[test]
    fn zero_rate_is_brownian() {
        let c = cfg(0.0, 0.3, 50, 20);
        let noise = NoiseSource::new(c.seed);
        let s0 = init_ensemble(&c, &noise).unwrap();
        let s1 = step_interacting(&s0, &c, &noise).unwrap();
        let sdt = (2.0 * c.grid.dt()).sqrt();
        for i in 0..50 {
            assert_eq!(s1.x[i], s0.x[i] + sdt * noise.increment(i, 0));
            assert_eq!(s1.acc[i].weight, 1.0);
        }
    }

    #[test]
    fn constant_porosity_kills_but_does_not_push() {
        let c = cfg(1.0, 0.0, 40, 30);
        let (rec, _) = simulate_interacting(&c).unwrap();
        for w in rec.summary.windows(2) {
            assert!(w[1].mean_v < w[0].mean_v);
        }
        let noise = NoiseSource::new(c.seed);
        let s0 = init_ensemble(&c, &noise).unwrap();
        let sdt = (2.0 * c.grid.dt()).sqrt();
        for i in 0..40 {
            let bm: f64 = s0.x[i] + (0..30).map(|k| sdt * noise.increment(i, k)).sum::<f64>();
            assert!((rec.final_state.x[i] - bm).abs() < 1e-12);
        }
    }

    #[test]
    fn no_steps_echoes_initial_state() {
        let mut c = cfg(1.0, 0.3, 10, 0);
        c.grid = TimeGrid::new(1.0, 0).unwrap();
        let (rec, field) = simulate_interacting(&c).unwrap();
        let s0 = init_ensemble(&c, &NoiseSource::new(c.seed)).unwrap();
        assert_eq!(rec.final_state, s0);
        assert_eq!(field.slices().len(), 1);
    }

    #[test]
    fn rejects_oversized_study() {
        let c = cfg(1.0, 0.3, 10, 10);
        assert!(couple_systems(&c, &[200], 100, 2).is_err());
    }
}
