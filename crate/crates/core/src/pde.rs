//! Explicit finite-volume solver for the sulphation system
//!
//! ```text
//! d_t rho = d_x( phi(c) d_x(rho / phi(c)) ) - lambda c rho
//! d_t c   = -lambda r c,   r = rho (local) or K * rho (nonlocal)
//! ```
//!
//! on `[-L, L]` with zero-flux walls. Each step is split: a conservative
//! flux step with `phi(c_k)`, then the exact reaction factors for `rho`
//! and `c`, both using the pre-step fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::init::InitSpec;
use crate::kernel::KernelSpec;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    half_width: f64,
    n_cells: usize,
}

impl SpatialGrid {
    pub fn new(half_width: f64, n_cells: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", format!("must be > 0, got {half_width}")));
        }
        if n_cells < 3 {
            return Err(Error::param("n_cells", format!("need at least 3 cells, got {n_cells}")));
        }
        Ok(Self { half_width, n_cells })
    }

    /// Grid with cell width as close to `h` as divides `2L`.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param("h", format!("must be > 0, got {h}")));
        }
        Self::new(half_width, (2.0 * half_width / h).round() as usize)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// `h sum f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.h()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeMode {
    #[default]
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeConfig {
    pub grid: SpatialGrid,
    pub time: TimeGrid,
    pub mode: PdeMode,
    /// required in nonlocal mode; used by `mollify_density` otherwise
    pub kernel: Option<KernelSpec>,
    pub params: ModelParams,
    /// keep every this many states (0: initial and final only)
    pub snapshot_every: usize,
}

impl PdeConfig {
    /// Stability limit `h^2 / (2 D)` of the flux step, with the effective
    /// diffusivity `D = (1 + phi_max / phi_min) / 2` of the discrete operator.
    pub fn cfl_limit(&self) -> f64 {
        let p = &self.params;
        let d = 0.5 * (1.0 + p.porosity_max() / p.porosity_min());
        self.grid.h().powi(2) / (2.0 * d)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.mode == PdeMode::Nonlocal && self.kernel.is_none() {
            return Err(Error::param("kernel", "nonlocal mode needs a kernel"));
        }
        let dt = self.time.dt();
        let limit = self.cfl_limit();
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        Ok(())
    }
}

/// Smallest half-width that keeps `rho` away from the walls up to `T`:
/// `|mean| + 6 sqrt(var_0 + 2T) + 6 eps`, and at least the support of a
/// compact initial density plus `6 eps`.
pub fn required_half_width(init: &InitSpec, horizon: f64, eps: f64) -> f64 {
    let spread = 6.0 * (init.variance() + 2.0 * horizon).sqrt();
    init.mean().abs() + spread.max(init.reach()) + 6.0 * eps
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub step: usize,
    pub t: f64,
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub snapshots: Vec<PdeState>,
    pub final_state: PdeState,
    /// `int rho` at every step
    pub mass: Vec<f64>,
    /// mass removed by the reaction in step `k -> k+1`
    pub reacted: Vec<f64>,
    /// `mass[k+1] - mass[k] + reacted[k]`
    pub balance: Vec<f64>,
}

/// Discrete kernel weights `h K(m h)` for `m = -R..=R`.
fn kernel_stencil(grid: &SpatialGrid, k: &KernelSpec) -> Vec<f64> {
    let h = grid.h();
    let r = (k.r_cut() / h).floor() as isize;
    (-r..=r).map(|m| h * k.eval(m as f64 * h)).collect()
}

fn convolve(rho: &[f64], stencil: &[f64]) -> Vec<f64> {
    let n = rho.len() as isize;
    let r = (stencil.len() / 2) as isize;
    (0..n)
        .map(|i| {
            let lo = (i - r).max(0);
            let hi = (i + r).min(n - 1);
            (lo..=hi).map(|j| stencil[(j - i + r) as usize] * rho[j as usize]).sum()
        })
        .collect()
}

/// `(K * rho)` at the cell centers, zero outside the domain.
pub fn mollify_density(rho: &[f64], grid: &SpatialGrid, k: &KernelSpec) -> Vec<f64> {
    convolve(rho, &kernel_stencil(grid, k))
}

/// Initial state: `rho_0` sampled at cell centers, `c = c0`.
pub fn initial_state(cfg: &PdeConfig, init: &InitSpec) -> Result<PdeState> {
    init.validate(cfg.params.s_cap)?;
    let rho = cfg.grid.centers().iter().map(|&x| init.density(x)).collect();
    Ok(PdeState {
        step: 0,
        t: 0.0,
        rho,
        c: vec![cfg.params.c0; cfg.grid.n_cells()],
    })
}

/// One split step. Returns the new state and the reacted mass.
pub fn pde_step(state: &PdeState, cfg: &PdeConfig) -> Result<(PdeState, f64)> {
    let stencil = match cfg.mode {
        PdeMode::Nonlocal => Some(kernel_stencil(&cfg.grid, cfg.kernel.as_ref().unwrap())),
        PdeMode::Local => None,
    };
    step_with(state, cfg, stencil.as_deref())
}

fn step_with(state: &PdeState, cfg: &PdeConfig, stencil: Option<&[f64]>) -> Result<(PdeState, f64)> {
    let p = &cfg.params;
    let n = state.rho.len();
    let h = cfg.grid.h();
    let dt = cfg.time.dt();
    let r = dt / (h * h);
    let phi: Vec<f64> = state.c.iter().map(|&c| p.porosity(c)).collect();
    let q: Vec<f64> = state.rho.iter().zip(&phi).map(|(a, b)| a / b).collect();
    // face porosities, face i sits between cells i and i+1
    let face: Vec<f64> = (0..n - 1).map(|i| 0.5 * (phi[i] + phi[i + 1])).collect();
    let mut rho_star = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 { face[i - 1] } else { 0.0 };
        let right = if i + 1 < n { face[i] } else { 0.0 };
        let keep = 1.0 - r * (left + right) / phi[i];
        let mut v = keep * state.rho[i];
        if i > 0 {
            v += r * left * q[i - 1];
        }
        if i + 1 < n {
            v += r * right * q[i + 1];
        }
        rho_star[i] = v;
    }
    let mut reacted = 0.0;
    let mut rho = vec![0.0; n];
    for i in 0..n {
        let f = (-p.lambda * state.c[i] * dt).exp();
        rho[i] = rho_star[i] * f;
        reacted += rho_star[i] * (1.0 - f);
    }
    reacted *= h;
    let exposure = match stencil {
        None => state.rho.clone(),
        Some(s) => convolve(&state.rho, s),
    };
    let c: Vec<f64> = state
        .c
        .iter()
        .zip(&exposure)
        .map(|(&c, &e)| c * (-p.lambda * e * dt).exp())
        .collect();
    if let Some(i) = rho.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Invariant(format!(
            "negative or non-finite density {} in cell {i} at step {}",
            rho[i],
            state.step + 1
        )));
    }
    if let Some(i) = c.iter().zip(&state.c).position(|(a, b)| !(*a > 0.0 && a <= b)) {
        return Err(Error::Invariant(format!(
            "calcite in cell {i} went from {} to {} at step {}",
            state.c[i],
            c[i],
            state.step + 1
        )));
    }
    let step = state.step + 1;
    Ok((
        PdeState {
            step,
            t: cfg.time.time(step),
            rho,
            c,
        },
        reacted,
    ))
}

/// March `rho0` to the horizon with `c = c0` initially.
pub fn pde_solve(cfg: &PdeConfig, rho0: Vec<f64>) -> Result<PdeRun> {
    cfg.validate()?;
    if rho0.len() != cfg.grid.n_cells() {
        return Err(Error::Mismatch(format!(
            "{} initial values for {} cells",
            rho0.len(),
            cfg.grid.n_cells()
        )));
    }
    if let Some(v) = rho0.iter().find(|v| !(**v >= 0.0 && **v <= cfg.params.s_cap)) {
        return Err(Error::domain(
            "pde_solve",
            format!("initial density value {v} outside [0, {}]", cfg.params.s_cap),
        ));
    }
    let stencil = match cfg.mode {
        PdeMode::Nonlocal => Some(kernel_stencil(&cfg.grid, cfg.kernel.as_ref().unwrap())),
        PdeMode::Local => None,
    };
    let mut state = PdeState {
        step: 0,
        t: 0.0,
        c: vec![cfg.params.c0; rho0.len()],
        rho: rho0,
    };
    let n_steps = cfg.time.n_steps();
    let mut mass = vec![cfg.grid.integrate(&state.rho)];
    let mut reacted = Vec::with_capacity(n_steps);
    let mut balance = Vec::with_capacity(n_steps);
    let mut snapshots = vec![state.clone()];
    for k in 0..n_steps {
        let (next, r) = step_with(&state, cfg, stencil.as_deref())?;
        state = next;
        let m = cfg.grid.integrate(&state.rho);
        balance.push(m - mass[k] + r);
        mass.push(m);
        reacted.push(r);
        let k1 = k + 1;
        if k1 < n_steps && cfg.snapshot_every > 0 && k1 % cfg.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
    }
    if n_steps > 0 {
        snapshots.push(state.clone());
    }
    Ok(PdeRun {
        snapshots,
        final_state: state,
        mass,
        reacted,
        balance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64, phi1: f64, h: f64, dt: f64, t: f64) -> PdeConfig {
        PdeConfig {
            grid: SpatialGrid::with_spacing(8.0, h).unwrap(),
            time: TimeGrid::with_step(t, dt).unwrap(),
            mode: PdeMode::Local,
            kernel: None,
            params: ModelParams::new(lambda, 1.0, 0.5, phi1, t).unwrap(),
            snapshot_every: 0,
        }
    }

    #[test]
    fn cfl_is_checked() {
        let mut c = cfg(1.0, 0.3, 0.1, 1e-3, 0.1);
        assert!(c.validate().is_ok());
        c.time = TimeGrid::with_step(0.1, 0.01).unwrap();
        assert!(matches!(c.validate(), Err(Error::Cfl { .. })));
    }

    #[test]
    fn empty_density_stays_empty() {
        let c = cfg(1.0, 0.3, 0.1, 1e-3, 0.05);
        let run = pde_solve(&c, vec![0.0; c.grid.n_cells()]).unwrap();
        assert!(run.final_state.rho.iter().all(|&v| v == 0.0));
        assert!(run.final_state.c.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_rate_conserves_mass() {
        let c = cfg(0.0, 0.3, 0.05, 5e-4, 0.2);
        let rho0 = initial_state(&c, &InitSpec::default()).unwrap().rho;
        let run = pde_solve(&c, rho0).unwrap();
        let m0 = run.mass[0];
        assert!(run.mass.iter().all(|m| (m - m0).abs() < 1e-12));
    }

    #[test]
    fn unit_cell_mollifies_to_kernel() {
        let g = SpatialGrid::new(2.0, 200).unwrap();
        let k = KernelSpec::gaussian(0.2).unwrap();
        let mut rho = vec![0.0; 200];
        rho[100] = 1.0 / g.h();
        let u = mollify_density(&rho, &g, &k);
        for i in 0..200 {
            let expect = k.eval(g.center(i) - g.center(100));
            assert!((u[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn required_width_grows_with_horizon() {
        let i = InitSpec::default();
        assert!(required_half_width(&i, 1.0, 0.1) > required_half_width(&i, 0.5, 0.1));
        assert!((required_half_width(&i, 0.5, 0.0) - 6.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
