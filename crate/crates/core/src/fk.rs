//! Picard solver for the regularised Feynman-Kac equation on a frozen
//! ensemble of paths.
//!
//! The unknown is the field read along each path, `Z[k][p] = u(t_k, w^p_k)`.
//! One sweep turns `Z` into path weights through the killing accumulators
//! and then re-evaluates the weighted kernel mixture at every path:
//!
//! ```text
//! Z'[k][p] = (1/P) sum_q K(w^p_k - w^q_k) exp(-lambda c0 B^q_k[Z])
//! ```
//!
//! Convergence is monitored in the weighted norm
//! `mean_p max_k e^{-M t_k} |Z' - Z|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::PathAccumulators;
use crate::error::{Error, Result};
use crate::field::{FKField, FieldSlice};
use crate::kernel::KernelSpec;
use crate::params::ModelParams;
use crate::paths::PathEnsemble;

/// Time quadrature for the path accumulators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    /// explicit, non-anticipating; matches the particle scheme
    #[default]
    Left,
    /// second order; only meant for comparisons against smooth oracles
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialIterate {
    Zero,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormWeight {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub quadrature: Quadrature,
    pub initial: InitialIterate,
    pub norm_weight: NormWeight,
}

impl Default for FkOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            quadrature: Quadrature::Left,
            initial: InitialIterate::Zero,
            norm_weight: NormWeight::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    /// index of the accepted iterate
    pub iterations: usize,
    /// weighted-norm distance between successive iterates
    pub residuals: Vec<f64>,
    /// plain sup-norm distance between successive iterates
    pub sup_residuals: Vec<f64>,
    pub norm_weight: f64,
    /// the self-consistent weight hit its cap and plain sup-in-time
    /// monitoring was used instead
    pub norm_weight_capped: bool,
    /// `M_K lambda^2 c0 / M`, the per-sweep factor between the weighted
    /// norm and its time-integrated variant
    pub sweep_bound: f64,
    pub converged: bool,
}

const NORM_WEIGHT_CAP: f64 = 1e6;
const NORM_WEIGHT_ROUNDS: usize = 50;

/// Self-consistent weight `M = 2 M_K lambda^2 c0 T e^{M T}`, iterated from
/// `M = 1`. Returns `(0, true)` when the iteration blows past the cap.
pub fn select_norm_weight(k: &KernelSpec, p: &ModelParams) -> (f64, bool) {
    let a = 2.0 * k.sup_bound() * p.lambda * p.lambda * p.c0 * p.horizon;
    if a == 0.0 {
        return (0.0, false);
    }
    let mut m: f64 = 1.0;
    for _ in 0..NORM_WEIGHT_ROUNDS {
        let next = a * (m * p.horizon).exp();
        if !next.is_finite() || next > NORM_WEIGHT_CAP {
            return (0.0, true);
        }
        if (next - m).abs() <= 1e-12 * next {
            return (next, false);
        }
        m = next;
    }
    (m, false)
}

fn check_options(opts: &FkOptions) -> Result<()> {
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::param("tol", format!("must be > 0, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::param("max_iter", "must be >= 1"));
    }
    if let NormWeight::Fixed(m) = opts.norm_weight {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::param("norm_weight", format!("must be >= 0, got {m}")));
        }
    }
    Ok(())
}

/// Path weights `exp(-lambda c0 B^p_k)` for the iterate `z` (step-major).
fn weights_for(
    z: &[f64],
    n_paths: usize,
    n_points: usize,
    dt: f64,
    p: &ModelParams,
    quad: Quadrature,
) -> Vec<f64> {
    let mut w = vec![1.0; z.len()];
    let mut acc = vec![PathAccumulators::default(); n_paths];
    for k in 0..n_points - 1 {
        let (row, next) = (&z[k * n_paths..(k + 1) * n_paths], &z[(k + 1) * n_paths..(k + 2) * n_paths]);
        for q in 0..n_paths {
            let a = &mut acc[q];
            match quad {
                Quadrature::Left => a.advance(p, row[q], 0.0, dt),
                Quadrature::Trapezoid => {
                    let hist_new = a.hist + 0.5 * (row[q] + next[q]) * dt;
                    a.kill += 0.5 * ((-p.lambda * a.hist).exp() + (-p.lambda * hist_new).exp()) * dt;
                    a.hist = hist_new;
                    a.weight = (-p.lambda * p.c0 * a.kill).exp();
                }
            }
            w[(k + 1) * n_paths + q] = a.weight;
        }
    }
    w
}

/// One application of the fixed-point map; returns the slices built from
/// the weights of `z` and the new along-path values.
fn sweep(
    paths: &PathEnsemble,
    k: &KernelSpec,
    p: &ModelParams,
    quad: Quadrature,
    z: &[f64],
) -> (Vec<FieldSlice>, Vec<f64>) {
    let n_paths = paths.n_paths();
    let n_points = paths.grid().n_points();
    let w = weights_for(z, n_paths, n_points, paths.grid().dt(), p, quad);
    let (slices, rows): (Vec<FieldSlice>, Vec<Vec<f64>>) = (0..n_points)
        .into_par_iter()
        .map(|step| {
            let slice = FieldSlice::new(
                (0..n_paths).map(|q| (paths.position(q, step), w[step * n_paths + q])),
            );
            let row = (0..n_paths)
                .map(|q| slice.eval(k, paths.position(q, step)).0)
                .collect();
            (slice, row)
        })
        .unzip();
    (slices, rows.concat())
}

fn distances(z_new: &[f64], z: &[f64], n_paths: usize, n_points: usize, m: f64, dt: f64) -> (f64, f64) {
    let mut weighted = 0.0;
    let mut sup: f64 = 0.0;
    for q in 0..n_paths {
        let mut path_max: f64 = 0.0;
        for step in 0..n_points {
            let d = (z_new[step * n_paths + q] - z[step * n_paths + q]).abs();
            sup = sup.max(d);
            path_max = path_max.max((-m * step as f64 * dt).exp() * d);
        }
        weighted += path_max;
    }
    (weighted / n_paths as f64, sup)
}

/// One application of the fixed-point map to step-major along-path
/// values `z` (`z[k * P + p]`).
pub fn apply_map(paths: &PathEnsemble, k: &KernelSpec, p: &ModelParams, quad: Quadrature, z: &[f64]) -> Result<Vec<f64>> {
    let want = paths.n_paths() * paths.grid().n_points();
    if z.len() != want {
        return Err(Error::Mismatch(format!("{} values for {want} path points", z.len())));
    }
    Ok(sweep(paths, k, p, quad, z).1)
}

/// Solve the regularised Feynman-Kac equation on `paths`.
///
/// Non-convergence within `max_iter` is not an error: the report comes
/// back with `converged = false` and the field of the last iterate.
pub fn fk_solve(
    paths: &PathEnsemble,
    k: &KernelSpec,
    p: &ModelParams,
    opts: &FkOptions,
) -> Result<(FKField, PicardReport)> {
    check_options(opts)?;
    let n_paths = paths.n_paths();
    let n_points = paths.grid().n_points();
    let dt = paths.grid().dt();
    let (m, capped) = match opts.norm_weight {
        NormWeight::Auto => select_norm_weight(k, p),
        NormWeight::Fixed(m) => (m, false),
    };
    let sweep_bound = if m > 0.0 {
        k.sup_bound() * p.lambda * p.lambda * p.c0 / m
    } else {
        f64::INFINITY
    };
    let mut z = match opts.initial {
        InitialIterate::Zero => vec![0.0; n_paths * n_points],
        InitialIterate::Constant(c) => vec![c; n_paths * n_points],
    };
    let mut residuals = Vec::new();
    let mut sup_residuals = Vec::new();
    let mut accepted = None;
    let mut last_slices = Vec::new();
    for n in 0..opts.max_iter {
        let (slices, z_new) = sweep(paths, k, p, opts.quadrature, &z);
        if z_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite Picard iterate at sweep {n}")));
        }
        let (r, r_sup) = distances(&z_new, &z, n_paths, n_points, m, dt);
        residuals.push(r);
        sup_residuals.push(r_sup);
        if r < opts.tol {
            accepted = Some(n);
            last_slices = slices;
            break;
        }
        last_slices = slices;
        z = z_new;
    }
    let report = PicardReport {
        iterations: accepted.unwrap_or(opts.max_iter),
        residuals,
        sup_residuals,
        norm_weight: m,
        norm_weight_capped: capped,
        sweep_bound,
        converged: accepted.is_some(),
    };
    let field = FKField::new(*paths.grid(), *k, last_slices)?;
    Ok((field, report))
}

/// Solve again on the paths restricted to `[0, t_cut]`.
pub fn restrict_and_resolve(
    paths: &PathEnsemble,
    t_cut: f64,
    k: &KernelSpec,
    p: &ModelParams,
    opts: &FkOptions,
) -> Result<(FKField, PicardReport)> {
    if !(t_cut > 0.0) {
        return Err(Error::domain("restrict_and_resolve", format!("t_cut must be > 0, got {t_cut}")));
    }
    let cut = paths.grid().exact_step(t_cut)?;
    if cut == paths.grid().n_steps() {
        return fk_solve(paths, k, p, opts);
    }
    fk_solve(&paths.truncate(cut)?, k, p, opts)
}

/// Geometric mean of the ratios of consecutive residuals.
///
/// An exactly vanishing residual means the iteration reached its fixed
/// point and the factor is reported as 0.
pub fn contraction_estimate(report: &PicardReport) -> Result<f64> {
    let r = &report.residuals;
    if r.iter().any(|&v| v == 0.0) {
        return Ok(0.0);
    }
    if r.len() < 3 {
        return Err(Error::domain(
            "contraction_estimate",
            format!("need at least 3 residuals, got {}", r.len()),
        ));
    }
    Ok((r[r.len() - 1] / r[0]).powf(1.0 / (r.len() - 1) as f64))
}
