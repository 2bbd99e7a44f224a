//! Pointwise functionals of the path history: the killing rate, the
//! Feynman-Kac weight, the explicit calcite density and the drift.
//!
//! Arguments are accumulator values, not whole paths: `hist` is the time
//! integral of the field along a path and `grad_hist` that of its gradient.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::params::ModelParams;

fn check_nonneg(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::domain(op, format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

/// Killing rate `-lambda c0 exp(-lambda hist)`, in `[-lambda c0, 0]`.
pub fn lambda_fn(p: &ModelParams, hist: f64) -> Result<f64> {
    check_nonneg("lambda_fn", "accumulated field", hist)?;
    Ok(-p.lambda * p.c0 * (-p.lambda * hist).exp())
}

/// Feynman-Kac weight `exp(-lambda c0 kill)`.
pub fn v_weight(p: &ModelParams, kill: f64) -> Result<f64> {
    check_nonneg("v_weight", "killing integral", kill)?;
    Ok((-p.lambda * p.c0 * kill).exp())
}

/// Calcite density left after exposure `hist`: `c0 exp(-lambda hist)`.
pub fn calcite_along_path(p: &ModelParams, hist: f64) -> Result<f64> {
    check_nonneg("calcite_along_path", "accumulated field", hist)?;
    Ok(p.c0 * (-p.lambda * hist).exp())
}

/// Velocity `grad(phi(c)) / phi(c)` written through the accumulators:
///
/// `-phi1 lambda c0 e^{-lambda hist} grad_hist / (phi0 + phi1 c0 e^{-lambda hist})`.
pub fn drift_b(p: &ModelParams, hist: f64, grad_hist: f64) -> Result<f64> {
    check_nonneg("drift_b", "accumulated field", hist)?;
    if !grad_hist.is_finite() {
        return Err(Error::domain(
            "drift_b",
            format!("accumulated gradient must be finite, got {grad_hist}"),
        ));
    }
    Ok(drift_unchecked(p, hist, grad_hist))
}

#[inline]
pub(crate) fn drift_unchecked(p: &ModelParams, hist: f64, grad_hist: f64) -> f64 {
    let e = (-p.lambda * hist).exp();
    let denom = p.phi0 + p.phi1 * p.c0 * e;
    -p.phi1 * p.lambda * p.c0 * e * grad_hist / denom
}

/// Bound on `|b|` at time `t`, valid whenever `|grad_hist| <= M_K' t`
/// (the running bound implied by `|grad u| <= M_K'`).
pub fn drift_bound(p: &ModelParams, k: &KernelSpec, t: f64) -> f64 {
    p.phi1.abs() * p.c0 * p.lambda * k.grad_bound() * t / p.porosity_min()
}

/// Partial Lipschitz constants `(L_hist, L_grad)` of the drift on the box
/// `hist >= 0, |grad_hist| <= M_K' t`.
///
/// `d b / d grad_hist = -phi1 lambda c0 e / D` and
/// `d b / d hist = -phi1 lambda^2 c0 phi0 e grad_hist / D^2` with
/// `e = exp(-lambda hist) <= 1` and `D >= min porosity`.
pub fn drift_lipschitz(p: &ModelParams, k: &KernelSpec, t: f64) -> (f64, f64) {
    let d = p.porosity_min();
    let l_grad = p.phi1.abs() * p.lambda * p.c0 / d;
    let l_hist = p.phi1.abs() * p.lambda * p.lambda * p.c0 * p.phi0 * k.grad_bound() * t / (d * d);
    (l_hist, l_grad)
}
