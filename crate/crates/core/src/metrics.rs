//! Distances, residuals and fitted rates used by the verification studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FKField;
use crate::grid::TimeGrid;
use crate::params::ModelParams;
use crate::particles::PathStore;
use crate::paths::PathEnsemble;

fn check_coupled(a: &[PathEnsemble], b: &[PathEnsemble]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "{} and {} replicas in a coupled comparison",
            a.len(),
            b.len()
        )));
    }
    for (r, (x, y)) in a.iter().zip(b).enumerate() {
        if x.n_paths() != y.n_paths() || !x.grid().same_as(y.grid()) {
            return Err(Error::Mismatch(format!(
                "replica {r}: {} paths on {} steps vs {} paths on {} steps",
                x.n_paths(),
                x.grid().n_steps(),
                y.n_paths(),
                y.grid().n_steps()
            )));
        }
        if x.n_paths() != a[0].n_paths() {
            return Err(Error::Mismatch("replicas differ in path count".into()));
        }
    }
    Ok(())
}

fn sup_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDistance {
    /// replica mean of `sup_k |a_i - b_i|^2` for every index `i`
    pub per_index: Vec<f64>,
    pub max: f64,
}

/// Replica means of `sup_k |a_i - b_i|^2`, index by index, and their max.
/// `a[r]` and `b[r]` are the two coupled systems of replica `r`.
pub fn sup_path_distance_sq(a: &[PathEnsemble], b: &[PathEnsemble]) -> Result<PathDistance> {
    check_coupled(a, b)?;
    let n = a[0].n_paths();
    let mut per_index = vec![0.0; n];
    for (x, y) in a.iter().zip(b) {
        for (i, s) in per_index.iter_mut().enumerate() {
            *s += sup_sq(x.path(i), y.path(i));
        }
    }
    let r = a.len() as f64;
    per_index.iter_mut().for_each(|s| *s /= r);
    let max = per_index.iter().copied().fold(0.0, f64::max);
    Ok(PathDistance { per_index, max })
}

/// Coupling expectation of `sup_k |a - b|^2` (optionally `^ 1`), an upper
/// bound on the squared path-space Wasserstein distance of the two laws.
pub fn wasserstein_upper_bound(a: &[PathEnsemble], b: &[PathEnsemble], cutoff: bool) -> Result<f64> {
    check_coupled(a, b)?;
    let mut s = 0.0;
    let mut count = 0usize;
    for (x, y) in a.iter().zip(b) {
        for i in 0..x.n_paths() {
            let d = sup_sq(x.path(i), y.path(i));
            s += if cutoff { d.min(1.0) } else { d };
            count += 1;
        }
    }
    Ok(s / count as f64)
}

/// Bounded path functionals; every value is clipped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathFunctional {
    Sin(f64),
    Cos(f64),
    Tanh(f64),
    Cos2(f64),
    /// `sin(x_b - x_a)`
    SinIncrement(f64, f64),
    /// `cos(x_a + x_b)`
    CosSum(f64, f64),
    /// running maximum over `[0, T]`, divided by 3
    RunMax,
    RunMin,
    /// `int_0^T x dt / (3T)`
    MeanPosition,
    /// `sin(int_0^T x dt)`
    SinIntegral,
}

impl PathFunctional {
    pub fn name(&self) -> String {
        match self {
            PathFunctional::Sin(t) => format!("sin(x@{t})"),
            PathFunctional::Cos(t) => format!("cos(x@{t})"),
            PathFunctional::Tanh(t) => format!("tanh(x@{t})"),
            PathFunctional::Cos2(t) => format!("cos(2x@{t})"),
            PathFunctional::SinIncrement(a, b) => format!("sin(x@{b}-x@{a})"),
            PathFunctional::CosSum(a, b) => format!("cos(x@{a}+x@{b})"),
            PathFunctional::RunMax => "runmax/3".into(),
            PathFunctional::RunMin => "runmin/3".into(),
            PathFunctional::MeanPosition => "int(x)/3T".into(),
            PathFunctional::SinIntegral => "sin(int(x))".into(),
        }
    }

    pub fn eval(&self, path: &[f64], grid: &TimeGrid) -> Result<f64> {
        let at = |t: f64| -> Result<f64> { Ok(path[grid.step_at(t)?]) };
        let integral = || path[..path.len() - 1].iter().sum::<f64>() * grid.dt();
        let v = match *self {
            PathFunctional::Sin(t) => at(t)?.sin(),
            PathFunctional::Cos(t) => at(t)?.cos(),
            PathFunctional::Tanh(t) => at(t)?.tanh(),
            PathFunctional::Cos2(t) => (2.0 * at(t)?).cos(),
            PathFunctional::SinIncrement(a, b) => (at(b)? - at(a)?).sin(),
            PathFunctional::CosSum(a, b) => (at(a)? + at(b)?).cos(),
            PathFunctional::RunMax => path.iter().copied().fold(f64::NEG_INFINITY, f64::max) / 3.0,
            PathFunctional::RunMin => path.iter().copied().fold(f64::INFINITY, f64::min) / 3.0,
            PathFunctional::MeanPosition => integral() / (3.0 * grid.horizon()),
            PathFunctional::SinIntegral => integral().sin(),
        };
        Ok(v.clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctionDictionary {
    pub members: Vec<PathFunctional>,
}

impl TestFunctionDictionary {
    /// The 20-member dictionary on `[0, T]`.
    pub fn standard(horizon: f64) -> Self {
        let q = [0.25, 0.5, 0.75, 1.0].map(|f| f * horizon);
        let mut m = Vec::with_capacity(20);
        for &t in &q {
            m.push(PathFunctional::Sin(t));
            m.push(PathFunctional::Cos(t));
            m.push(PathFunctional::Tanh(t));
        }
        m.push(PathFunctional::Cos2(q[1]));
        m.push(PathFunctional::Cos2(q[3]));
        m.push(PathFunctional::SinIncrement(q[1], q[3]));
        m.push(PathFunctional::CosSum(q[0], q[3]));
        m.push(PathFunctional::RunMax);
        m.push(PathFunctional::RunMin);
        m.push(PathFunctional::MeanPosition);
        m.push(PathFunctional::SinIntegral);
        Self { members: m }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Ensemble averages of every member.
    pub fn means(&self, paths: &PathEnsemble) -> Result<Vec<f64>> {
        let mut s = vec![0.0; self.len()];
        for path in paths.paths() {
            for (j, f) in self.members.iter().enumerate() {
                s[j] += f.eval(path, paths.grid())?;
            }
        }
        let n = paths.n_paths() as f64;
        Ok(s.into_iter().map(|v| v / n).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct D2Estimate {
    /// replica mean of `<mu_N - m_ref, phi>^2` per dictionary member
    pub per_member: Vec<f64>,
    pub per_member_stderr: Vec<f64>,
    pub max: f64,
    pub max_stderr: f64,
    pub argmax: usize,
}

pub const MIN_D2_REPLICAS: usize = 30;

/// Dictionary lower bound on `E d_2^2(mu_N, m)`; `samples[r]` holds the
/// `N` paths of replica `r`.
pub fn d2_estimate(
    samples: &[PathEnsemble],
    reference: &PathEnsemble,
    dict: &TestFunctionDictionary,
) -> Result<D2Estimate> {
    if samples.len() < MIN_D2_REPLICAS {
        return Err(Error::param(
            "replicas",
            format!("need at least {MIN_D2_REPLICAS} replicas, got {}", samples.len()),
        ));
    }
    if dict.is_empty() {
        return Err(Error::param("dictionary", "empty"));
    }
    let ref_means = dict.means(reference)?;
    let r = samples.len() as f64;
    let mut sq: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); dict.len()];
    for s in samples {
        if !s.grid().same_as(reference.grid()) {
            return Err(Error::Mismatch("sample and reference grids differ".into()));
        }
        for (j, m) in dict.means(s)?.into_iter().enumerate() {
            sq[j].push((m - ref_means[j]).powi(2));
        }
    }
    let mut per_member = Vec::with_capacity(dict.len());
    let mut per_member_stderr = Vec::with_capacity(dict.len());
    for e in &sq {
        let mean = e.iter().sum::<f64>() / r;
        let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        per_member.push(mean);
        per_member_stderr.push((var / r).sqrt());
    }
    let argmax = (0..per_member.len())
        .max_by(|&a, &b| per_member[a].total_cmp(&per_member[b]))
        .unwrap();
    Ok(D2Estimate {
        max: per_member[argmax],
        max_stderr: per_member_stderr[argmax],
        per_member,
        per_member_stderr,
        argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldNorm {
    Sup,
    /// trapezoid rule over the diagnostics points
    L2,
}

/// Norm of `a - b` sampled on `ys` (increasing).
pub fn profile_distance(a: &[f64], b: &[f64], ys: &[f64], norm: FieldNorm) -> Result<f64> {
    if a.len() != b.len() || a.len() != ys.len() {
        return Err(Error::Mismatch(format!(
            "profiles of length {}, {} on {} points",
            a.len(),
            b.len(),
            ys.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok(match norm {
        FieldNorm::Sup => d.iter().fold(0.0, |m, v| m.max(v.abs())),
        FieldNorm::L2 => {
            let mut s = 0.0;
            for j in 1..d.len() {
                s += 0.5 * (d[j] * d[j] + d[j - 1] * d[j - 1]) * (ys[j] - ys[j - 1]);
            }
            s.sqrt()
        }
    })
}

/// Distance between two fields at step `step`, or the max over all steps
/// when `step` is `None`.
pub fn field_distance(a: &FKField, b: &FKField, ys: &[f64], norm: FieldNorm, step: Option<usize>) -> Result<f64> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::Mismatch("fields live on different time grids".into()));
    }
    let one = |k: usize| -> Result<f64> {
        let (ua, _) = a.profile(k, ys);
        let (ub, _) = b.profile(k, ys);
        profile_distance(&ua, &ub, ys, norm)
    };
    match step {
        Some(k) if k > a.grid().n_steps() => Err(Error::domain(
            "field_distance",
            format!("step {k} beyond {}", a.grid().n_steps()),
        )),
        Some(k) => one(k),
        None => (0..a.grid().n_points()).try_fold(0.0, |m: f64, k| Ok(m.max(one(k)?))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares slope of `log err` against `log N`.
pub fn chaos_slope(ns: &[usize], errs: &[f64]) -> Result<SlopeFit> {
    if ns.len() != errs.len() {
        return Err(Error::Mismatch(format!("{} sizes, {} errors", ns.len(), errs.len())));
    }
    if ns.len() < 4 {
        return Err(Error::param("ns", format!("need at least 4 sizes, got {}", ns.len())));
    }
    let lo = *ns.iter().min().unwrap() as f64;
    let hi = *ns.iter().max().unwrap() as f64;
    if lo == 0.0 || hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::param("ns", "sizes must span at least one decade"));
    }
    if let Some(e) = errs.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::domain("chaos_slope", format!("error {e} cannot be logged")));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

/// Twice differentiable test function for the weak form.
pub trait TestFunction: Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SmoothFn {
    Constant(f64),
    Linear,
    /// `exp(-(x - center)^2 / (2 width^2))`
    Gaussian { center: f64, width: f64 },
    /// `cos(freq x + phase)`
    Cosine { freq: f64, phase: f64 },
}

impl TestFunction for SmoothFn {
    fn value(&self, x: f64) -> f64 {
        match *self {
            SmoothFn::Constant(c) => c,
            SmoothFn::Linear => x,
            SmoothFn::Gaussian { center, width } => (-(x - center).powi(2) / (2.0 * width * width)).exp(),
            SmoothFn::Cosine { freq, phase } => (freq * x + phase).cos(),
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match *self {
            SmoothFn::Constant(_) => 0.0,
            SmoothFn::Linear => 1.0,
            SmoothFn::Gaussian { center, width } => -(x - center) / (width * width) * self.value(x),
            SmoothFn::Cosine { freq, phase } => -freq * (freq * x + phase).sin(),
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match *self {
            SmoothFn::Constant(_) | SmoothFn::Linear => 0.0,
            SmoothFn::Gaussian { center, width } => {
                let w2 = width * width;
                ((x - center).powi(2) / (w2 * w2) - 1.0 / w2) * self.value(x)
            }
            SmoothFn::Cosine { freq, .. } => -freq * freq * self.value(x),
        }
    }
}

/// `gamma_k(f) = (1/N) sum_i V_i f(x_i)`.
fn gamma(store: &PathStore, f: &dyn TestFunction, k: usize) -> f64 {
    let s: f64 = store
        .positions(k)
        .iter()
        .zip(store.weights(k))
        .map(|(&x, &v)| v * f.value(x))
        .sum();
    s / store.n as f64
}

/// `gamma_k(f'' + b f' + Lambda f)`.
fn generator(store: &PathStore, p: &ModelParams, f: &dyn TestFunction, k: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..store.n {
        let x = store.positions(k)[i];
        let v = store.weights(k)[i];
        let b = store.drifts(k)[i];
        let rate = -p.lambda * p.c0 * (-p.lambda * store.hists(k)[i]).exp();
        s += v * (f.d2(x) + b * f.d1(x) + rate * f.value(x));
    }
    s / store.n as f64
}

fn check_store(store: &PathStore) -> Result<usize> {
    let n = store.n_steps_recorded();
    if n < 3 {
        return Err(Error::domain(
            "weak_pide_residual",
            format!("need at least 3 stored steps, got {n}"),
        ));
    }
    Ok(n)
}

/// Central-difference residual of the weak form at interior step `k`.
pub fn weak_pide_residual(store: &PathStore, p: &ModelParams, f: &dyn TestFunction, k: usize) -> Result<f64> {
    let n = check_store(store)?;
    if k == 0 || k + 1 >= n {
        return Err(Error::domain(
            "weak_pide_residual",
            format!("step {k} is not interior to 0..{}", n - 1),
        ));
    }
    let dt = store.grid.dt();
    let dg = (gamma(store, f, k + 1) - gamma(store, f, k - 1)) / (2.0 * dt);
    Ok(dg - generator(store, p, f, k))
}

/// Mean of the pointwise residual over all interior steps. The time
/// differences telescope, so this is the integrated weak form
/// `[gamma(f)]_0^T - int gamma(Lf)` up to end corrections, divided by
/// the interval length.
pub fn weak_pide_residual_avg(store: &PathStore, p: &ModelParams, f: &dyn TestFunction) -> Result<f64> {
    let n = check_store(store)?;
    let mut s = 0.0;
    for k in 1..n - 1 {
        s += weak_pide_residual(store, p, f, k)?;
    }
    Ok(s / (n - 2) as f64)
}

/// `|res_i| / (dt_i + N_i^{-1/2})` for each resolution.
pub fn resolution_constants(residuals: &[f64], dts: &[f64], ns: &[usize]) -> Result<Vec<f64>> {
    if residuals.len() != dts.len() || dts.len() != ns.len() {
        return Err(Error::Mismatch("resolution table columns differ in length".into()));
    }
    Ok(residuals
        .iter()
        .zip(dts)
        .zip(ns)
        .map(|((r, dt), &n)| r.abs() / (dt + 1.0 / (n as f64).sqrt()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One pass/fail line: `value <= bound + tolerance`, or a two-sided
/// interval check when `lower` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        let ok = value <= bound + tolerance;
        Self::make(name, value, bound, None, tolerance, ok)
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        let ok = value >= lower && value <= upper;
        Self::make(name, value, upper, Some(lower), 0.0, ok)
    }

    /// A boolean property; `value` is the number of violations.
    pub fn holds(name: impl Into<String>, violations: usize) -> Self {
        Self::make(name, violations as f64, 0.0, None, 0.0, violations == 0)
    }

    fn make(name: impl Into<String>, value: f64, bound: f64, lower: Option<f64>, tolerance: f64, ok: bool) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            lower,
            tolerance,
            verdict: if ok && !value.is_nan() { Verdict::Pass } else { Verdict::Fail },
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub n: usize,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<SlopeFit>,
    pub checks: Vec<Check>,
}

impl StudyResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

/// True when `v` is strictly decreasing.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_laws_recover_exponent() {
        let ns = [50, 100, 200, 400, 800];
        let e1: Vec<f64> = ns.iter().map(|&n| 7.0 / n as f64).collect();
        let e2: Vec<f64> = ns.iter().map(|&n| 3.0 / (n as f64).sqrt()).collect();
        assert!((chaos_slope(&ns, &e1).unwrap().slope + 1.0).abs() < 1e-3);
        assert!((chaos_slope(&ns, &e2).unwrap().slope + 0.5).abs() < 1e-3);
        assert!(chaos_slope(&[50, 100, 200], &e1[..3]).is_err());
        assert!(chaos_slope(&[50, 60, 70, 80], &e1[..4]).is_err());
        assert!(chaos_slope(&ns, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn test_function_derivatives() {
        let fs = [
            SmoothFn::Gaussian { center: 0.3, width: 0.7 },
            SmoothFn::Cosine { freq: 1.3, phase: 0.2 },
        ];
        let h = 1e-4;
        for f in fs {
            for i in 0..50 {
                let x = -2.0 + i as f64 * 0.08;
                let d1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
                let d2 = (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
                assert!((d1 - f.d1(x)).abs() < 1e-7);
                assert!((d2 - f.d2(x)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn dictionary_is_bounded_and_large() {
        let d = TestFunctionDictionary::standard(1.0);
        assert_eq!(d.len(), 20);
        let g = TimeGrid::new(1.0, 10).unwrap();
        let wild: Vec<f64> = (0..11).map(|k| (k as f64 - 5.0) * 40.0).collect();
        for f in &d.members {
            assert!(f.eval(&wild, &g).unwrap().abs() <= 1.0);
        }
    }

    #[test]
    fn check_verdicts() {
        assert!(Check::at_most("a", 1.0, 1.0, 0.0).passed());
        assert!(!Check::at_most("a", 1.1, 1.0, 0.05).passed());
        assert!(Check::within("b", 4.0, 3.0, 5.0).passed());
        assert!(!Check::within("b", f64::NAN, 3.0, 5.0).passed());
        assert!(!Check::holds("c", 2).passed());
    }
}
