//! Sampled property checks: kernel certificate, killing lemmas, drift
//! bounds, fixed-point behaviour, field bounds and PDE structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::FKField;
use crate::fk::{contraction_estimate, fk_solve, restrict_and_resolve, FkOptions, InitialIterate};
use crate::grid::TimeGrid;
use crate::kernel::KernelSpec;
use crate::killing::{drift_b, drift_bound, drift_lipschitz, lambda_fn, v_weight};
use crate::metrics::Check;
use crate::noise::NoiseSource;
use crate::params::ModelParams;
use crate::paths::PathEnsemble;
use crate::pde::PdeRun;

/// Rounding slack on sampled inequalities.
pub const SLACK: f64 = 1e-12;

/// Mass by quadrature, then sampled bound, gradient and Lipschitz checks.
pub fn kernel_certificate(k: &KernelSpec, samples: usize, seed: u64) -> Vec<Check> {
    let h = 1e-3 * k.eps();
    let n = (k.r_cut() / h).round() as i64;
    // trapezoid on [-r_cut, r_cut]; K vanishes at both ends
    let mass: f64 = (-n..=n).map(|i| k.eval(i as f64 * h)).sum::<f64>() * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 1.5 * k.r_cut();
    let (mut bad_sup, mut bad_grad, mut bad_lip, mut bad_sign) = (0, 0, 0, 0);
    for _ in 0..samples {
        let y = rng.random_range(-reach..reach);
        let y2 = y + rng.random_range(-k.eps()..k.eps());
        let (v, g) = k.eval_with_grad(y);
        if v.abs() > k.sup_bound() * (1.0 + SLACK) {
            bad_sup += 1;
        }
        if v < 0.0 {
            bad_sign += 1;
        }
        if g.abs() > k.grad_bound() * (1.0 + SLACK) {
            bad_grad += 1;
        }
        if (v - k.eval(y2)).abs() > k.lipschitz() * (y - y2).abs() * (1.0 + SLACK) + 1e-300 {
            bad_lip += 1;
        }
    }
    vec![
        Check::at_most("kernel mass error", (mass - 1.0).abs(), 1e-6, 0.0),
        Check::holds("kernel sup bound", bad_sup),
        Check::holds("kernel nonnegative", bad_sign),
        Check::holds("kernel gradient bound", bad_grad),
        Check::holds("kernel Lipschitz bound", bad_lip),
    ]
}

/// Bounds and Lipschitz inequalities of the killing rate and weight on
/// random accumulator pairs. Each check's value is the worst slack
/// `bound - lhs`, which must stay above `-SLACK`.
pub fn killing_lemmas(p: &ModelParams, pairs: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = 5.0 * p.horizon.max(1.0);
    let lc = p.lambda * p.c0;
    let (mut s_rate, mut s_weight, mut s_rate_lip, mut s_weight_lip) =
        (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut weight_range = 0;
    for _ in 0..pairs {
        let (a, a2) = (rng.random_range(0.0..top), rng.random_range(0.0..top));
        let (b, b2) = (rng.random_range(0.0..top), rng.random_range(0.0..top));
        let (r, r2) = (lambda_fn(p, a)?, lambda_fn(p, a2)?);
        let (v, v2) = (v_weight(p, b)?, v_weight(p, b2)?);
        s_rate = s_rate.min(lc - r.abs());
        s_weight = s_weight.min(1.0 - v);
        if !(v > 0.0) {
            weight_range += 1;
        }
        s_rate_lip = s_rate_lip.min(p.lambda * lc * (a - a2).abs() - (r - r2).abs());
        s_weight_lip = s_weight_lip.min(lc * (b - b2).abs() - (v - v2).abs());
    }
    Ok(vec![
        Check::at_most("killing rate bound slack", -s_rate, SLACK, 0.0),
        Check::at_most("weight at most one slack", -s_weight, SLACK, 0.0),
        Check::holds("weight positive", weight_range),
        Check::at_most("killing rate Lipschitz slack", -s_rate_lip, SLACK, 0.0),
        Check::at_most("weight Lipschitz slack", -s_weight_lip, SLACK, 0.0),
    ])
}

/// Drift boundedness and Lipschitz continuity on the box
/// `A >= 0, |G| <= M_K' T`.
pub fn drift_checks(p: &ModelParams, k: &KernelSpec, pairs: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = p.horizon;
    let g_top = k.grad_bound() * t;
    let a_top = k.sup_bound() * t;
    let bound = drift_bound(p, k, t);
    let (l_hist, l_grad) = drift_lipschitz(p, k, t);
    let (mut bad_bound, mut bad_lip) = (0, 0);
    for _ in 0..pairs {
        let (a, a2) = (rng.random_range(0.0..=a_top), rng.random_range(0.0..=a_top));
        let (g, g2) = (rng.random_range(-g_top..=g_top), rng.random_range(-g_top..=g_top));
        let (b, b2) = (drift_b(p, a, g)?, drift_b(p, a2, g2)?);
        if b.abs() > bound * (1.0 + SLACK) + 1e-300 {
            bad_bound += 1;
        }
        let lip = l_hist * (a - a2).abs() + l_grad * (g - g2).abs();
        if (b - b2).abs() > lip * (1.0 + 1e-9) + 1e-300 {
            bad_lip += 1;
        }
    }
    Ok(vec![
        Check::holds("drift bound", bad_bound),
        Check::holds("drift Lipschitz bound", bad_lip),
    ])
}

/// `n_paths` Brownian paths from 0 (unit diffusion, `sqrt(2 dt)` steps).
pub fn brownian_ensemble(grid: TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    let noise = NoiseSource::new(seed);
    let sdt = (2.0 * grid.dt()).sqrt();
    let np = grid.n_points();
    let mut data = Vec::with_capacity(n_paths * np);
    for q in 0..n_paths {
        let mut s = noise.stream(q);
        let mut x = 0.0;
        data.push(x);
        for k in 0..grid.n_steps() {
            x += sdt * s.increment(k);
            data.push(x);
        }
    }
    PathEnsemble::from_flat(grid, n_paths, data)
}

/// Field values read along every path, step-major.
pub fn along_paths(field: &FKField, paths: &PathEnsemble, up_to: usize) -> Vec<Vec<f64>> {
    (0..=up_to)
        .map(|k| (0..paths.n_paths()).map(|q| field.eval_step(k, paths.position(q, k)).0).collect())
        .collect()
}

/// `mean_p max_k e^{-M t_k} |a - b|` over the steps present in both.
pub fn weighted_distance(a: &[Vec<f64>], b: &[Vec<f64>], m: f64, dt: f64) -> f64 {
    let steps = a.len().min(b.len());
    let n = a[0].len();
    let mut s = 0.0;
    for q in 0..n {
        let mut mx: f64 = 0.0;
        for k in 0..steps {
            mx = mx.max((-m * k as f64 * dt).exp() * (a[k][q] - b[k][q]).abs());
        }
        s += mx;
    }
    s / n as f64
}

#[derive(Debug, Clone)]
pub struct PicardProbe {
    pub checks: Vec<Check>,
    pub contraction: f64,
    pub iterations: usize,
    pub uniqueness_gap: f64,
    pub anticipation_gap: f64,
}

/// Convergence, contraction, uniqueness from two starting iterates and
/// non-anticipation on `[0, T/2]`.
pub fn picard_checks(paths: &PathEnsemble, k: &KernelSpec, p: &ModelParams, opts: &FkOptions) -> Result<PicardProbe> {
    let (f0, rep) = fk_solve(paths, k, p, opts)?;
    let contraction = contraction_estimate(&rep).unwrap_or(f64::NAN);
    let hi = FkOptions {
        initial: InitialIterate::Constant(k.sup_bound()),
        ..*opts
    };
    let (f1, rep1) = fk_solve(paths, k, p, &hi)?;
    let n = paths.grid().n_steps();
    let dt = paths.grid().dt();
    let z0 = along_paths(&f0, paths, n);
    let z1 = along_paths(&f1, paths, n);
    let uniqueness_gap = weighted_distance(&z0, &z1, rep.norm_weight, dt);
    let half = n / 2;
    let (fh, reph) = restrict_and_resolve(paths, paths.grid().time(half), k, p, opts)?;
    let zh = along_paths(&fh, &paths.truncate(half)?, half);
    let anticipation_gap = weighted_distance(&z0[..=half], &zh, rep.norm_weight, dt);
    let checks = vec![
        Check::holds(
            "picard converged",
            [&rep, &rep1, &reph].iter().filter(|r| !r.converged).count(),
        ),
        Check::at_most("picard contraction factor", contraction, 1.0 - 1e-12, 0.0),
        Check::at_most("picard uniqueness gap", uniqueness_gap, 10.0 * opts.tol, 0.0),
        Check::at_most("non-anticipation gap", anticipation_gap, opts.tol, 0.0),
    ];
    Ok(PicardProbe {
        checks,
        contraction,
        iterations: rep.iterations,
        uniqueness_gap,
        anticipation_gap,
    })
}

/// Field bounds on a `(t, y)` grid: `0 <= u <= M_K`, `|grad u| <= M_K'`
/// and `L_K`-Lipschitz between neighbouring points.
pub fn field_bound_checks(field: &FKField, ys: &[f64]) -> Vec<Check> {
    let k = field.kernel();
    let (mut bad_u, mut bad_g, mut bad_lip) = (0, 0, 0);
    for step in 0..field.grid().n_points() {
        let (u, g) = field.profile(step, ys);
        for j in 0..ys.len() {
            if !(u[j] >= 0.0 && u[j] <= k.sup_bound() * (1.0 + SLACK)) {
                bad_u += 1;
            }
            if !(g[j].abs() <= k.grad_bound() * (1.0 + SLACK)) {
                bad_g += 1;
            }
            if j > 0 && (u[j] - u[j - 1]).abs() > k.lipschitz() * (ys[j] - ys[j - 1]).abs() * (1.0 + 1e-9) + 1e-15 {
                bad_lip += 1;
            }
        }
    }
    vec![
        Check::holds("field value in [0, M_K]", bad_u),
        Check::holds("field gradient bound", bad_g),
        Check::holds("field Lipschitz bound", bad_lip),
    ]
}

/// Monotone calcite, nonnegative density, split-scheme mass balance and,
/// without reaction, exact mass conservation.
pub fn pde_structure_checks(run: &PdeRun, p: &ModelParams, c0: f64) -> Vec<Check> {
    let mut bad_c = 0;
    let mut bad_rho = 0;
    let mut prev: Option<&[f64]> = None;
    for s in &run.snapshots {
        bad_rho += s.rho.iter().filter(|v| !(**v >= 0.0)).count();
        bad_c += s.c.iter().filter(|v| !(**v > 0.0 && **v <= c0)).count();
        if let Some(pc) = prev {
            bad_c += s.c.iter().zip(pc).filter(|(a, b)| a > b).count();
        }
        prev = Some(&s.c);
    }
    let balance = run.balance.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut out = vec![
        Check::holds("calcite monotone in (0, c0]", bad_c),
        Check::holds("density nonnegative", bad_rho),
        Check::at_most("mass balance residual", balance, 1e-8, 0.0),
    ];
    if p.lambda == 0.0 {
        let m0 = run.mass[0];
        let drift = run.mass.iter().fold(0.0, |m: f64, v| m.max((v - m0).abs()));
        out.push(Check::at_most("mass conservation without reaction", drift, 1e-10, 0.0));
    }
    out
}
