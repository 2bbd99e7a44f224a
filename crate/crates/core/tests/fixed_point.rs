use mkfk_core::fk::{apply_map, contraction_estimate, fk_solve, restrict_and_resolve, FkOptions, NormWeight, Quadrature};
use mkfk_core::grid::TimeGrid;
use mkfk_core::kernel::KernelSpec;
use mkfk_core::params::ModelParams;
use mkfk_core::paths::PathEnsemble;
use mkfk_core::verify::{along_paths, brownian_ensemble, field_bound_checks, picard_checks, weighted_distance};

fn params(lambda: f64) -> ModelParams {
    ModelParams::new(lambda, 1.0, 0.5, 0.3, 1.0).unwrap()
}

/// RK4 for `z = M_K exp(-lambda c0 B)`, `A' = z`, `B' = exp(-lambda A)`.
fn scalar_oracle(p: &ModelParams, m_k: f64, n: usize) -> Vec<f64> {
    let rhs = |s: [f64; 2]| {
        let z = m_k * (-p.lambda * p.c0 * s[1]).exp();
        [z, (-p.lambda * s[0]).exp()]
    };
    let h = 1.0 / n as f64;
    let mut s = [0.0, 0.0];
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        out.push(m_k * (-p.lambda * p.c0 * s[1]).exp());
        let k1 = rhs(s);
        let k2 = rhs([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([s[0] + h * k3[0], s[1] + h * k3[1]]);
        for j in 0..2 {
            s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    out
}

#[test]
fn single_frozen_path_matches_scalar_ode() {
    let p = params(1.0);
    let k = KernelSpec::gaussian(1.0).unwrap();
    let oracle = scalar_oracle(&p, k.sup_bound(), 10_000);
    for (n, quad, tol) in [(1000, Quadrature::Trapezoid, 1e-6), (10_000, Quadrature::Left, 1e-4)] {
        let g = TimeGrid::new(1.0, n).unwrap();
        let paths = PathEnsemble::from_flat(g, 1, vec![0.0; n + 1]).unwrap();
        let opts = FkOptions {
            quadrature: quad,
            ..Default::default()
        };
        let (f, rep) = fk_solve(&paths, &k, &p, &opts).unwrap();
        assert!(rep.converged);
        let stride = 10_000 / n;
        for step in 0..=n {
            let z = oracle[step * stride];
            assert!(((f.eval_step(step, 0.0).0 - z) / z).abs() < tol, "{quad:?} step {step}");
        }
    }
}

#[test]
fn zero_rate_has_unit_weights_and_exact_restriction() {
    let g = TimeGrid::new(1.0, 200).unwrap();
    let paths = brownian_ensemble(g, 16, 3).unwrap();
    let k = KernelSpec::gaussian(0.4).unwrap();
    let p = params(0.0);
    let (f, rep) = fk_solve(&paths, &k, &p, &FkOptions::default()).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(contraction_estimate(&rep).unwrap(), 0.0);
    let (fh, _) = restrict_and_resolve(&paths, 0.5, &k, &p, &FkOptions::default()).unwrap();
    for step in 0..=100 {
        assert_eq!(fh.slice(step), f.slice(step));
    }
}

#[test]
fn full_cut_is_identity() {
    let g = TimeGrid::new(1.0, 100).unwrap();
    let paths = brownian_ensemble(g, 8, 4).unwrap();
    let k = KernelSpec::gaussian(0.5).unwrap();
    let p = params(1.0);
    let (a, _) = fk_solve(&paths, &k, &p, &FkOptions::default()).unwrap();
    let (b, _) = restrict_and_resolve(&paths, 1.0, &k, &p, &FkOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn brownian_ensemble_probe() {
    let g = TimeGrid::new(1.0, 1000).unwrap();
    let paths = brownian_ensemble(g, 32, 11).unwrap();
    let k = KernelSpec::gaussian(0.5).unwrap();
    let p = params(1.0);
    let probe = picard_checks(&paths, &k, &p, &FkOptions::default()).unwrap();
    for c in &probe.checks {
        assert!(c.passed(), "{c:?}");
    }
}

#[test]
fn fixed_point_is_stable_under_one_more_sweep() {
    let g = TimeGrid::new(1.0, 300).unwrap();
    let paths = brownian_ensemble(g, 24, 12).unwrap();
    let k = KernelSpec::gaussian(0.4).unwrap();
    let p = params(1.5);
    let opts = FkOptions::default();
    let (f, rep) = fk_solve(&paths, &k, &p, &opts).unwrap();
    assert!(rep.converged);
    let z = along_paths(&f, &paths, 300);
    let flat: Vec<f64> = z.concat();
    let again = apply_map(&paths, &k, &p, opts.quadrature, &flat).unwrap();
    let z2: Vec<Vec<f64>> = again.chunks(24).map(|c| c.to_vec()).collect();
    assert!(weighted_distance(&z, &z2, rep.norm_weight, g.dt()) < 2.0 * opts.tol);
    let ys: Vec<f64> = (0..200).map(|i| -5.0 + i as f64 * 0.05).collect();
    for c in field_bound_checks(&f, &ys) {
        assert!(c.passed(), "{c:?}");
    }
}

#[test]
fn larger_norm_weight_shrinks_sweep_bound() {
    let g = TimeGrid::new(1.0, 200).unwrap();
    let paths = brownian_ensemble(g, 16, 13).unwrap();
    let k = KernelSpec::gaussian(0.5).unwrap();
    let p = params(1.0);
    let run = |m: f64| {
        fk_solve(
            &paths,
            &k,
            &p,
            &FkOptions {
                norm_weight: NormWeight::Fixed(m),
                ..Default::default()
            },
        )
        .unwrap()
        .1
    };
    let (a, b) = (run(2.0), run(4.0));
    assert!((b.sweep_bound - 0.5 * a.sweep_bound).abs() < 1e-12);
    assert!(a.converged && b.converged);
    assert!(contraction_estimate(&a).unwrap() < 1.0);
}

/// Field difference between solves on coupled ensembles, as a function of
/// the coupling distance: finite, nondecreasing in time, quadratic scale.
#[test]
fn stability_in_measure_has_the_right_shape() {
    let g = TimeGrid::new(1.0, 200).unwrap();
    let base = brownian_ensemble(g, 24, 21).unwrap();
    let k = KernelSpec::gaussian(0.5).unwrap();
    let p = params(1.0);
    let shift = |d: f64| {
        let data: Vec<f64> = base
            .paths()
            .enumerate()
            .flat_map(|(q, path)| {
                path.iter()
                    .enumerate()
                    .map(move |(s, x)| x + d * ((q as f64) * 0.7 + s as f64 * 0.01).sin())
                    .collect::<Vec<_>>()
            })
            .collect();
        PathEnsemble::from_flat(g, 24, data).unwrap()
    };
    let (f0, _) = fk_solve(&base, &k, &p, &FkOptions::default()).unwrap();
    let ys: Vec<f64> = (0..161).map(|i| -4.0 + i as f64 * 0.05).collect();
    let mut ratios = Vec::new();
    for d in [0.02, 0.01] {
        let (f1, _) = fk_solve(&shift(d), &k, &p, &FkOptions::default()).unwrap();
        let mut running: f64 = 0.0;
        let mut c_t = Vec::new();
        for step in 0..=200 {
            let (a, _) = f0.profile(step, &ys);
            let (b, _) = f1.profile(step, &ys);
            let sup = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            running = running.max(sup * sup);
            c_t.push(running / (d * d));
        }
        assert!(c_t.iter().all(|c| c.is_finite()));
        assert!(c_t.windows(2).all(|w| w[1] >= w[0]));
        ratios.push(*c_t.last().unwrap());
    }
    // quadratic scaling: the normalised constant barely moves when d halves
    assert!((ratios[0] / ratios[1] - 1.0).abs() < 0.1, "{ratios:?}");
}
