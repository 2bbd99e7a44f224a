use mkfk_core::accum::PathAccumulators;
use mkfk_core::field::FieldSlice;
use mkfk_core::kernel::KernelSpec;
use mkfk_core::killing::{calcite_along_path, drift_b, drift_bound, lambda_fn, v_weight};
use mkfk_core::params::ModelParams;
use mkfk_core::verify::{drift_checks, kernel_certificate, killing_lemmas};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..3.0f64, 0.1..2.0f64, 0.05..0.9f64, -0.5..0.5f64).prop_filter_map("admissible", |(l, c0, phi0, phi1)| {
        ModelParams::new(l, c0, phi0, phi1, 1.0).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_bounds_hold(eps in 0.01..3.0f64, y in -20.0..20.0f64, dy in -1.0..1.0f64) {
        let k = KernelSpec::gaussian(eps).unwrap();
        let (v, g) = k.eval_with_grad(y);
        prop_assert!(v >= 0.0 && v <= k.sup_bound());
        prop_assert!(g.abs() <= k.grad_bound() * (1.0 + 1e-12));
        let y2 = y + dy * eps;
        prop_assert!((v - k.eval(y2)).abs() <= k.lipschitz() * (y - y2).abs() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn rate_and_weight_bounded(p in params(), a in 0.0..50.0f64, b in 0.0..50.0f64) {
        let r = lambda_fn(&p, a).unwrap();
        prop_assert!(r <= 0.0 && r >= -p.lambda * p.c0);
        let v = v_weight(&p, b).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        let c = calcite_along_path(&p, a).unwrap();
        prop_assert!(c > 0.0 && c <= p.c0);
    }

    #[test]
    fn drift_within_running_bound(p in params(), eps in 0.1..2.0f64, a in 0.0..5.0f64, s in -1.0..1.0f64, t in 0.0..1.0f64) {
        let k = KernelSpec::gaussian(eps).unwrap();
        let g = s * k.grad_bound() * t;
        let b = drift_b(&p, a, g).unwrap();
        prop_assert!(b.abs() <= drift_bound(&p, &k, t) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn accumulators_stay_ordered(p in params(), us in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 1..60)) {
        let mut a = PathAccumulators::default();
        let dt = 0.01;
        for (k, (u, g)) in us.iter().enumerate() {
            let prev = a;
            a.advance(&p, *u, *g, dt);
            prop_assert!(a.hist >= prev.hist && a.kill >= prev.kill);
            prop_assert!(a.weight <= prev.weight && a.weight > 0.0);
            prop_assert!(a.kill <= (k + 1) as f64 * dt * (1.0 + 1e-12));
            prop_assert!((a.weight - v_weight(&p, a.kill).unwrap()).abs() == 0.0);
        }
    }

    #[test]
    fn slices_are_order_free(atoms in prop::collection::vec((-5.0..5.0f64, 0.01..1.0f64), 1..80), y in -6.0..6.0f64, rot in 0usize..80) {
        let k = KernelSpec::gaussian(0.3).unwrap();
        let mut shuffled = atoms.clone();
        let r = rot % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        let a = FieldSlice::new(atoms);
        let b = FieldSlice::new(shuffled);
        prop_assert_eq!(a.eval(&k, y), b.eval(&k, y));
        prop_assert_eq!(a.eval(&k, y), a.eval_brute(&k, y));
    }
}

#[test]
fn spec_hand_values() {
    let p = ModelParams::new(1.0, 2.0, 0.5, 0.1, 1.0).unwrap();
    assert!((v_weight(&p, 0.5).unwrap() - (-1f64).exp()).abs() < 1e-15);
    let p = ModelParams::new(2.0, 1.0, 0.5, 0.1, 1.0).unwrap();
    assert!((calcite_along_path(&p, 0.5).unwrap() - (-1f64).exp()).abs() < 1e-15);
    let p = ModelParams::new(1.0, 1.0, 0.1, 0.1, 1.0).unwrap();
    assert!((drift_b(&p, 0.0, 1.0).unwrap() + 0.5).abs() < 1e-15);
    let flat = ModelParams::new(1.0, 1.0, 0.5, 0.0, 1.0).unwrap();
    assert_eq!(drift_b(&flat, 0.3, 2.0).unwrap(), 0.0);
}

#[test]
fn constant_field_calcite_matches_ode() {
    let p = ModelParams::new(0.7, 1.3, 0.5, 0.1, 1.0).unwrap();
    let (u, t) = (0.4, 0.9);
    let c = calcite_along_path(&p, u * t).unwrap();
    assert!((c - 1.3 * (-0.7 * u * t as f64).exp()).abs() < 1e-15);
}

#[test]
fn sampled_certificates() {
    for eps in [0.05, 0.3, 1.0] {
        let k = KernelSpec::gaussian(eps).unwrap();
        for c in kernel_certificate(&k, 20_000, 9) {
            assert!(c.passed(), "{c:?}");
        }
        for p in [
            ModelParams::default(),
            ModelParams::new(2.5, 0.7, 0.2, -0.2, 1.0).unwrap(),
        ] {
            for c in killing_lemmas(&p, 5_000, 4).unwrap().into_iter().chain(drift_checks(&p, &k, 5_000, 5).unwrap()) {
                assert!(c.passed(), "{c:?}");
            }
        }
    }
}
