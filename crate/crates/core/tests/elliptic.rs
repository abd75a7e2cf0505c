use gradgraph::elliptic::{
    assemble, hamstat_residual, oscillation_decay, oscillation_decay_with, rescale_check, solve_dirichlet,
    DivergenceFormOperator, SolverConfig,
};
use gradgraph::grid::{DomainMask, GridSpec, ScalarField, SymMatrixField};
use gradgraph::harness::{harnack_trial, RandomCoefficients};
use gradgraph::phase::MetricField;
use gradgraph::smallmat::SmallMat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_operator(seed: u64, spec: &GridSpec<f64>, mask: &DomainMask<f64>) -> DivergenceFormOperator<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = RandomCoefficients::sample(&mut rng, spec.n(), 0.2);
    let coeff = SymMatrixField::from_fn(spec, |x| a.at(x));
    DivergenceFormOperator::from_coefficients(coeff, ScalarField::constant(spec, 1.0), mask).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn maximum_principle_and_symmetry(seed in any::<u64>(), c in -5.0f64..5.0) {
        let spec = GridSpec::centered(2, 21, 2.0).unwrap();
        let mask = DomainMask::ball(&spec, &[0.0, 0.0], 2.0);
        let op = random_operator(seed, &spec, &mask);
        for r in 0..op.num_unknowns() {
            for (col, v) in op.row(r) {
                if let Some(rc) = op.unknown_index(col) {
                    prop_assert_eq!(v, op.entry(rc, r));
                }
            }
        }
        let data = ScalarField::from_fn(&spec, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let f = solve_dirichlet(&op, &data, &SolverConfig::default()).unwrap();
        let bd = mask.boundary();
        let lo = bd.iter().map(|&k| data.values[k]).fold(f64::INFINITY, f64::min);
        let hi = bd.iter().map(|&k| data.values[k]).fold(f64::NEG_INFINITY, f64::max);
        for &k in &op.unknowns {
            prop_assert!(f.values[k] >= lo - 1e-10 && f.values[k] <= hi + 1e-10);
        }
        // Constants are annihilated.
        let h2 = spec.h() * spec.h();
        let lc = op.apply(&vec![c; spec.len()]);
        prop_assert!(lc.iter().all(|v| v.abs() <= 1e-12 * c.abs().max(1.0) / h2));
    }
}

#[test]
fn harnack_trials_are_reproducible() {
    assert_eq!(harnack_trial(9, 3, 2, 0.2), harnack_trial(9, 3, 2, 0.2));
    assert_ne!(harnack_trial(9, 3, 2, 0.2), harnack_trial(9, 4, 2, 0.2));
}

#[test]
fn rescaled_flat_problem_matches() {
    let base = GridSpec::<f64>::centered(2, 33, 4.0).unwrap();
    let cfg = SolverConfig::default();
    let one = SolverConfig::default();
    let id = |_: &[f64]| SmallMat::identity(2);
    let bd = |x: &[f64]| x[0] * x[1];
    let r1 = rescale_check(&id, &bd, &base, 4.0, 1.0, &one).unwrap();
    assert_eq!(r1.max_discrepancy, 0.0);
    let r2 = rescale_check(&id, &bd, &base, 4.0, 2.0, &cfg).unwrap();
    assert!(r2.max_discrepancy <= 1e-12, "{}", r2.max_discrepancy);
}

#[test]
fn conformal_constant_metric_matches_flat_decay() {
    let spec = GridSpec::<f64>::centered(2, 65, 8.0).unwrap();
    let radii = [2.0, 4.0, 8.0];
    let cfg = SolverConfig::default();
    let flat = oscillation_decay(&MetricField::constant(&spec, &SmallMat::identity(2)).unwrap(), &radii, &cfg).unwrap();
    for kappa in [2.0, 0.3, 7.5] {
        let g = MetricField::constant(&spec, &SmallMat::scalar(2, kappa)).unwrap();
        let rep = oscillation_decay(&g, &radii, &cfg).unwrap();
        for (a, b) in rep.levels.iter().zip(&flat.levels) {
            assert!((a.ratio - b.ratio).abs() <= 1e-8);
        }
    }
    for l in &flat.levels {
        assert!(l.ratio < 1.0);
    }
}

#[test]
fn operator_scaling_leaves_decay_unchanged() {
    // A constant SPD metric and its operator scaled by a positive constant
    // define the same discrete harmonic functions.
    let spec = GridSpec::<f64>::centered(2, 33, 4.0).unwrap();
    let g = SmallMat::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
    let gm = MetricField::constant(&spec, &g).unwrap();
    let cfg = SolverConfig::default();
    let a = oscillation_decay(&gm, &[2.0, 4.0], &cfg).unwrap();
    let b = oscillation_decay_with(&spec, &[2.0, 4.0], &cfg, |mask| {
        let coeff = SymMatrixField::from_fn(&spec, |_| {
            let s = g.det().sqrt();
            g.inverse().unwrap().scale(3.0 * s)
        });
        DivergenceFormOperator::from_coefficients(coeff, ScalarField::constant(&spec, 1.0), mask)
    })
    .unwrap();
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert!((x.ratio - y.ratio).abs() <= 1e-8);
    }
}

#[test]
fn quartic_hamstat_error_shrinks_under_refinement() {
    // u = x₁⁴: θ = arctan(12x₁²), g = diag(1 + 144x₁⁴, 1), so
    // Δ_g θ = (1/s) d/dx (θ'/s) with s = √(1 + 144x₁⁴).
    let exact = |x: f64| {
        let s = |x: f64| (1.0 + 144.0 * x.powi(4)).sqrt();
        let flux = |x: f64| 24.0 * x / (1.0 + 144.0 * x.powi(4)) / s(x);
        let e = 1e-4;
        (flux(x + e) - flux(x - e)) / (2.0 * e) / s(x)
    };
    let err = |points: usize| {
        let spec = GridSpec::<f64>::centered(2, points, 1.0).unwrap();
        let u = ScalarField::from_fn(&spec, |x| x[0].powi(4));
        let mask = DomainMask::full_box(&spec);
        let res = hamstat_residual(&u, &mask).unwrap();
        mask.interior().into_iter().fold(0.0f64, |m, k| m.max((res.field.values[k] - exact(spec.coord(k, 0))).abs()))
    };
    let (e1, e2) = (err(33), err(65));
    assert!(e1 / e2 >= 2.0, "{e1} {e2}");
}

#[test]
fn assembled_operator_is_negative_definite() {
    let spec = GridSpec::<f64>::centered(2, 13, 1.0).unwrap();
    let mask = DomainMask::full_box(&spec);
    let hs = SymMatrixField::from_fn(&spec, |x| SmallMat::from_rows(&[&[1.0 + x[0], 0.3], &[0.3, 0.5]]));
    let g = gradgraph::phase::induced_metric(&hs).unwrap();
    let op = assemble(&g, &mask).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        use rand::Rng;
        let mut v = vec![0.0; spec.len()];
        for &k in &op.unknowns {
            v[k] = rng.gen_range(-1.0..1.0);
        }
        let lv = op.apply(&v);
        let q: f64 = op.unknowns.iter().zip(&lv).map(|(&k, l)| v[k] * l).sum();
        assert!(q < 0.0);
    }
}
