use gradgraph::elliptic::assemble;
use gradgraph::grid::{DomainMask, GridSpec};
use gradgraph::harness::{rotated_metric, Potential, Shape};
use gradgraph::phase::MetricField;
use gradgraph::rotation::RotationParams;
use gradgraph::smallmat::{eig_sym, SmallMat};
use proptest::prelude::*;

/// Eigenvalues of `√det g · g⁻¹` for a metric with eigenvalues in `[1, U]`
/// lie in `[U^{−1/2}, U^{(n−1)/2}]`.
fn coefficient_bounds(g: &SmallMat<f64>, upper: f64) -> (f64, f64, f64, f64) {
    let n = g.dim() as f64;
    let a = g.inverse().unwrap().scale(g.det().sqrt());
    let e = eig_sym(&a.symmetrized()).unwrap();
    (e.min(), e.max(), upper.powf(-0.5), upper.powf((n - 1.0) / 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotated_metric_is_certified(
        m in 0.0f64..2.0,
        q in prop::collection::vec(-1.0f64..1.0, 3),
        amp in -0.3f64..0.3,
        cx in -1.0f64..1.0,
    ) {
        let quad = SmallMat::from_packed(2, &q);
        let p = Potential::quadratic(quad).unwrap()
            .with_term(amp, Shape::Gaussian { center: vec![cx, 0.0], width: 1.0 }).unwrap();
        let lb = p.hessian_lower_bound().unwrap();
        let mm = m.max(-lb).max(0.0) + 1e-6;
        let params = RotationParams::derive(mm, 2).unwrap();
        let spec = GridSpec::centered(2, 17, 4.0).unwrap();
        let (g, cert) = rotated_metric(&p, &params, &spec).unwrap();
        prop_assert!(cert.pass);
        for k in 0..spec.len() {
            let (lo, hi, blo, bhi) = coefficient_bounds(&g.g.at(k), params.metric_upper);
            prop_assert!(lo >= blo * (1.0 - 1e-10) && hi <= bhi * (1.0 + 1e-10));
        }
        let mask = DomainMask::ball(&spec, &[0.0, 0.0], 4.0);
        let op = assemble(&g, &mask).unwrap();
        prop_assert!(op.ellipticity_ratio() >= 1.0 / params.metric_upper - 1e-12);
    }
}

#[test]
fn coefficient_bounds_by_dimension() {
    let u = 3.0f64;
    for n in 2..=4 {
        // Extremes: one eigenvalue at U and the rest at 1, and the reverse.
        let mut d1 = vec![1.0; n];
        d1[0] = u;
        let mut d2 = vec![u; n];
        d2[0] = 1.0;
        for d in [d1, d2] {
            let g = SmallMat::diag(&d);
            let (lo, hi, blo, bhi) = coefficient_bounds(&g, u);
            assert!(lo >= blo - 1e-12 && hi <= bhi + 1e-12);
            let loose_lo = u.powf((n as f64 - 4.0) / 2.0);
            let loose_hi = u.powf(n as f64 / 2.0);
            if n <= 3 {
                assert!(lo >= loose_lo - 1e-12 && hi <= loose_hi + 1e-12);
            }
        }
    }
    // n = 4: g = diag(U, 1, 1, 1) has coefficient eigenvalue U^{−1/2} < 1.
    let g = SmallMat::diag(&[u, 1.0, 1.0, 1.0]);
    let (lo, ..) = coefficient_bounds(&g, u);
    assert!(lo < 1.0);
}

#[test]
fn flat_potential_gives_identity_metric() {
    let spec = GridSpec::<f64>::centered(2, 9, 2.0).unwrap();
    let params = RotationParams::derive(0.0, 2).unwrap();
    let (g, cert) = rotated_metric(&Potential::zero(2), &params, &spec).unwrap();
    assert!(cert.pass);
    let flat = MetricField::constant(&spec, &SmallMat::identity(2)).unwrap();
    assert_eq!(g.g, flat.g);
}

#[test]
fn rotation_map_is_injective_on_the_grid() {
    use gradgraph::grid::ScalarField;
    use gradgraph::rotation::{apply_rotation, auto_params, certify};
    let spec = GridSpec::<f64>::centered(2, 17, 2.0).unwrap();
    let u = ScalarField::from_fn(&spec, |x| 0.5 * (x[0] * x[0] - 0.5 * x[1] * x[1]) + 0.2 * (x[0] * x[1]).sin());
    let mask = DomainMask::full_box(&spec);
    let params = auto_params(&u, &mask).unwrap();
    assert!(params.m > 1.0);
    assert!(certify(&u, &mask, &params).unwrap().pass);
    let (t, _) = apply_rotation(&u, &params).unwrap();
    let min_sep = spec.h() * params.c_lower / 2.0;
    for a in 0..spec.len() {
        for b in (a + 1)..spec.len() {
            let (ta, tb) = (t.at(a), t.at(b));
            let d = ((ta[0] - tb[0]).powi(2) + (ta[1] - tb[1]).powi(2)).sqrt();
            assert!(d > min_sep, "points {a} and {b} map {d} apart");
        }
    }
}

#[test]
fn scalar_lipschitz_map_is_increasing_with_supremum() {
    for (m, n) in [(0.0, 2), (1.0, 2), (0.5, 3), (2.0, 4)] {
        let p = RotationParams::<f64>::derive(m, n).unwrap();
        let (c, s) = (p.cos_a(), p.sin_a());
        let f = |t: f64| t / (c + s * t);
        let lo = -m;
        let mut prev = f(lo);
        for i in 1..10_000 {
            let t = lo + i as f64 * 1e-2;
            let v = f(t);
            assert!(v > prev && v < p.m0);
            prev = v;
        }
    }
}

#[test]
fn c_lower_decreases_in_m() {
    let mut prev = RotationParams::<f64>::derive(0.0, 2).unwrap().c_lower;
    assert!((prev - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    for i in 1..200 {
        let c = RotationParams::<f64>::derive(i as f64 * 0.05, 2).unwrap().c_lower;
        assert!(c < prev);
        prev = c;
    }
}
