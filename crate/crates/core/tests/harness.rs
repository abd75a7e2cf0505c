use gradgraph::grid::{GridSpec, ScalarField};
use gradgraph::harness::{
    liouville_with, minimize_volume, quadratic_fit, run, run_bernstein_sweep, run_harnack, run_rotation_check,
    run_theorem4_check, ExperimentConfig, Potential,
};
use gradgraph::phase::volume;
use gradgraph::smallmat::SmallMat;
use gradgraph::Error;
use proptest::prelude::*;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

#[test]
fn minimize_examples() {
    let (u, r) = minimize_volume(&cfg("points_per_axis = 21")).unwrap();
    assert_eq!(r.get("descent.steps").as_deref(), Some("0"));
    assert!(r.passed());
    let (w, r) = minimize_volume(&cfg("points_per_axis = 21\nwarm_start = bump\nbump_amplitude = 0.2")).unwrap();
    assert!(r.passed(), "{}", r.render());
    let diff = u.values.iter().zip(&w.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-6);

    // Minimality among graphs sharing the boundary data.
    let c = cfg("points_per_axis = 21\neta = 0.01\nshape_center = 1, 0");
    let (u, _) = minimize_volume(&c).unwrap();
    let mask = c.mask(&u.spec);
    let f0 = volume(&u, &mask).unwrap();
    for eps in [0.01, -0.01] {
        let mut v = u.clone();
        for k in mask.interior() {
            let x = u.spec.coords(k);
            v.values[k] += eps * (-(x[0] * x[0] + x[1] * x[1]) / 0.2).exp();
        }
        assert!(volume(&v, &mask).unwrap() >= f0);
    }
}

#[test]
fn quartic_fit_matches_one_dimensional_oracle() {
    let spec = GridSpec::<f64>::centered(2, 33, 1.0).unwrap();
    let u = ScalarField::from_fn(&spec, |x| x[0].powi(4));
    let pts: Vec<usize> = (0..spec.len()).collect();
    let fit = quadratic_fit(&u, &pts).unwrap();
    // On symmetric nodes the best fit of x⁴ is a + c·x²; solve the 2×2 normal equations.
    let xs: Vec<f64> = (0..33).map(|i| -1.0 + i as f64 / 16.0).collect();
    let m = |p: i32| xs.iter().map(|x| x.powi(p)).sum::<f64>();
    let (s0, s2, s4, s6) = (m(0), m(2), m(4), m(6));
    let det = s0 * s4 - s2 * s2;
    let a = (s4 * s4 - s2 * s6) / det;
    let c = (s0 * s6 - s2 * s4) / det;
    let oracle = xs.iter().map(|x| (x.powi(4) - a - c * x * x).abs()).fold(0.0, f64::max);
    assert!((fit.max_deviation - oracle).abs() < 1e-10);
    assert!(fit.max_deviation > 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_absorbs_added_quadratics(c in prop::collection::vec(-5.0f64..5.0, 6)) {
        let spec = GridSpec::<f64>::centered(2, 17, 1.0).unwrap();
        let u = ScalarField::from_fn(&spec, |x| (2.0 * x[0]).sin() * x[1].exp());
        let v = ScalarField::from_fn(&spec, |x| {
            u.values[spec.flat(&[
                ((x[0] + 1.0) * 8.0).round() as usize,
                ((x[1] + 1.0) * 8.0).round() as usize,
            ])] + c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]
        });
        let pts: Vec<usize> = (0..spec.len()).collect();
        let a = quadratic_fit(&u, &pts).unwrap().max_deviation;
        let b = quadratic_fit(&v, &pts).unwrap().max_deviation;
        prop_assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn bernstein_examples() {
    let r = run_bernstein_sweep(&cfg("eta = 0")).unwrap();
    assert!(r.passed(), "{}", r.render());
    assert!(r.check("deviation_R8").unwrap().value <= 1e-6);

    let r = run_bernstein_sweep(&cfg("eta = 0.01\nshape = fourier\nwavevector = 2, 1")).unwrap();
    assert!(r.passed(), "{}", r.render());
    assert_eq!(r.get("bernstein.R8.phase_persists").as_deref(), Some("true"));

    let low = cfg("quad = -1, 0, 0.5\neta = 0.01");
    assert!(matches!(run_bernstein_sweep(&low), Err(Error::Config(m)) if m.contains("phase precondition")));
    let strict = cfg("delta = 2.0");
    assert!(matches!(run_bernstein_sweep(&strict), Err(Error::Config(_))));
}

#[test]
fn liouville_examples() {
    let c = cfg("half_width = 4\npoints_per_axis = 33\ny_points = 65");
    let zero = liouville_with(&c, &Potential::zero(2)).unwrap();
    assert!(zero.report.passed());
    let (d, b) = (zero.decay.unwrap(), zero.baseline.unwrap());
    for (x, y) in d.levels.iter().zip(&b.levels) {
        assert_eq!(x.ratio, y.ratio);
    }

    let para = liouville_with(&c, &Potential::quadratic(SmallMat::identity(2)).unwrap()).unwrap();
    let (d, b) = (para.decay.unwrap(), para.baseline.unwrap());
    for (x, y) in d.levels.iter().zip(&b.levels) {
        assert!((x.ratio - y.ratio).abs() <= 1e-8);
    }

    let bump = cfg("half_width = 4\npoints_per_axis = 33\ny_points = 65\neta = 0.1\nshape = gaussian\nm = auto");
    let r = run("liouville", &bump).unwrap();
    assert!(r.passed(), "{}", r.render());
}

#[test]
fn liouville_halts_on_failed_certificate() {
    let c = cfg("half_width = 2\npoints_per_axis = 17\ny_points = 17\nradii = 2, 4\nquad = -2, 0, 1\nm = 1");
    let r = run("liouville", &c).unwrap();
    assert!(!r.passed());
    assert!(r.tables().is_empty());
    assert_eq!(r.get("certificate.pass").as_deref(), Some("false"));
}

#[test]
fn rotation_check_examples() {
    let r = run_rotation_check(&cfg("quad = 0, 0, 0\nm = 0.5")).unwrap();
    assert!(r.passed());
    let r = run_rotation_check(&cfg("quad = 10, 0, 10\nm = 0")).unwrap();
    assert!(r.passed());
    let b: f64 = r.get("certificate.worst_b_max").unwrap().split(' ').next().unwrap().parse().unwrap();
    let oracle = 10.0 / (std::f64::consts::FRAC_PI_4.cos() + 10.0 * std::f64::consts::FRAC_PI_4.sin());
    assert!((b - oracle).abs() < 1e-9);
    let r = run_rotation_check(&cfg("quad = -2, 0, 1\nm = 1")).unwrap();
    assert!(!r.passed());
    assert!(!r.check("semiconvex").unwrap().pass);
    assert!(r.get("certificate.worst_hessian_min").unwrap().contains('@'));
}

#[test]
fn hessian_functional_examples() {
    let r = run_theorem4_check(&cfg("points_per_axis = 17\nquad = 1, 0.2, 0.7")).unwrap();
    assert!(r.passed(), "{}", r.render());
    assert_eq!(r.checks().len(), 7);
    let r = run_theorem4_check(&cfg("eta = 0.2\nshape = gaussian\nfunctional = phase")).unwrap();
    assert!(r.check("phase_equals_hamstat").unwrap().pass);
    let r = run_theorem4_check(&cfg("quad = -1, 0, 1\nfunctional = logdet")).unwrap();
    assert!(!r.passed());
    assert!(r.get("theorem4.logdet.error").is_some());
}

#[test]
fn harnack_needs_seed_and_is_deterministic() {
    assert!(matches!(run_harnack(&cfg("trials = 3")), Err(Error::Config(_))));
    let c = cfg("trials = 5\nseed = 11");
    let a = run("harnack", &c).unwrap();
    let b = run("harnack", &c).unwrap();
    assert!(a.passed(), "{}", a.render());
    assert_eq!(a.render_deterministic(), b.render_deterministic());
    assert_eq!(a.tables(), b.tables());
}

#[test]
fn reports_are_deterministic_and_tagged() {
    let c = cfg("eta = 0.05\nshape_center = 1, 0\npoints_per_axis = 17");
    let a = run("minimize", &c).unwrap();
    let b = run("minimize", &c).unwrap();
    assert_eq!(a.render_deterministic(), b.render_deterministic());
    for line in a.render().lines().filter(|l| l.starts_with("metric.")) {
        assert!(line.contains("[tol: "), "{line}");
    }
    assert!(run("nonsense", &c).is_err());
}
