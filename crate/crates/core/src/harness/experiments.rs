//! Experiment drivers behind the command-line subcommands.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, MSetting, WarmStart};
use super::fit::quadratic_fit;
use super::minimize::{minimize_volume_from, Minimized};
use super::potential::Potential;
use super::report::ExperimentReport;
use crate::elliptic::{
    assemble, ball_points, hamstat_residual, harnack_ratio, history_csv, oscillation, oscillation_decay, patch_sign,
    rescale_check, solve_dirichlet_detailed, DecayReport, DivergenceFormOperator, SolverConfig,
};
use crate::error::{Error, Result};
use crate::grid::{hessian, to_dump_string, DomainMask, GridSpec, ScalarField, SymMatrixField};
use crate::phase::{
    functional_field, induced_metric, phase, phase_of_eigenvalues, phase_semiconvexity_bound, Builtin,
    HessianFunctional, MetricField,
};
use crate::rotation::{apply_rotation, auto_params, certify, certify_hessians, RotationParams, AUTO_MARGIN};
use crate::smallmat::{eig_sym, SmallMat};
use crate::sum::max_abs;

/// Names accepted by [`run`].
pub const EXPERIMENTS: [&str; 7] =
    ["phase", "rotate-check", "minimize", "bernstein", "liouville", "harnack", "theorem4"];

/// Runs the named experiment and stamps the wall-clock time.
pub fn run(name: &str, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match name {
        "phase" => run_phase(cfg)?,
        "rotate-check" => run_rotation_check(cfg)?,
        "minimize" => minimize_volume(cfg)?.1,
        "bernstein" => run_bernstein_sweep(cfg)?,
        "liouville" => run_liouville(cfg)?,
        "harnack" => run_harnack(cfg)?,
        "theorem4" => run_theorem4_check(cfg)?,
        _ => return Err(Error::Config(format!("unknown experiment '{name}'; expected one of {EXPERIMENTS:?}"))),
    };
    report.set_wall_clock(start.elapsed().as_secs_f64());
    Ok(report)
}

fn new_report(name: &str, cfg: &ExperimentConfig) -> ExperimentReport {
    let mut r = ExperimentReport::new(name);
    r.block(&cfg.echo());
    r
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Phase and induced metric of the configured potential.
pub fn run_phase(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut r = new_report("phase", cfg);
    let spec = cfg.grid(cfg.half_width)?;
    let p = cfg.potential()?;
    let u = p.sample(&spec)?;
    let hs = hessian(&u)?;
    let pf = phase(&hs)?;
    let g = induced_metric(&hs)?;
    let (lo, hi) = pf.theta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let mut err = 0.0f64;
    for k in 0..spec.len() {
        let e = eig_sym(&p.hessian(&spec.coords(k)))?;
        err = err.max((phase_of_eigenvalues(e.values()) - pf.theta[k]).abs());
    }
    let bound = cfg.n as f64 * FRAC_PI_2;
    r.metric("metric.theta_min", lo, "informational");
    r.metric("metric.theta_max", hi, "informational");
    r.metric("metric.theta_vs_exact_max_error", err, "O(h^2) stencil error, informational");
    let sdg = &g.sqrt_det_g.values;
    r.metric("metric.sqrt_det_g_min", sdg.iter().copied().fold(f64::INFINITY, f64::min), ">= 1");
    r.check_at_most("theta_sup_norm", lo.abs().max(hi.abs()), bound);
    r.check_at_least("sqrt_det_g_min", sdg.iter().copied().fold(f64::INFINITY, f64::min), 1.0);
    if cfg.dump {
        r.dump("u.dump", to_dump_string(&u));
        r.dump("phase.dump", to_dump_string(&pf));
        r.dump("metric.dump", to_dump_string(&g));
    }
    Ok(r)
}

fn rotation_params(
    cfg: &ExperimentConfig,
    u: &ScalarField<f64>,
    mask: &DomainMask<f64>,
) -> Result<RotationParams<f64>> {
    if let Some(d) = cfg.delta {
        return RotationParams::from_delta(d, cfg.n);
    }
    match cfg.m {
        MSetting::Value(m) => RotationParams::derive(m, cfg.n),
        MSetting::Auto => auto_params(u, mask),
    }
}

/// Rotation parameters, map and certificate for the configured potential.
pub fn run_rotation_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut r = new_report("rotate-check", cfg);
    let spec = cfg.grid(cfg.half_width)?;
    let mask = cfg.mask(&spec);
    let u = cfg.potential()?.sample(&spec)?;
    let params = rotation_params(cfg, &u, &mask)?;
    let (t, dt) = apply_rotation(&u, &params)?;
    let cert = certify(&u, &mask, &params)?;
    r.block(&cert.to_report());
    r.check_flag("semiconvex", cert.semiconvex);
    r.check_flag("dt_lower_bound", cert.dt_ok);
    r.check_flag("lipschitz_bound", cert.lipschitz_ok);
    r.check_flag("metric_bounds", cert.metric_ok);
    if cfg.dump {
        r.dump("T.dump", to_dump_string(&t));
        r.dump("DT.dump", to_dump_string(&dt));
    }
    Ok(r)
}

fn bump(x: &[f64], amplitude: f64, width: f64) -> f64 {
    amplitude * (-x.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp()
}

/// Volume descent on the configured domain.
///
/// Values off the interior come from the configured potential (quadratic plus
/// `eta` times the shape); interior values start at the quadratic, optionally
/// plus a centered bump.
pub fn minimize_volume(cfg: &ExperimentConfig) -> Result<(ScalarField<f64>, ExperimentReport)> {
    let mut r = new_report("minimize", cfg);
    let spec = cfg.grid(cfg.half_width)?;
    let mask = cfg.mask(&spec);
    let q = cfg.quadratic()?;
    let u0 = initial_field(cfg, &spec, &mask, &q, &cfg.potential()?)?;
    let m = minimize_volume_from(u0, &mask, &cfg.descent())?;
    let interior = mask.interior();
    let dev_q = interior.iter().fold(0.0f64, |a, &k| a.max((m.u.values[k] - q.value(&spec.coords(k))).abs()));
    let fit = quadratic_fit(&m.u, &interior)?;
    let res = hamstat_residual(&m.u, &mask)?;
    record_descent(&mut r, &m);
    r.metric("metric.max_deviation_from_q", dev_q, &format!("<= {:e} when eta = 0", cfg.deviation_tol));
    r.metric("metric.fit_deviation", fit.max_deviation, "informational");
    r.metric("metric.hamstat_residual", res.norm, "informational; decreases under refinement");
    r.check_flag("monotone_descent", m.monotone());
    if cfg.eta == 0.0 {
        r.check_at_most("deviation_from_q", dev_q, cfg.deviation_tol);
    }
    r.table("descent", m.history_csv());
    if cfg.dump {
        r.dump("u.dump", to_dump_string(&m.u));
    }
    Ok((m.u, r))
}

fn initial_field(
    cfg: &ExperimentConfig,
    spec: &GridSpec<f64>,
    mask: &DomainMask<f64>,
    q: &Potential,
    boundary: &Potential,
) -> Result<ScalarField<f64>> {
    let mut u = boundary.sample(spec)?;
    for k in mask.interior() {
        let x = spec.coords(k);
        u.values[k] = q.value(&x);
        if cfg.warm_start == WarmStart::Bump {
            u.values[k] += bump(&x, cfg.bump_amplitude, cfg.bump_width);
        }
    }
    Ok(u)
}

fn record_descent(r: &mut ExperimentReport, m: &Minimized) {
    r.text("descent.steps", m.steps);
    r.text("descent.F_initial", sci(m.initial_value));
    r.text("descent.F_final", sci(m.value));
    r.metric("metric.gradient_norm", m.grad_norm, &format!("<= {:e}", m.grad_tol));
}

/// Checks the phase precondition on the quadratic and returns `(θ(q), δ, bound)`.
pub fn phase_precondition(q: &SmallMat<f64>, delta: Option<f64>) -> Result<(f64, f64, f64)> {
    let n = q.dim();
    let e = eig_sym(q)?;
    let theta = phase_of_eigenvalues(e.values());
    let critical = (n as f64 - 2.0) * FRAC_PI_2;
    let delta = delta.unwrap_or(theta - critical);
    let floor = critical + delta;
    if !(delta > 0.0) || theta < floor - 1e-12 {
        return Err(Error::Config(format!(
            "phase precondition failed: theta(q) = {theta:.12} is below (n-2)pi/2 + delta = {floor:.12}"
        )));
    }
    let bound = phase_semiconvexity_bound(floor, n)?;
    if e.min() < bound - 1e-12 {
        return Err(Error::Config(format!(
            "phase precondition failed: lambda_min(q) = {} is below the implied bound {bound}",
            e.min()
        )));
    }
    Ok((theta, delta, bound))
}

/// Growing-ball sweep: minimize with perturbed quadratic boundary data and
/// measure how far the minimizer is from a quadratic on the half ball.
pub fn run_bernstein_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut r = new_report("bernstein", cfg);
    let radii = if cfg.radii.is_empty() { vec![2.0, 4.0, 8.0] } else { cfg.radii.clone() };
    let h = cfg.h.unwrap_or(0.25);
    let q = cfg.quadratic()?;
    let (theta_q, delta, bound) = phase_precondition(&q.hessian_of_quadratic(), cfg.delta)?;
    r.text("bernstein.theta_q", sci(theta_q));
    r.text("bernstein.delta", sci(delta));
    r.text("bernstein.semiconvexity_bound", sci(bound));
    r.text("bernstein.trend_note", "monotone decay in R is an empirical proxy, not a proven rate");
    let boundary = cfg.potential()?;
    let critical = (cfg.n as f64 - 2.0) * FRAC_PI_2;
    let mut table = String::from("R,unknowns,steps,F,grad_norm,theta_min,phase_persists,deviation,hamstat_residual\n");
    let mut devs = Vec::new();
    for &radius in &radii {
        let spec = GridSpec::centered_with_spacing(cfg.n, h, radius)?;
        let center = vec![0.0; cfg.n];
        let mask = DomainMask::ball(&spec, &center, radius);
        let u0 = initial_field(cfg, &spec, &mask, &q, &boundary)?;
        let m = minimize_volume_from(u0, &mask, &cfg.descent())?;
        let hs = hessian(&m.u)?;
        let mut theta_min = f64::INFINITY;
        for k in mask.interior() {
            theta_min = theta_min.min(phase_of_eigenvalues(eig_sym(&hs.at(k))?.values()));
        }
        let persists = theta_min > critical;
        let inner = ball_points(&spec, &center, radius / 2.0);
        let fit = quadratic_fit(&m.u, &inner)?;
        let res = hamstat_residual(&m.u, &mask)?;
        let _ = writeln!(
            table,
            "{radius},{},{},{:.16e},{:.6e},{:.16e},{persists},{:.6e},{:.6e}",
            mask.interior().len(),
            m.steps,
            m.value,
            m.grad_norm,
            theta_min,
            fit.max_deviation,
            res.norm
        );
        r.text(&format!("bernstein.R{radius}.phase_persists"), persists);
        r.metric(&format!("metric.R{radius}.deviation"), fit.max_deviation, "trend / eta = 0 threshold");
        r.metric(&format!("metric.R{radius}.hamstat_residual"), res.norm, "informational");
        devs.push(fit.max_deviation);
    }
    if cfg.eta == 0.0 {
        for (radius, d) in radii.iter().zip(&devs) {
            r.check_at_most(&format!("deviation_R{radius}"), *d, cfg.deviation_tol);
        }
    } else {
        for (w, rs) in devs.windows(2).zip(radii.windows(2)) {
            r.check_at_most(&format!("trend_R{}_over_R{}", rs[1], rs[0]), w[1] / w[0], cfg.trend_factor);
        }
    }
    r.table("sweep", table);
    Ok(r)
}

/// Semiconvexity constant used for a potential: configured, or the larger of
/// the analytic bound and the grid estimate plus a margin.
fn liouville_m(cfg: &ExperimentConfig, p: &Potential, u: &ScalarField<f64>, mask: &DomainMask<f64>) -> Result<f64> {
    Ok(match cfg.m {
        MSetting::Value(m) => m,
        MSetting::Auto => {
            let grid = crate::rotation::estimate_semiconvexity(u, mask)?;
            (-p.hessian_lower_bound()?).max(grid).max(0.0) + AUTO_MARGIN
        }
    })
}

/// Metric of the rotated graph sampled on `spec`, built from the closed-form
/// Hessian at `T⁻¹(y)`, together with a certificate over those Hessians.
pub fn rotated_metric(
    p: &Potential,
    params: &RotationParams<f64>,
    spec: &GridSpec<f64>,
) -> Result<(MetricField<f64>, crate::rotation::RotationCertificate<f64>)> {
    let (c, s) = (params.cos_a(), params.sin_a());
    let mut hs = SymMatrixField::zeros(spec);
    for k in 0..spec.len() {
        let x = p.invert_gradient_map(c, s, &spec.coords(k))?;
        hs.set(k, &p.hessian(&x));
    }
    let points: Vec<usize> = (0..spec.len()).collect();
    let cert = certify_hessians(&points, |k| hs.at(k), params)?;
    let mut g = SymMatrixField::zeros(spec);
    for k in 0..spec.len() {
        let m = params
            .pulled_back_metric(&hs.at(k))
            .ok_or_else(|| Error::InvalidInput(format!("singular rotation Jacobian at grid point {k}")))?;
        g.set(k, &m);
    }
    Ok((MetricField::from_metric(g)?, cert))
}

/// Positive Dirichlet solutions on each ball and their Harnack ratio on the quarter ball.
fn harnack_levels(g: &MetricField<f64>, radii: &[f64], solver: &SolverConfig) -> Result<String> {
    let spec = &g.spec;
    let center = vec![0.0; spec.n()];
    let mut table = String::from("R,min_solution,ratio_quarter_ball\n");
    for &radius in radii {
        let mask = DomainMask::ball(spec, &center, radius);
        let op = assemble(g, &mask)?;
        let data = ScalarField::from_fn(spec, |x| 1.0 + 0.5 * patch_sign(x));
        let sol = solve_dirichlet_detailed(&op, &data, solver)?;
        let min = op.unknowns.iter().fold(f64::INFINITY, |m, &k| m.min(sol.field.values[k]));
        let ratio = harnack_ratio(&sol.field, radius / 4.0, &center)?;
        let _ = writeln!(table, "{radius},{min:.16e},{ratio:.16e}");
    }
    Ok(table)
}

pub struct LiouvilleOutcome {
    pub report: ExperimentReport,
    pub decay: Option<DecayReport<f64>>,
    pub baseline: Option<DecayReport<f64>>,
}

/// Certify the rotation, build the rotated metric on the `y` grid, and run the
/// oscillation-decay and Harnack measurements.
pub fn run_liouville(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    liouville_with(cfg, &cfg.potential()?).map(|o| o.report)
}

pub fn liouville_with(cfg: &ExperimentConfig, p: &Potential) -> Result<LiouvilleOutcome> {
    let mut r = new_report("liouville", cfg);
    let n = cfg.n;
    let radii = if cfg.radii.is_empty() { vec![4.0, 8.0, 16.0] } else { cfg.radii.clone() };
    let r_max = *radii.last().expect("non-empty");
    let xspec = cfg.grid(cfg.half_width)?;
    let xmask = DomainMask::full_box(&xspec);
    let u = p.sample(&xspec)?;
    let params = match cfg.delta {
        Some(d) => RotationParams::from_delta(d, n)?,
        None => RotationParams::derive(liouville_m(cfg, p, &u, &xmask)?, n)?,
    };
    let grid_cert = certify(&u, &xmask, &params)?;
    r.block(&grid_cert.to_report());
    let half = (cfg.y_points - 1) / 2;
    let yspec = GridSpec::centered_with_spacing(n, r_max / half as f64, r_max)?;
    let (g, cert) = rotated_metric(p, &params, &yspec)?;
    r.text("pulled_back.points", cert.points.len());
    r.text("pulled_back.worst_hessian_min", sci(cert.worst_hessian.value));
    r.text("pulled_back.worst_metric_min", sci(cert.worst_metric_low.value));
    r.text("pulled_back.worst_metric_max", sci(cert.worst_metric_high.value));
    r.text("pulled_back.pass", cert.pass);
    let ok = r.check_flag("grid_certificate", grid_cert.pass) & r.check_flag("pulled_back_certificate", cert.pass);
    if !ok {
        return Ok(LiouvilleOutcome { report: r, decay: None, baseline: None });
    }
    let solver = cfg.solver();
    let decay = oscillation_decay(&g, &radii, &solver)?;
    let flat = MetricField::constant(&yspec, &SmallMat::identity(n))?;
    let baseline = oscillation_decay(&flat, &radii, &solver)?;
    for (l, b) in decay.levels.iter().zip(&baseline.levels) {
        r.check_at_most(&format!("decay_ratio_R{}", l.radius), l.ratio, cfg.decay_threshold);
        r.metric(&format!("metric.R{}.baseline_ratio", b.radius), b.ratio, "flat reference");
    }
    r.metric("metric.decay_alpha", decay.alpha, "informational");
    r.metric("metric.baseline_alpha", baseline.alpha, "informational");
    r.table("decay", decay.to_csv());
    r.table("decay_flat", baseline.to_csv());
    r.table("harnack", harnack_levels(&g, &radii, &solver)?);
    if cfg.dump {
        r.dump("metric.dump", to_dump_string(&g));
    }
    Ok(LiouvilleOutcome { report: r, decay: Some(decay), baseline: Some(baseline) })
}

/// A smooth seeded coefficient field `A(x) = R(φ(x))·diag(eᵢ(x))·R(φ(x))ᵀ`
/// with `eᵢ ∈ [√ε, 1/√ε]`, so that `min λ / max λ ≥ ε` over all of space.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomCoefficients {
    phi0: f64,
    phi_amp: f64,
    phi_k: Vec<f64>,
    beta: Vec<f64>,
    eig_k: Vec<Vec<f64>>,
    eig_p: Vec<f64>,
}

impl RandomCoefficients {
    pub fn sample<R: Rng>(rng: &mut R, n: usize, min_ratio: f64) -> Self {
        let beta_max = -min_ratio.ln() / 2.0;
        let wave = |rng: &mut R| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect() };
        let phi_k = wave(rng);
        let eig_k = (0..n).map(|_| wave(rng)).collect();
        Self {
            phi0: rng.gen_range(0.0..std::f64::consts::PI),
            phi_amp: rng.gen_range(0.0..=1.0),
            phi_k,
            beta: (0..n).map(|_| rng.gen_range(0.0..=beta_max)).collect(),
            eig_k,
            eig_p: (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        }
    }

    pub fn at(&self, x: &[f64]) -> SmallMat<f64> {
        let n = x.len();
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        let e: Vec<f64> = (0..n).map(|i| (self.beta[i] * (dot(&self.eig_k[i]) + self.eig_p[i]).sin()).exp()).collect();
        let d = SmallMat::diag(&e);
        if n < 2 {
            return d;
        }
        let phi = self.phi0 + self.phi_amp * dot(&self.phi_k).sin();
        let mut rot = SmallMat::identity(n);
        rot[(0, 0)] = phi.cos();
        rot[(0, 1)] = -phi.sin();
        rot[(1, 0)] = phi.sin();
        rot[(1, 1)] = phi.cos();
        (rot * d * rot.transpose()).symmetrized()
    }
}

/// Positive boundary data `exp(γ·sin(k·x + p))`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomPositiveData {
    gamma: f64,
    k: Vec<f64>,
    p: f64,
}

impl RandomPositiveData {
    pub fn sample<R: Rng>(rng: &mut R, n: usize) -> Self {
        Self {
            gamma: rng.gen_range(0.0..=1.0),
            k: (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            p: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        (self.gamma * (self.k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.p).sin()).exp()
    }
}

/// Coefficients and data of one Harnack trial; trial `t` uses stream `t` of
/// the seeded generator.
pub fn harnack_trial(seed: u64, trial: u64, n: usize, min_ratio: f64) -> (RandomCoefficients, RandomPositiveData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let a = RandomCoefficients::sample(&mut rng, n, min_ratio);
    let b = RandomPositiveData::sample(&mut rng, n);
    (a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnackTrial {
    pub trial: usize,
    pub ellipticity_ratio: f64,
    pub iterations: usize,
    pub min_solution: f64,
    pub ratio: f64,
}

/// Solves every trial once on `B_radius` and returns the per-trial data.
pub fn harnack_suite(cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<HarnackTrial>, Option<String>)> {
    let n = cfg.n;
    if n < 2 {
        return Err(Error::Config("the Harnack suite needs n >= 2".into()));
    }
    let radius = cfg.radius.unwrap_or(4.0);
    let spec = cfg.grid(radius)?;
    let center = vec![0.0; n];
    let mask = DomainMask::ball(&spec, &center, radius);
    let solver = cfg.solver();
    let mut out = Vec::with_capacity(cfg.trials);
    let mut log = None;
    for t in 0..cfg.trials {
        let (a, b) = harnack_trial(seed, t as u64, n, cfg.min_ellipticity);
        let coeff = SymMatrixField::from_fn(&spec, |x| a.at(x));
        let op = DivergenceFormOperator::from_coefficients(coeff, ScalarField::constant(&spec, 1.0), &mask)?;
        let data = ScalarField::from_fn(&spec, |x| b.at(x));
        let sol = solve_dirichlet_detailed(&op, &data, &solver)?;
        if t == 0 && cfg.verbose {
            log = Some(history_csv(&sol.history));
        }
        let region: Vec<usize> = (0..spec.len()).filter(|&k| mask.in_region(k)).collect();
        let min_solution = region.iter().fold(f64::INFINITY, |m, &k| m.min(sol.field.values[k]));
        let ratio = harnack_ratio(&sol.field, cfg.inner_radius, &center)?;
        out.push(HarnackTrial {
            trial: t,
            ellipticity_ratio: op.ellipticity_ratio(),
            iterations: sol.iterations,
            min_solution,
            ratio,
        });
    }
    Ok((out, log))
}

/// Seeded Harnack suite with reproducibility and rescaling checks.
pub fn run_harnack(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seed = cfg.require_seed()?;
    let mut r = new_report("harnack", cfg);
    let (first, log) = harnack_suite(cfg, seed)?;
    let (second, _) = harnack_suite(cfg, seed)?;
    let mut table = String::from("trial,ellipticity_ratio,iterations,min_solution,ratio\n");
    for t in &first {
        let _ = writeln!(
            table,
            "{},{:.6e},{},{:.16e},{:.16e}",
            t.trial, t.ellipticity_ratio, t.iterations, t.min_solution, t.ratio
        );
    }
    let c_emp = first.iter().map(|t| t.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min_sol = first.iter().map(|t| t.min_solution).fold(f64::INFINITY, f64::min);
    let min_ell = first.iter().map(|t| t.ellipticity_ratio).fold(f64::INFINITY, f64::min);
    let spread = first.iter().zip(&second).map(|(a, b)| (a.ratio - b.ratio).abs()).fold(0.0, f64::max);
    r.metric("metric.C_emp", c_emp, "empirical constant, recorded");
    r.check_at_least("min_ellipticity_ratio", min_ell, cfg.min_ellipticity);
    r.check_flag("solutions_positive", min_sol > 0.0);
    r.check_flag("ratios_finite", first.iter().all(|t| t.ratio.is_finite()));
    r.check_at_most("rerun_ratio_spread", spread, 1e-10);

    let radius = cfg.radius.unwrap_or(4.0);
    let base = cfg.grid(radius)?;
    let (a, b) = harnack_trial(seed, 0, cfg.n, cfg.min_ellipticity);
    let solver = cfg.solver();
    let mut rescale = String::from("scale,max_discrepancy,tolerance\n");
    for scale in [2.0, 4.0] {
        let rep = rescale_check(&|x: &[f64]| a.at(x), &|x: &[f64]| b.at(x), &base, radius, scale, &solver)?;
        let _ = writeln!(rescale, "{scale},{:.6e},{:e}", rep.max_discrepancy, rep.tolerance);
        r.check_at_most(&format!("rescale_R{scale}"), rep.max_discrepancy, 2.0 * cfg.solver_tol);
    }
    r.table("trials", table);
    r.table("rescale", rescale);
    if let Some(l) = log {
        r.table("solver_log", l);
    }
    Ok(r)
}

fn functionals(cfg: &ExperimentConfig) -> Result<Vec<Builtin>> {
    if cfg.functional == "all" {
        return Ok(Builtin::ALL.to_vec());
    }
    cfg.functional
        .split(',')
        .map(|s| {
            Builtin::from_name(s.trim()).ok_or_else(|| Error::Config(format!("unknown functional '{}'", s.trim())))
        })
        .collect()
}

/// `Δ_g F(D²u)` and the oscillation of `F(D²u)` for each configured functional.
pub fn run_theorem4_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut r = new_report("theorem4", cfg);
    let spec = cfg.grid(cfg.half_width)?;
    let mask = cfg.mask(&spec);
    let p = cfg.potential()?;
    let u = p.sample(&spec)?;
    let interior = mask.require_interior()?;
    let hs = hessian(&u)?;
    let g = induced_metric(&hs)?;
    let op = assemble(&g, &mask)?;
    for f in functionals(cfg)? {
        let name = HessianFunctional::<f64>::name(&f);
        let values = match functional_field(&hs, &f) {
            Ok(v) => v,
            Err(e) => {
                r.text(&format!("theorem4.{name}.error"), e.to_string());
                r.check_flag(&format!("{name}_in_domain"), false);
                continue;
            }
        };
        let residual = op.apply_weighted(&values)?;
        let norm = max_abs(&residual.values);
        let osc = oscillation(&values, &interior);
        r.metric(&format!("metric.{name}.residual"), norm, &format!("<= {:e} for quadratic u", cfg.residual_tol));
        r.metric(&format!("metric.{name}.oscillation"), osc, &format!("<= {:e} for quadratic u", cfg.residual_tol));
        if p.is_quadratic() {
            r.check_at_most(&format!("{name}_residual"), norm, cfg.residual_tol);
            r.check_at_most(&format!("{name}_oscillation"), osc, cfg.residual_tol);
        }
        if f == Builtin::Phase {
            let h = hamstat_residual(&u, &mask)?;
            r.check_flag("phase_equals_hamstat", h.field.values == residual.values);
        }
    }
    Ok(r)
}

/// Random perturbation used for seeded Liouville runs.
pub fn seeded_liouville_potential(seed: u64, trial: u64, n: usize, m_quad: f64, bump: f64) -> Result<Potential> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    Potential::random_semiconvex(&mut rng, n, m_quad, bump)
}
