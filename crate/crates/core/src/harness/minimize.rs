//! Preconditioned gradient descent on the discrete volume functional.

use super::banded::BandedSpd;
use crate::error::{Error, Result};
use crate::grid::{central_hessian_at, DomainMask, GridSpec, ScalarField};
use crate::phase::{volume_density, VolumeFunctional};
use crate::smallmat::SmallMat;
use crate::sum::{max_abs, pairwise_dot, pairwise_sum};

/// Stopping and line-search parameters.
#[derive(Clone, Debug)]
pub struct DescentOptions {
    /// Sup-norm gradient tolerance; `None` means `1e-8·hⁿ`.
    pub grad_tol: Option<f64>,
    pub max_steps: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Smallest step tried before the line search gives up.
    pub min_step: f64,
    pub verbose: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { grad_tol: None, max_steps: 5000, armijo: 1e-4, min_step: 1e-14, verbose: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentStep {
    pub step: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct Minimized {
    pub u: ScalarField<f64>,
    pub steps: usize,
    pub initial_value: f64,
    pub value: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub history: Vec<DescentStep>,
}

impl Minimized {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("step,value,grad_norm,alpha\n");
        for h in &self.history {
            s.push_str(&format!("{},{:.16e},{:.6e},{:.6e}\n", h.step, h.value, h.grad_norm, h.alpha));
        }
        s
    }

    /// True when no accepted step increased the functional.
    pub fn monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1].value <= w[0].value)
    }
}

/// Hessian-stencil weights at quadrature point `k`: one list per entry `(i, j)`, `i ≤ j`,
/// with off-diagonal entries carrying the factor √2 of the Frobenius norm.
fn stencil_weights(spec: &GridSpec<f64>, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = spec.n();
    let h2 = spec.h() * spec.h();
    let c = std::f64::consts::SQRT_2 * 0.25 / h2;
    let mut out = Vec::new();
    for i in 0..n {
        let si = spec.stride(i);
        out.push(vec![(k + si, 1.0 / h2), (k, -2.0 / h2), (k - si, 1.0 / h2)]);
        for j in (i + 1)..n {
            let sj = spec.stride(j);
            out.push(vec![(k + si + sj, c), (k + si - sj, -c), (k - si + sj, -c), (k - si - sj, c)]);
        }
    }
    out
}

/// Second variation of the functional at a flat graph, restricted to the interior unknowns.
fn flat_preconditioner(f: &VolumeFunctional<f64>, slot: &[Option<usize>]) -> Result<BandedSpd> {
    let spec = f.spec();
    let cv = spec.cell_volume();
    let mut bw = 0;
    let mut entries = Vec::new();
    for &k in f.quadrature() {
        for w in stencil_weights(spec, k) {
            let act: Vec<(usize, f64)> = w.iter().filter_map(|&(g, c)| slot[g].map(|s| (s, c))).collect();
            if let (Some(lo), Some(hi)) = (act.iter().map(|a| a.0).min(), act.iter().map(|a| a.0).max()) {
                bw = bw.max(hi - lo);
            }
            entries.push(act);
        }
    }
    let mut k = BandedSpd::zeros(f.interior().len(), bw);
    for act in &entries {
        for &(a, ca) in act {
            for &(b, cb) in act {
                if b <= a {
                    k.add(a, b, cv * ca * cb);
                }
            }
        }
    }
    k.factor()?;
    Ok(k)
}

/// `det(I + M) − 1` as the sum of all principal minors, accurate for small `M`.
fn det_one_plus_minus_one(m: &SmallMat<f64>) -> f64 {
    let n = m.dim();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let mut sub = SmallMat::zeros(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sub[(r, c)] = m[(i, j)];
            }
        }
        total += sub.det();
    }
    total
}

/// `√det(I + (H+E)²) − √det(I + H²)` without cancellation.
fn density_change(h: &SmallMat<f64>, e: &SmallMat<f64>) -> f64 {
    let a = SmallMat::identity(h.dim()) + *h * *h;
    let delta = *h * *e + *e * *h + *e * *e;
    let x = match a.inverse() {
        Some(ai) => det_one_plus_minus_one(&(ai * delta)),
        None => return f64::NAN,
    };
    let s = volume_density(h);
    s * x / ((1.0 + x).sqrt() + 1.0)
}

fn value_change(f: &VolumeFunctional<f64>, old: &[f64], step: &[f64]) -> f64 {
    let spec = f.spec();
    let d: Vec<f64> = f
        .quadrature()
        .iter()
        .map(|&k| density_change(&central_hessian_at(spec, old, k), &central_hessian_at(spec, step, k)))
        .collect();
    pairwise_sum(&d) * spec.cell_volume()
}

/// Minimizes the volume functional over the interior values of `u0`, keeping
/// every other value of `u0` fixed.
///
/// Search directions are `−K⁻¹∇F` with `K` the second variation at a flat
/// graph, followed by backtracking under the Armijo condition.
pub fn minimize_volume_from(u0: ScalarField<f64>, mask: &DomainMask<f64>, opts: &DescentOptions) -> Result<Minimized> {
    crate::phase::check_same_grid(&u0.spec, &mask.spec)?;
    if !(opts.armijo > 0.0 && opts.armijo < 1.0) || !(opts.min_step > 0.0) {
        return Err(Error::Config("armijo must lie in (0, 1) and min_step must be positive".into()));
    }
    let f = VolumeFunctional::new(mask)?;
    let spec = f.spec().clone();
    let grad_tol = opts.grad_tol.unwrap_or(1e-8 * spec.cell_volume());
    if !(grad_tol > 0.0) {
        return Err(Error::Config("gradient tolerance must be positive".into()));
    }
    let mut slot = vec![None; spec.len()];
    for (s, &k) in f.interior().iter().enumerate() {
        slot[k] = Some(s);
    }
    let kmat = flat_preconditioner(&f, &slot)?;

    let mut u = u0.values;
    let mut value = f.value(&u);
    if !value.is_finite() {
        return Err(Error::NonFinite("initial volume".into()));
    }
    let initial_value = value;
    let mut grad = vec![0.0; spec.len()];
    let mut incr = vec![0.0; spec.len()];
    let mut history = Vec::new();
    let mut alpha = 1.0f64;
    for step in 0..=opts.max_steps {
        f.gradient_into(&u, &mut grad);
        let gnorm = max_abs(&grad);
        if !gnorm.is_finite() {
            return Err(Error::NonFinite(format!("volume gradient at step {step}")));
        }
        history.push(DescentStep { step, value, grad_norm: gnorm, alpha: if step == 0 { 0.0 } else { alpha } });
        if opts.verbose {
            eprintln!("descent step {step}: F = {value:.12e}, |grad| = {gnorm:.3e}, alpha = {alpha:.3e}");
        }
        if gnorm <= grad_tol {
            return Ok(Minimized {
                u: ScalarField::new(spec, u)?,
                steps: step,
                initial_value,
                value,
                grad_norm: gnorm,
                grad_tol,
                history,
            });
        }
        if step == opts.max_steps {
            break;
        }
        let g: Vec<f64> = f.interior().iter().map(|&k| grad[k]).collect();
        let mut d = g.clone();
        kmat.solve(&mut d);
        let slope = -pairwise_dot(&g, &d);
        if !(slope < 0.0) {
            return Err(Error::NonFinite(format!(
                "preconditioned direction is not a descent direction at step {step}"
            )));
        }
        alpha = (2.0 * alpha).min(1.0);
        loop {
            for (s, &k) in f.interior().iter().enumerate() {
                incr[k] = -alpha * d[s];
            }
            let dv = value_change(&f, &u, &incr);
            if dv.is_finite() && dv <= opts.armijo * alpha * slope {
                for &k in f.interior() {
                    u[k] += incr[k];
                }
                value += dv;
                break;
            }
            alpha *= 0.5;
            if alpha < opts.min_step {
                return Err(Error::LineSearch { step, min_step: opts.min_step, value });
            }
        }
    }
    let last = history.last().map(|h| h.grad_norm).unwrap_or(f64::NAN);
    Err(Error::Convergence {
        iterations: opts.max_steps,
        last_residual: last,
        history: history.iter().map(|h| h.grad_norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::volume;

    #[test]
    fn quadratic_is_already_critical() {
        let spec = GridSpec::<f64>::centered(2, 17, 1.0).unwrap();
        let mask = DomainMask::full_box(&spec);
        let u = ScalarField::from_fn(&spec, |x| 0.3 * x[0] * x[0] + 0.1 * x[0] * x[1] + 0.2 * x[1] * x[1]);
        let m = minimize_volume_from(u.clone(), &mask, &DescentOptions::default()).unwrap();
        assert_eq!(m.steps, 0);
        assert_eq!(m.u.values, u.values);
    }

    #[test]
    fn bump_relaxes_to_quadratic() {
        let spec = GridSpec::<f64>::centered(2, 21, 1.0).unwrap();
        let mask = DomainMask::full_box(&spec);
        let q = |x: &[f64]| 0.25 * x[0] * x[0] + 0.15 * x[1] * x[1];
        let mut u = ScalarField::from_fn(&spec, q);
        for k in mask.interior() {
            let x = spec.coords(k);
            u.values[k] += 0.1 * (-(x[0] * x[0] + x[1] * x[1]) * 4.0).exp();
        }
        let f0 = volume(&u, &mask).unwrap();
        let m = minimize_volume_from(u, &mask, &DescentOptions::default()).unwrap();
        assert!(m.value < f0);
        assert!(m.monotone());
        let err = (0..spec.len()).map(|k| (m.u.values[k] - q(&spec.coords(k))).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn bad_options_rejected() {
        let spec = GridSpec::<f64>::centered(2, 9, 1.0).unwrap();
        let mask = DomainMask::full_box(&spec);
        let u = ScalarField::constant(&spec, 0.0);
        let opts = DescentOptions { armijo: 1.5, ..Default::default() };
        assert!(matches!(minimize_volume_from(u, &mask, &opts), Err(Error::Config(_))));
    }
}
