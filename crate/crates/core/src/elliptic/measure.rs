//! Measurements built on Dirichlet solves: Harnack ratios, oscillation decay
//! over growing balls, the `x ↦ x/R` rescaling check, and the graph Laplacian
//! of phase-type fields.

use super::{assemble, solve_dirichlet_detailed, DivergenceFormOperator, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{hessian, DomainMask, GridSpec, ScalarField, SymMatrixField};
use crate::phase::{check_same_grid, functional_field, induced_metric, phase, HessianFunctional, MetricField};
use crate::smallmat::SmallMat;
use crate::sum::max_abs;
use crate::Real;

fn dist2<T: Real>(x: &[T], c: &[T]) -> T {
    x.iter().zip(c).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
}

fn check_ball_in_box<T: Real>(spec: &GridSpec<T>, center: &[T], r: T) -> Result<()> {
    if center.len() != spec.n() {
        return Err(Error::Config("ball center has the wrong dimension".into()));
    }
    let slack = spec.h() * T::lit(1e-9);
    for (i, &c) in center.iter().enumerate() {
        let lo = spec.origin()[i];
        let hi = lo + spec.h() * T::from_usize_lossy(spec.dims()[i] - 1);
        if c - r < lo - slack || c + r > hi + slack {
            return Err(Error::Config(format!("ball of radius {r} around {center:?} leaves the grid box on axis {i}")));
        }
    }
    Ok(())
}

/// Grid points with `|x − center| ≤ r`.
pub fn ball_points<T: Real>(spec: &GridSpec<T>, center: &[T], r: T) -> Vec<usize> {
    let r2 = r * r * (T::one() + T::lit(1e-12));
    (0..spec.len()).filter(|&k| dist2(&spec.coords(k), center) <= r2).collect()
}

/// `max f − min f` over the given points.
pub fn oscillation<T: Real>(f: &ScalarField<T>, points: &[usize]) -> T {
    let (lo, hi) = points
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &k| (lo.min(f.values[k]), hi.max(f.values[k])));
    hi - lo
}

/// `sup f / inf f` over the grid points of the ball `|x − center| ≤ r_inner`.
pub fn harnack_ratio<T: Real>(f: &ScalarField<T>, r_inner: T, center: &[T]) -> Result<T> {
    check_ball_in_box(&f.spec, center, r_inner)?;
    let pts = ball_points(&f.spec, center, r_inner);
    if pts.is_empty() {
        return Err(Error::Config("inner ball contains no grid points".into()));
    }
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for &k in &pts {
        let v = f.values[k];
        if !(v > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "Harnack ratio needs f > 0 on the inner ball; f = {v} at {:?}",
                f.spec.coords(k)
            )));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi / lo)
}

/// `±1` by the axis of largest `|xᵢ|`: `+1` for odd axes, `−1` for even ones
/// (ties go to the lower axis). In the plane: `+1` on top/bottom, `−1` left/right.
pub fn patch_sign<T: Real>(x: &[T]) -> T {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i].abs() > x[best].abs() {
            best = i;
        }
    }
    if best % 2 == 1 {
        T::one()
    } else {
        -T::one()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayLevel<T> {
    pub radius: T,
    pub unknowns: usize,
    pub iterations: usize,
    pub ellipticity_ratio: T,
    pub osc_outer: T,
    pub osc_inner: T,
    /// `osc(B_{R/2}) / osc(B_R)`.
    pub ratio: T,
    /// Largest excursion of the solution outside `[min data, max data]`.
    pub max_principle_excess: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport<T> {
    pub levels: Vec<DecayLevel<T>>,
    /// Fitted `α` in `osc(B_{R/2}) ≈ 2^{−α} osc(B_R)` (mean over levels).
    pub alpha: T,
}

impl<T: Real> DecayReport<T> {
    pub fn max_ratio(&self) -> T {
        self.levels.iter().fold(T::neg_infinity(), |m, l| m.max(l.ratio))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "radius,unknowns,iterations,ellipticity_ratio,osc_outer,osc_inner,ratio,max_principle_excess\n",
        );
        for l in &self.levels {
            s.push_str(&format!(
                "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.3e}\n",
                l.radius,
                l.unknowns,
                l.iterations,
                l.ellipticity_ratio,
                l.osc_outer,
                l.osc_inner,
                l.ratio,
                l.max_principle_excess
            ));
        }
        s
    }
}

/// Oscillation decay for the graph Laplacian of metric `g` on balls `B_R(0)`.
pub fn oscillation_decay<T: Real>(g: &MetricField<T>, radii: &[T], cfg: &SolverConfig) -> Result<DecayReport<T>> {
    oscillation_decay_with(&g.spec, radii, cfg, |mask| assemble(g, mask))
}

/// Oscillation decay with an arbitrary operator per ball mask.
///
/// For each `R`: solve with `±1` patch data ([`patch_sign`]) on the boundary
/// layer of `B_R(0)`, then record `osc(B_{R/2})/osc(B_R)`.
pub fn oscillation_decay_with<T: Real>(
    spec: &GridSpec<T>,
    radii: &[T],
    cfg: &SolverConfig,
    build: impl Fn(&DomainMask<T>) -> Result<DivergenceFormOperator<T>>,
) -> Result<DecayReport<T>> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > T::zero()) {
        return Err(Error::Config("radii must be positive and strictly increasing".into()));
    }
    let center = vec![T::zero(); spec.n()];
    check_ball_in_box(spec, &center, *radii.last().expect("non-empty"))?;
    let two = T::lit(2.0);
    let mut levels = Vec::with_capacity(radii.len());
    for &radius in radii {
        let mask = DomainMask::ball(spec, &center, radius);
        let op = build(&mask)?;
        let mut data = ScalarField::constant(spec, T::zero());
        for k in mask.boundary() {
            data.values[k] = patch_sign(&spec.coords(k));
        }
        let sol = solve_dirichlet_detailed(&op, &data, cfg)?;
        let region: Vec<usize> = (0..spec.len()).filter(|&k| mask.in_region(k)).collect();
        let inner = ball_points(spec, &center, radius / two);
        let osc_outer = oscillation(&sol.field, &region);
        let osc_inner = oscillation(&sol.field, &inner);
        let (lo, hi) = mask
            .boundary()
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &k| (lo.min(data.values[k]), hi.max(data.values[k])));
        let excess = op.unknowns.iter().fold(T::zero(), |m, &k| {
            let v = sol.field.values[k];
            m.max(v - hi).max(lo - v)
        });
        levels.push(DecayLevel {
            radius,
            unknowns: op.num_unknowns(),
            iterations: sol.iterations,
            ellipticity_ratio: op.ellipticity_ratio(),
            osc_outer,
            osc_inner,
            ratio: osc_inner / osc_outer,
            max_principle_excess: excess,
        });
    }
    let mean_log2 = levels.iter().fold(T::zero(), |acc, l| acc + l.ratio.log2()) / T::from_usize_lossy(levels.len());
    Ok(DecayReport { levels, alpha: -mean_log2 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescaleReport<T> {
    pub scale: T,
    pub unknowns: usize,
    pub iterations: (usize, usize),
    /// `max |f_R(Rx) − f(x)|` over corresponding grid points.
    pub max_discrepancy: T,
    pub tolerance: f64,
}

/// Solves on `B_radius` with coefficients `a(x)` and data `b(x)`, then on
/// `B_{R·radius}` with spacing `R·h`, coefficients `a(x/R)` and data `b(x/R)`,
/// and compares `f_R(x) = f(x/R)` at corresponding grid points.
pub fn rescale_check<T: Real>(
    coeffs: &dyn Fn(&[T]) -> SmallMat<T>,
    boundary: &dyn Fn(&[T]) -> T,
    base: &GridSpec<T>,
    radius: T,
    scale: T,
    cfg: &SolverConfig,
) -> Result<RescaleReport<T>> {
    if !(scale > T::zero() && scale.is_finite()) {
        return Err(Error::Config(format!("rescale factor must be positive, got {scale}")));
    }
    let center = vec![T::zero(); base.n()];
    check_ball_in_box(base, &center, radius)?;
    let scaled = base.scaled(scale)?;
    let mask1 = DomainMask::ball(base, &center, radius);
    let mask_r = DomainMask::ball(&scaled, &center, radius * scale);
    if (0..base.len()).any(|k| mask1.class(k) != mask_r.class(k)) {
        return Err(Error::Config("rescaled ball does not occupy the same grid points".into()));
    }

    let solve = |spec: &GridSpec<T>, mask: &DomainMask<T>, s: T| -> Result<super::DirichletSolve<T>> {
        let a = SymMatrixField::from_fn(spec, |y| {
            let x: Vec<T> = y.iter().map(|&v| v / s).collect();
            coeffs(&x)
        });
        let op = DivergenceFormOperator::from_coefficients(a, ScalarField::constant(spec, T::one()), mask)?;
        let data = ScalarField::from_fn(spec, |y| {
            let x: Vec<T> = y.iter().map(|&v| v / s).collect();
            boundary(&x)
        });
        let mut data = data;
        for &k in &op.unknowns {
            data.values[k] = T::zero();
        }
        solve_dirichlet_detailed(&op, &data, cfg)
    };
    let f1 = solve(base, &mask1, T::one())?;
    let fr = solve(&scaled, &mask_r, scale)?;
    let max_discrepancy = (0..base.len())
        .filter(|&k| mask1.in_region(k))
        .fold(T::zero(), |m, k| m.max((f1.field.values[k] - fr.field.values[k]).abs()));
    Ok(RescaleReport {
        scale,
        unknowns: mask1.interior().len(),
        iterations: (f1.iterations, fr.iterations),
        max_discrepancy,
        tolerance: cfg.tolerance,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphResidual<T> {
    /// `Δ_g φ` at interior points, zero elsewhere.
    pub field: ScalarField<T>,
    /// Max-norm over the interior.
    pub norm: T,
}

fn graph_laplacian<T: Real>(
    hs: &SymMatrixField<T>,
    mask: &DomainMask<T>,
    phi: ScalarField<T>,
) -> Result<GraphResidual<T>> {
    let g = induced_metric(hs)?;
    let op = assemble(&g, mask)?;
    let field = op.apply_weighted(&phi)?;
    let norm = max_abs(&field.values);
    Ok(GraphResidual { field, norm })
}

/// `Δ_g θ` for `θ = phase(D²u)` and `g = I + (D²u)²`, using θ's own values on
/// the boundary layer.
pub fn hamstat_residual<T: Real>(u: &ScalarField<T>, mask: &DomainMask<T>) -> Result<GraphResidual<T>> {
    check_same_grid(&u.spec, &mask.spec)?;
    let hs = hessian(u)?;
    let theta = phase(&hs)?.theta_field();
    graph_laplacian(&hs, mask, theta)
}

/// `Δ_g F(D²u)` together with the field `F(D²u)` itself.
pub fn functional_residual<T: Real, F: HessianFunctional<T> + ?Sized>(
    u: &ScalarField<T>,
    mask: &DomainMask<T>,
    f: &F,
) -> Result<(GraphResidual<T>, ScalarField<T>)> {
    check_same_grid(&u.spec, &mask.spec)?;
    let hs = hessian(u)?;
    let values = functional_field(&hs, f)?;
    Ok((graph_laplacian(&hs, mask, values.clone())?, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harnack_examples() {
        let spec = GridSpec::<f64>::centered(2, 33, 4.0).unwrap();
        let c = ScalarField::constant(&spec, 3.0);
        assert_eq!(harnack_ratio(&c, 1.0, &[0.0, 0.0]).unwrap(), 1.0);
        let f = ScalarField::from_fn(&spec, |x| x[0] + 5.0);
        assert!((harnack_ratio(&f, 1.0, &[0.0, 0.0]).unwrap() - 1.5).abs() < 1e-14);
        let g = ScalarField::from_fn(&spec, |x| x[0]);
        assert!(matches!(harnack_ratio(&g, 1.0, &[0.0, 0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(harnack_ratio(&f, 5.0, &[0.0, 0.0]), Err(Error::Config(_))));
    }

    #[test]
    fn harnack_is_scale_invariant() {
        let spec = GridSpec::<f64>::centered(2, 21, 2.0).unwrap();
        let f = ScalarField::from_fn(&spec, |x| 2.0 + x[0].sin() * x[1].cos());
        let mut g = f.clone();
        g.values.iter_mut().for_each(|v| *v *= 8.0);
        assert_eq!(harnack_ratio(&f, 1.0, &[0.0, 0.0]).unwrap(), harnack_ratio(&g, 1.0, &[0.0, 0.0]).unwrap());
    }

    #[test]
    fn patch_pattern() {
        assert_eq!(patch_sign(&[0.1, 1.0]), 1.0);
        assert_eq!(patch_sign(&[-1.0, 0.2]), -1.0);
        assert_eq!(patch_sign(&[0.0, 0.1, -2.0]), -1.0);
    }

    #[test]
    fn flat_decay_contracts() {
        let spec = GridSpec::<f64>::centered(2, 49, 8.0).unwrap();
        let g = MetricField::constant(&spec, &SmallMat::identity(2)).unwrap();
        let rep = oscillation_decay(&g, &[2.0, 4.0, 8.0], &SolverConfig::default()).unwrap();
        for l in &rep.levels {
            assert!(l.ratio < 1.0 && l.ratio > 0.0, "{l:?}");
            assert!((l.osc_outer - 2.0).abs() < 1e-12);
        }
        assert!(rep.alpha > 0.0);
        assert!(rep.to_csv().lines().count() == 4);
        assert!(oscillation_decay(&g, &[4.0, 2.0], &SolverConfig::default()).is_err());
        assert!(oscillation_decay(&g, &[16.0], &SolverConfig::default()).is_err());
    }

    #[test]
    fn rescale_identity_is_exact() {
        let base = GridSpec::<f64>::centered(2, 33, 4.0).unwrap();
        let a = |_: &[f64]| SmallMat::identity(2);
        let b = |x: &[f64]| x[0] * x[1];
        let rep = rescale_check(&a, &b, &base, 4.0, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(rep.max_discrepancy, 0.0);
        let rep = rescale_check(&a, &b, &base, 4.0, 2.0, &SolverConfig::default()).unwrap();
        assert!(rep.max_discrepancy <= 1e-12);
        assert!(rescale_check(&a, &b, &base, 4.0, -1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn quadratic_potential_is_stationary() {
        let spec = GridSpec::<f64>::centered(2, 17, 1.0).unwrap();
        let mask = DomainMask::full_box(&spec);
        let u = ScalarField::from_fn(&spec, |x| 0.8 * x[0] * x[0] + 0.3 * x[0] * x[1] - 0.2 * x[1] * x[1]);
        let r = hamstat_residual(&u, &mask).unwrap();
        assert!(r.norm < 1e-10, "{}", r.norm);
    }
}
