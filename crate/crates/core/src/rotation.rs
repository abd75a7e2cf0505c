//! Rotated coordinates for semiconvex potentials.
//!
//! For `D²u + M·I ≥ 0` set `δ = π/2 − arctan M` and
//! `T(x) = cos(δ/n)·x + sin(δ/n)·Du(x)`. Then
//! `DT ≥ c_lower·I` with
//! `c_lower = cos(δ/n)·[tan(δ/n) + tan(π/2 − δ)] / tan(π/2 − δ(n−1)/n) > 0`,
//! so `T` is a diffeomorphism; `B = D²u·(DT)⁻¹` (the Jacobian of `Du∘T⁻¹`)
//! has eigenvalues `λ/(cos(δ/n) + sin(δ/n)λ) ≤ M₀ = 1/sin(δ/n)`, and the
//! pulled-back metric `I + BᵀB` lies between `I` and `(1 + M₀²)·I`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{gradient, hessian, DomainMask, ScalarField, SymMatrixField, VectorField};
use crate::phase::check_same_grid;
use crate::smallmat::{eig_sym, SmallMat};
use crate::Real;

/// Margin added to the measured semiconvexity constant in auto mode.
pub const AUTO_MARGIN: f64 = 1e-6;

/// Tolerance for every certificate comparison.
pub const CERT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationParams<T> {
    pub n: usize,
    /// Semiconvexity constant: `D²u + M·I ≥ 0`.
    pub m: T,
    /// `π/2 − arctan M`, in `(0, π/2]`.
    pub delta: T,
    /// Certified lower bound on the eigenvalues of `DT`.
    pub c_lower: T,
    /// `1/sin(δ/n)`.
    pub m0: T,
    /// `1 + M₀²`.
    pub metric_upper: T,
}

impl<T: Real> RotationParams<T> {
    pub fn derive(m: T, n: usize) -> Result<Self> {
        if !m.is_finite() || m < T::zero() {
            return Err(Error::OutOfRange(format!(
                "semiconvexity constant must be finite and ≥ 0, got {m}; shift u by its measured constant first"
            )));
        }
        if !(2..=crate::smallmat::MAX_DIM).contains(&n) {
            return Err(Error::OutOfRange(format!("rotation needs 2 ≤ n ≤ 4, got {n}")));
        }
        let delta = T::FRAC_PI_2() - m.atan();
        Self::build(m, delta, n)
    }

    /// Parameters from an explicit angle `δ ∈ (0, π/2]`; `M = cot δ`.
    pub fn from_delta(delta: T, n: usize) -> Result<Self> {
        if !(delta > T::zero() && delta <= T::FRAC_PI_2()) {
            return Err(Error::OutOfRange(format!("δ must lie in (0, π/2], got {delta}")));
        }
        if !(2..=crate::smallmat::MAX_DIM).contains(&n) {
            return Err(Error::OutOfRange(format!("rotation needs 2 ≤ n ≤ 4, got {n}")));
        }
        let m = (T::FRAC_PI_2() - delta).tan().max(T::zero());
        Self::build(m, delta, n)
    }

    fn build(m: T, delta: T, n: usize) -> Result<Self> {
        let nn = T::from_usize_lossy(n);
        let a = delta / nn;
        let half_pi = T::FRAC_PI_2();
        let c_lower = a.cos() * (a.tan() + (half_pi - delta).tan()) / (half_pi - delta * (nn - T::one()) / nn).tan();
        let m0 = T::one() / a.sin();
        let p = Self { n, m, delta, c_lower, m0, metric_upper: T::one() + m0 * m0 };
        if !(p.c_lower > T::zero()) || !p.m0.is_finite() {
            return Err(Error::OutOfRange(format!("degenerate rotation parameters {p:?}")));
        }
        Ok(p)
    }

    #[inline]
    pub fn cos_a(&self) -> T {
        (self.delta / T::from_usize_lossy(self.n)).cos()
    }

    #[inline]
    pub fn sin_a(&self) -> T {
        (self.delta / T::from_usize_lossy(self.n)).sin()
    }

    /// `DT = cos(δ/n)·I + sin(δ/n)·H`.
    pub fn dt(&self, hess: &SmallMat<T>) -> SmallMat<T> {
        SmallMat::scalar(self.n, self.cos_a()) + hess.scale(self.sin_a())
    }

    /// `B = H·(DT)⁻¹`, or `None` when `DT` is numerically singular.
    pub fn lipschitz_factor(&self, hess: &SmallMat<T>) -> Option<SmallMat<T>> {
        Some((*hess * self.dt(hess).inverse()?).symmetrized())
    }

    /// Pulled-back metric `I + BᵀB` in rotated coordinates.
    pub fn pulled_back_metric(&self, hess: &SmallMat<T>) -> Option<SmallMat<T>> {
        let b = self.lipschitz_factor(hess)?;
        Some((SmallMat::identity(self.n) + b.transpose() * b).symmetrized())
    }
}

/// Measured semiconvexity constant `max(0, −min_x λ_min(D²u(x)))` over the
/// interior of `mask`.
pub fn estimate_semiconvexity<T: Real>(u: &ScalarField<T>, mask: &DomainMask<T>) -> Result<T> {
    check_same_grid(&u.spec, &mask.spec)?;
    let hs = hessian(u)?;
    let mut lo = T::zero();
    for k in mask.require_interior()? {
        lo = lo.min(eig_sym(&hs.at(k))?.min());
    }
    Ok(-lo)
}

/// Parameters with `M` measured from `u` plus [`AUTO_MARGIN`].
pub fn auto_params<T: Real>(u: &ScalarField<T>, mask: &DomainMask<T>) -> Result<RotationParams<T>> {
    RotationParams::derive(estimate_semiconvexity(u, mask)? + T::lit(AUTO_MARGIN), u.spec.n())
}

/// The map `T` and its Jacobian at every grid point.
pub fn apply_rotation<T: Real>(
    u: &ScalarField<T>,
    params: &RotationParams<T>,
) -> Result<(VectorField<T>, SymMatrixField<T>)> {
    if u.spec.n() != params.n {
        return Err(Error::Config("rotation parameters built for a different dimension".into()));
    }
    let du = gradient(u)?;
    let hs = hessian(u)?;
    let (c, s) = (params.cos_a(), params.sin_a());
    let mut t = VectorField::zeros(&u.spec);
    for k in 0..u.spec.len() {
        let x = u.spec.coords(k);
        let g = du.at(k);
        for (i, ti) in t.at_mut(k).iter_mut().enumerate() {
            *ti = c * x[i] + s * g[i];
        }
    }
    let dt = hs.map(|h| params.dt(h));
    Ok((t, dt))
}

/// A grid point and the value that made it the worst offender.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extreme<T> {
    pub index: usize,
    pub value: T,
}

#[derive(Clone, Debug)]
pub struct RotationCertificate<T> {
    pub params: RotationParams<T>,
    pub tol: T,
    /// Checked (interior) points.
    pub points: Vec<usize>,
    pub hessian_min: Vec<T>,
    pub dt_min: Vec<T>,
    /// Largest eigenvalue of `B = D(Du∘T⁻¹)`; NaN where `DT` was singular.
    pub b_max: Vec<T>,
    pub metric_min: Vec<T>,
    pub metric_max: Vec<T>,
    pub singular_points: Vec<usize>,
    pub semiconvex: bool,
    pub dt_ok: bool,
    pub lipschitz_ok: bool,
    pub metric_ok: bool,
    pub pass: bool,
    pub worst_hessian: Extreme<T>,
    pub worst_dt: Extreme<T>,
    pub worst_b: Extreme<T>,
    pub worst_metric_low: Extreme<T>,
    pub worst_metric_high: Extreme<T>,
}

fn extreme<T: Real>(points: &[usize], vals: &[T], want_max: bool) -> Extreme<T> {
    let mut best = Extreme { index: points.first().copied().unwrap_or(0), value: T::nan() };
    for (&k, &v) in points.iter().zip(vals) {
        if v.is_nan() {
            continue;
        }
        let better = best.value.is_nan() || if want_max { v > best.value } else { v < best.value };
        if better {
            best = Extreme { index: k, value: v };
        }
    }
    best
}

/// Checks the rotation bounds at every interior point of `mask`.
///
/// Failure is reported in the certificate rather than as an error: a
/// semiconvexity violation or a numerically singular `DT` simply clears the
/// corresponding flags.
pub fn certify<T: Real>(
    u: &ScalarField<T>,
    mask: &DomainMask<T>,
    params: &RotationParams<T>,
) -> Result<RotationCertificate<T>> {
    check_same_grid(&u.spec, &mask.spec)?;
    if u.spec.n() != params.n {
        return Err(Error::Config("rotation parameters built for a different dimension".into()));
    }
    let hs = hessian(u)?;
    let points = mask.require_interior()?;
    certify_hessians(&points, |k| hs.at(k), params)
}

/// Certificate for an arbitrary set of Hessians, one per listed index.
pub fn certify_hessians<T: Real>(
    points: &[usize],
    hess_at: impl Fn(usize) -> SmallMat<T>,
    params: &RotationParams<T>,
) -> Result<RotationCertificate<T>> {
    let tol = T::lit(CERT_TOL);
    let np = points.len();
    let mut hessian_min = Vec::with_capacity(np);
    let mut dt_min = Vec::with_capacity(np);
    let mut b_max = Vec::with_capacity(np);
    let mut metric_min = Vec::with_capacity(np);
    let mut metric_max = Vec::with_capacity(np);
    let mut singular_points = Vec::new();
    for &k in points {
        let h = hess_at(k);
        hessian_min.push(eig_sym(&h)?.min());
        dt_min.push(eig_sym(&params.dt(&h))?.min());
        match params.lipschitz_factor(&h) {
            Some(b) => {
                b_max.push(eig_sym(&b)?.max());
                let g = SmallMat::identity(params.n) + (b.transpose() * b).symmetrized();
                let e = eig_sym(&g)?;
                metric_min.push(e.min());
                metric_max.push(e.max());
            }
            None => {
                singular_points.push(k);
                b_max.push(T::nan());
                metric_min.push(T::nan());
                metric_max.push(T::nan());
            }
        }
    }
    let semiconvex = hessian_min.iter().all(|&l| l >= -params.m - tol);
    let dt_ok = dt_min.iter().all(|&l| l >= params.c_lower - tol);
    let lipschitz_ok = singular_points.is_empty() && b_max.iter().all(|&b| b <= params.m0 + tol);
    let metric_ok = singular_points.is_empty()
        && metric_min.iter().all(|&l| l >= T::one() - tol)
        && metric_max.iter().all(|&l| l <= params.metric_upper + tol);
    Ok(RotationCertificate {
        params: *params,
        tol,
        worst_hessian: extreme(points, &hessian_min, false),
        worst_dt: extreme(points, &dt_min, false),
        worst_b: extreme(points, &b_max, true),
        worst_metric_low: extreme(points, &metric_min, false),
        worst_metric_high: extreme(points, &metric_max, true),
        points: points.to_vec(),
        hessian_min,
        dt_min,
        b_max,
        metric_min,
        metric_max,
        pass: semiconvex && dt_ok && lipschitz_ok && metric_ok,
        singular_points,
        semiconvex,
        dt_ok,
        lipschitz_ok,
        metric_ok,
    })
}

impl<T: Real> RotationCertificate<T> {
    /// Key-value report, one `key = value` per line.
    pub fn to_report(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(&mut s, "rotation.n", p.n.to_string());
        kv(&mut s, "rotation.M", format!("{:.16e}", p.m.as_f64()));
        kv(&mut s, "rotation.delta", format!("{:.16e}", p.delta.as_f64()));
        kv(&mut s, "rotation.c_lower", format!("{:.16e}", p.c_lower.as_f64()));
        kv(&mut s, "rotation.M0", format!("{:.16e}", p.m0.as_f64()));
        kv(&mut s, "rotation.metric_upper", format!("{:.16e}", p.metric_upper.as_f64()));
        kv(&mut s, "certificate.tol", format!("{:e}", self.tol.as_f64()));
        kv(&mut s, "certificate.points", self.points.len().to_string());
        for (name, e) in [
            ("worst_hessian_min", &self.worst_hessian),
            ("worst_dt_min", &self.worst_dt),
            ("worst_b_max", &self.worst_b),
            ("worst_metric_min", &self.worst_metric_low),
            ("worst_metric_max", &self.worst_metric_high),
        ] {
            kv(&mut s, &format!("certificate.{name}"), format!("{:.16e} @ {}", e.value.as_f64(), e.index));
        }
        kv(&mut s, "certificate.singular_points", self.singular_points.len().to_string());
        kv(&mut s, "certificate.semiconvex", self.semiconvex.to_string());
        kv(&mut s, "certificate.dt_ok", self.dt_ok.to_string());
        kv(&mut s, "certificate.lipschitz_ok", self.lipschitz_ok.to_string());
        kv(&mut s, "certificate.metric_ok", self.metric_ok.to_string());
        kv(&mut s, "certificate.pass", self.pass.to_string());
        s
    }
}
