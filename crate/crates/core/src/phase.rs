//! Lagrangian phase, the induced metric on the gradient graph, the volume
//! functional with its exact discrete gradient, Hessian functionals, and the
//! phase lower bound that forces semiconvexity.

use crate::error::{Error, Result};
use crate::grid::{central_hessian_at, DomainMask, GridSpec, PointTuples, ScalarField, SymMatrixField};
use crate::smallmat::{eig_sym, SmallMat};
use crate::sum::pairwise_sum;
use crate::Real;

/// `θ = Σ arctan λᵢ`.
///
/// Each λᵢ is real, so the principal branch of arctan is the only one in play
/// and `|θ| < nπ/2`. Positive and negative parts are summed separately by
/// increasing magnitude, which makes `θ(−λ) = −θ(λ)` hold bitwise.
#[inline]
pub fn phase_of_eigenvalues<T: Real>(lambda: &[T]) -> T {
    let mut mags = [T::zero(); crate::smallmat::MAX_DIM];
    let mut sum_part = |positive: bool| {
        let mut m = 0;
        for &l in lambda {
            if (positive && l > T::zero()) || (!positive && l < T::zero()) {
                mags[m] = l.abs();
                m += 1;
            }
        }
        let part = &mut mags[..m];
        part.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        part.iter().fold(T::zero(), |acc, &v| acc + v.atan())
    };
    let pos = sum_part(true);
    let neg = sum_part(false);
    pos - neg
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField<T> {
    pub spec: GridSpec<T>,
    pub theta: Vec<T>,
    /// `n` ascending eigenvalues per point.
    pub lambda: Vec<T>,
}

impl<T: Real> PhaseField<T> {
    pub fn eigenvalues(&self, k: usize) -> &[T] {
        let n = self.spec.n();
        &self.lambda[k * n..(k + 1) * n]
    }

    pub fn theta_field(&self) -> ScalarField<T> {
        ScalarField { spec: self.spec.clone(), values: self.theta.clone() }
    }
}

impl<T: Real> PointTuples<T> for PhaseField<T> {
    fn grid(&self) -> &GridSpec<T> {
        &self.spec
    }
    fn width(&self) -> usize {
        1 + self.spec.n()
    }
    fn push_point(&self, k: usize, out: &mut Vec<T>) {
        out.push(self.theta[k]);
        out.extend_from_slice(self.eigenvalues(k));
    }
}

pub fn phase<T: Real>(hess: &SymMatrixField<T>) -> Result<PhaseField<T>> {
    let spec = &hess.spec;
    let n = spec.n();
    let mut theta = Vec::with_capacity(spec.len());
    let mut lambda = Vec::with_capacity(spec.len() * n);
    for k in 0..spec.len() {
        let e = eig_sym(&hess.at(k))?;
        theta.push(phase_of_eigenvalues(e.values()));
        lambda.extend_from_slice(e.values());
    }
    Ok(PhaseField { spec: spec.clone(), theta, lambda })
}

/// Induced metric `g = I + H²` on the gradient graph with its inverse and
/// volume density.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField<T> {
    pub spec: GridSpec<T>,
    pub g: SymMatrixField<T>,
    pub sqrt_det_g: ScalarField<T>,
    pub g_inv: SymMatrixField<T>,
}

impl<T: Real> MetricField<T> {
    /// Builds the bookkeeping (`g⁻¹`, `√det g`) for an arbitrary SPD metric field.
    pub fn from_metric(g: SymMatrixField<T>) -> Result<Self> {
        let spec = g.spec.clone();
        let mut g_inv = SymMatrixField::zeros(&spec);
        let mut sqrt_det = Vec::with_capacity(spec.len());
        for k in 0..spec.len() {
            let e = eig_sym(&g.at(k))?;
            if !(e.min() > T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "metric not positive definite at point {k} (min eigenvalue {})",
                    e.min()
                )));
            }
            g_inv.set(k, &e.map(|l| T::one() / l));
            sqrt_det.push(e.values().iter().fold(T::one(), |p, &l| p * l).sqrt());
        }
        Ok(Self { sqrt_det_g: ScalarField { spec: spec.clone(), values: sqrt_det }, spec, g, g_inv })
    }

    /// Constant metric on every point of `spec`.
    pub fn constant(spec: &GridSpec<T>, g: &SmallMat<T>) -> Result<Self> {
        Self::from_metric(SymMatrixField::from_fn(spec, |_| *g))
    }
}

impl<T: Real> PointTuples<T> for MetricField<T> {
    fn grid(&self) -> &GridSpec<T> {
        &self.spec
    }
    fn width(&self) -> usize {
        1 + 2 * self.g.width()
    }
    fn push_point(&self, k: usize, out: &mut Vec<T>) {
        out.push(self.sqrt_det_g.values[k]);
        out.extend_from_slice(self.g.packed(k));
        out.extend_from_slice(self.g_inv.packed(k));
    }
}

/// `g = I + HᵀH = I + H²` pointwise. Eigenvalues of `g` are `1 + λᵢ² ≥ 1`.
pub fn induced_metric<T: Real>(hess: &SymMatrixField<T>) -> Result<MetricField<T>> {
    let spec = &hess.spec;
    let n = spec.n();
    let mut g = SymMatrixField::zeros(spec);
    let mut g_inv = SymMatrixField::zeros(spec);
    let mut sqrt_det = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        let h = hess.at(k);
        let e = eig_sym(&h)?;
        g.set(k, &(SmallMat::identity(n) + (h * h).symmetrized()));
        g_inv.set(k, &e.map(|l| T::one() / (T::one() + l * l)));
        sqrt_det.push(e.values().iter().fold(T::one(), |p, &l| p * (T::one() + l * l)).sqrt());
    }
    Ok(MetricField { spec: spec.clone(), g, sqrt_det_g: ScalarField { spec: spec.clone(), values: sqrt_det }, g_inv })
}

/// `√det(I + H²)` for a symmetric `H`.
#[inline]
pub fn volume_density<T: Real>(h: &SmallMat<T>) -> T {
    let a = SmallMat::identity(h.dim()) + *h * *h;
    a.det().sqrt()
}

/// The discrete volume functional `F(u) = hⁿ Σ_{x∈Q} √det(I + H(x)²)` over the
/// quadrature points `Q` of a mask, with its exact gradient with respect to
/// the interior values.
#[derive(Clone, Debug)]
pub struct VolumeFunctional<T> {
    spec: GridSpec<T>,
    quadrature: Vec<usize>,
    interior: Vec<usize>,
    is_interior: Vec<bool>,
}

impl<T: Real> VolumeFunctional<T> {
    pub fn new(mask: &DomainMask<T>) -> Result<Self> {
        let interior = mask.require_interior()?;
        let quadrature = mask.quadrature();
        let is_interior = (0..mask.spec.len()).map(|k| mask.is_interior(k)).collect();
        Ok(Self { spec: mask.spec.clone(), quadrature, interior, is_interior })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn quadrature(&self) -> &[usize] {
        &self.quadrature
    }

    pub fn value(&self, u: &[T]) -> T {
        let terms: Vec<T> =
            self.quadrature.iter().map(|&k| volume_density(&central_hessian_at(&self.spec, u, k))).collect();
        pairwise_sum(&terms) * self.spec.cell_volume()
    }

    /// Writes `∂F/∂u` into `out` (zero off the interior).
    ///
    /// With `A = I + H²` and `s = √det A`, `ds = s·tr(A⁻¹H·dH)` because `A⁻¹`
    /// and `H` commute; `P = s·A⁻¹H` is then pushed back through the Hessian
    /// stencils (their adjoint).
    pub fn gradient_into(&self, u: &[T], out: &mut [T]) {
        let spec = &self.spec;
        let n = spec.n();
        let h2 = spec.h() * spec.h();
        let cv = spec.cell_volume();
        let diag_c = cv / h2;
        let cross_c = cv * T::lit(0.5) / h2;
        let two = T::lit(2.0);
        out.iter_mut().for_each(|x| *x = T::zero());
        for &k in &self.quadrature {
            let h = central_hessian_at(spec, u, k);
            let e = eig_sym(&h).expect("finite hessian");
            let s = e.values().iter().fold(T::one(), |p, &l| p * (T::one() + l * l)).sqrt();
            let p = e.map(|l| s * l / (T::one() + l * l));
            for i in 0..n {
                let si = spec.stride(i);
                let c = diag_c * p[(i, i)];
                out[k + si] = out[k + si] + c;
                out[k] = out[k] - two * c;
                out[k - si] = out[k - si] + c;
                for j in (i + 1)..n {
                    let sj = spec.stride(j);
                    let c = cross_c * p[(i, j)];
                    out[k + si + sj] = out[k + si + sj] + c;
                    out[k + si - sj] = out[k + si - sj] - c;
                    out[k - si + sj] = out[k - si + sj] - c;
                    out[k - si - sj] = out[k - si - sj] + c;
                }
            }
        }
        for (k, x) in out.iter_mut().enumerate() {
            if !self.is_interior[k] {
                *x = T::zero();
            }
        }
    }
}

/// Midpoint-rule volume of the gradient graph over the mask's quadrature points.
pub fn volume<T: Real>(u: &ScalarField<T>, mask: &DomainMask<T>) -> Result<T> {
    check_same_grid(&u.spec, &mask.spec)?;
    Ok(VolumeFunctional::new(mask)?.value(&u.values))
}

/// Exact gradient of [`volume`] with respect to the interior values of `u`.
pub fn volume_gradient<T: Real>(u: &ScalarField<T>, mask: &DomainMask<T>) -> Result<ScalarField<T>> {
    check_same_grid(&u.spec, &mask.spec)?;
    let f = VolumeFunctional::new(mask)?;
    let mut out = vec![T::zero(); u.spec.len()];
    f.gradient_into(&u.values, &mut out);
    Ok(ScalarField { spec: u.spec.clone(), values: out })
}

pub(crate) fn check_same_grid<T: Real>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<()> {
    if a != b {
        return Err(Error::Config("field and mask live on different grids".into()));
    }
    Ok(())
}

/// Eigenvalue lower bound implied by a phase lower bound.
///
/// With `δ = θ_min − (n−2)π/2 > 0`, any symmetric matrix whose phase is at
/// least `θ_min` has `λ_min ≥ tan(δ − π/2)`: a smaller eigenvalue would leave
/// the other `n−1` arctangents to exceed `(n−1)π/2`. For `δ ≥ π` no matrix
/// reaches the phase and the bound is `+∞`.
pub fn phase_semiconvexity_bound<T: Real>(theta_min: T, n: usize) -> Result<T> {
    if n == 0 || !theta_min.is_finite() {
        return Err(Error::OutOfRange("phase bound needs n ≥ 1 and a finite phase".into()));
    }
    let half_pi = T::FRAC_PI_2();
    let delta =
        theta_min - T::from_usize_lossy(n.saturating_sub(2)) * half_pi + if n == 1 { half_pi } else { T::zero() };
    if !(delta > T::zero()) {
        return Err(Error::OutOfRange(format!(
            "phase {theta_min} is not above the critical value (n−2)π/2 for n = {n}"
        )));
    }
    if delta >= T::PI() {
        return Ok(T::infinity());
    }
    Ok((delta - half_pi).tan())
}

/// A symmetric function of the Hessian eigenvalues.
pub trait HessianFunctional<T: Real> {
    fn name(&self) -> &str;
    fn eval(&self, lambda: &[T]) -> T;
    fn in_domain(&self, _lambda: &[T]) -> bool {
        true
    }
    /// Strictly increasing in each eigenvalue on its domain.
    fn monotone(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    /// `Σ arctan λᵢ`
    Phase,
    /// `Σ λᵢ`
    Trace,
    /// `Σ log λᵢ`, defined for `λᵢ > 0`
    LogDet,
}

impl Builtin {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "phase" => Some(Self::Phase),
            "trace" => Some(Self::Trace),
            "logdet" => Some(Self::LogDet),
            _ => None,
        }
    }

    pub const ALL: [Builtin; 3] = [Builtin::Phase, Builtin::Trace, Builtin::LogDet];
}

impl<T: Real> HessianFunctional<T> for Builtin {
    fn name(&self) -> &str {
        match self {
            Builtin::Phase => "phase",
            Builtin::Trace => "trace",
            Builtin::LogDet => "logdet",
        }
    }

    fn eval(&self, lambda: &[T]) -> T {
        match self {
            Builtin::Phase => phase_of_eigenvalues(lambda),
            Builtin::Trace => lambda.iter().fold(T::zero(), |a, &l| a + l),
            Builtin::LogDet => lambda.iter().fold(T::zero(), |a, &l| a + l.ln()),
        }
    }

    fn in_domain(&self, lambda: &[T]) -> bool {
        match self {
            Builtin::LogDet => lambda.iter().all(|&l| l > T::zero()),
            _ => true,
        }
    }

    fn monotone(&self) -> bool {
        true
    }
}

/// `F(λ₁,…,λₙ)` at every grid point.
pub fn functional_field<T: Real, F: HessianFunctional<T> + ?Sized>(
    hess: &SymMatrixField<T>,
    f: &F,
) -> Result<ScalarField<T>> {
    let spec = &hess.spec;
    let mut values = Vec::with_capacity(spec.len());
    let mut bad = Vec::new();
    for k in 0..spec.len() {
        let e = eig_sym(&hess.at(k))?;
        if !f.in_domain(e.values()) {
            bad.push(k);
            values.push(T::zero());
            continue;
        }
        values.push(f.eval(e.values()));
    }
    if !bad.is_empty() {
        return Err(Error::DomainViolation { functional: f.name().to_string(), points: bad });
    }
    Ok(ScalarField { spec: spec.clone(), values })
}
