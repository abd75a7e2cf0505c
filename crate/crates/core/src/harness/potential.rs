//! Closed-form test potentials: a quadratic plus a sum of smooth perturbations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, SymMatrixField};
use crate::smallmat::{eig_sym, SmallMat};

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// `exp(−|x − c|²/w²)`
    Gaussian { center: Vec<f64>, width: f64 },
    /// `sin(k·x + φ)`
    Fourier { wavevector: Vec<f64>, phase: f64 },
}

impl Shape {
    pub fn id(&self) -> &'static str {
        match self {
            Shape::Gaussian { .. } => "gaussian",
            Shape::Fourier { .. } => "fourier",
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Gaussian { center, width } => (-dist2(x, center) / (width * width)).exp(),
            Shape::Fourier { wavevector, phase } => (dot(wavevector, x) + phase).sin(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Shape::Gaussian { center, width } => {
                let w2 = width * width;
                let g = (-dist2(x, center) / w2).exp();
                x.iter().zip(center).map(|(&a, &c)| -2.0 * (a - c) / w2 * g).collect()
            }
            Shape::Fourier { wavevector, phase } => {
                let c = (dot(wavevector, x) + phase).cos();
                wavevector.iter().map(|&k| k * c).collect()
            }
        }
    }

    pub fn hessian(&self, x: &[f64]) -> SmallMat<f64> {
        let n = x.len();
        let mut m = SmallMat::zeros(n);
        match self {
            Shape::Gaussian { center, width } => {
                let w2 = width * width;
                let g = (-dist2(x, center) / w2).exp();
                for i in 0..n {
                    for j in 0..n {
                        let ri = x[i] - center[i];
                        let rj = x[j] - center[j];
                        let d = if i == j { 2.0 / w2 } else { 0.0 };
                        m[(i, j)] = g * (4.0 * ri * rj / (w2 * w2) - d);
                    }
                }
            }
            Shape::Fourier { wavevector, phase } => {
                let s = (dot(wavevector, x) + phase).sin();
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = -s * wavevector[i] * wavevector[j];
                    }
                }
            }
        }
        m
    }

    /// Upper bound for the spectral norm of the Hessian over all of space.
    pub fn hessian_bound(&self) -> f64 {
        match self {
            Shape::Gaussian { width, .. } => 2.0 / (width * width),
            Shape::Fourier { wavevector, .. } => dot(wavevector, wavevector),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `u(x) = ½xᵀQx + b·x + Σ aₖ shapeₖ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    q: SmallMat<f64>,
    linear: Vec<f64>,
    terms: Vec<(f64, Shape)>,
}

impl Potential {
    pub fn quadratic(q: SmallMat<f64>) -> Result<Self> {
        if !q.is_symmetric() || !q.is_finite() {
            return Err(Error::Config("quadratic coefficient matrix must be finite and symmetric".into()));
        }
        let n = q.dim();
        Ok(Self { q, linear: vec![0.0; n], terms: Vec::new() })
    }

    pub fn zero(n: usize) -> Self {
        Self { q: SmallMat::zeros(n), linear: vec![0.0; n], terms: Vec::new() }
    }

    pub fn with_linear(mut self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.n() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("linear coefficients must be finite with one entry per axis".into()));
        }
        self.linear = b;
        Ok(self)
    }

    pub fn with_term(mut self, amplitude: f64, shape: Shape) -> Result<Self> {
        let (dim, finite) = match &shape {
            Shape::Gaussian { center, width } => {
                (center.len(), center.iter().all(|v| v.is_finite()) && *width > 0.0 && width.is_finite())
            }
            Shape::Fourier { wavevector, phase } => {
                (wavevector.len(), wavevector.iter().all(|v| v.is_finite()) && phase.is_finite())
            }
        };
        if dim != self.n() || !finite || !amplitude.is_finite() {
            return Err(Error::Config(format!("invalid {} perturbation", shape.id())));
        }
        if amplitude != 0.0 {
            self.terms.push((amplitude, shape));
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.q.dim()
    }

    pub fn quadratic_part(&self) -> Potential {
        Self { q: self.q, linear: self.linear.clone(), terms: Vec::new() }
    }

    pub fn hessian_of_quadratic(&self) -> SmallMat<f64> {
        self.q
    }

    pub fn is_quadratic(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let qx = self.q.mul_vec(x);
        let mut v = 0.5 * dot(x, &qx) + dot(&self.linear, x);
        for (a, s) in &self.terms {
            v += a * s.value(x);
        }
        v
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.mul_vec(x);
        for (gi, bi) in g.iter_mut().zip(&self.linear) {
            *gi += bi;
        }
        for (a, s) in &self.terms {
            for (gi, si) in g.iter_mut().zip(s.gradient(x)) {
                *gi += a * si;
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> SmallMat<f64> {
        let mut h = self.q;
        for (a, s) in &self.terms {
            h = h + s.hessian(x).scale(*a);
        }
        h
    }

    /// A lower bound for the smallest Hessian eigenvalue over all of space.
    pub fn hessian_lower_bound(&self) -> Result<f64> {
        let lam = eig_sym(&self.q)?.min();
        Ok(lam - self.terms.iter().map(|(a, s)| a.abs() * s.hessian_bound()).sum::<f64>())
    }

    pub fn sample(&self, spec: &GridSpec<f64>) -> Result<ScalarField<f64>> {
        self.check_dim(spec)?;
        Ok(ScalarField::from_fn(spec, |x| self.value(x)))
    }

    pub fn sample_hessian(&self, spec: &GridSpec<f64>) -> Result<SymMatrixField<f64>> {
        self.check_dim(spec)?;
        Ok(SymMatrixField::from_fn(spec, |x| self.hessian(x)))
    }

    fn check_dim(&self, spec: &GridSpec<f64>) -> Result<()> {
        if spec.n() != self.n() {
            return Err(Error::Config(format!("potential has dimension {}, grid has {}", self.n(), spec.n())));
        }
        Ok(())
    }

    /// Solves `c·x + s·∇u(x) = y` by damped Newton. Requires `c·I + s·D²u ≻ 0`
    /// everywhere, so the map is the gradient of a strongly convex function.
    pub fn invert_gradient_map(&self, c: f64, s: f64, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let residual = |x: &[f64]| -> Vec<f64> {
            let g = self.gradient(x);
            (0..n).map(|i| c * x[i] + s * g[i] - y[i]).collect()
        };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = 1e-13 * (1.0 + norm(y));
        let mut x: Vec<f64> = y.iter().map(|&v| v / (c + s * self.q.trace() / n as f64).max(c)).collect();
        let mut r = residual(&x);
        let mut history = Vec::new();
        for _ in 0..100 {
            let rn = norm(&r);
            history.push(rn);
            if rn <= target {
                return Ok(x);
            }
            let jac = SmallMat::identity(n).scale(c) + self.hessian(&x).scale(s);
            let dx = jac
                .inverse()
                .ok_or_else(|| Error::InvalidInput(format!("singular rotation Jacobian at {x:?}")))?
                .mul_vec(&r);
            let mut t = 1.0;
            loop {
                let xt: Vec<f64> = (0..n).map(|i| x[i] - t * dx[i]).collect();
                let rt = residual(&xt);
                if norm(&rt) <= (1.0 - 1e-4 * t) * rn || t < 1e-8 {
                    x = xt;
                    r = rt;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::Convergence { iterations: 100, last_residual: norm(&r), history })
    }

    /// A seeded semiconvex potential: random quadratic with eigenvalues in
    /// `[−m_quad, 1]` plus a Gaussian bump of amplitude `bump` and unit width
    /// somewhere in `[−1, 1]ⁿ`.
    pub fn random_semiconvex<R: Rng>(rng: &mut R, n: usize, m_quad: f64, bump: f64) -> Result<Self> {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let eigs: Vec<f64> = (0..n).map(|_| rng.gen_range(-m_quad..=1.0)).collect();
        let mut q = SmallMat::diag(&eigs);
        if n >= 2 {
            let mut r = SmallMat::identity(n);
            r[(0, 0)] = theta.cos();
            r[(0, 1)] = -theta.sin();
            r[(1, 0)] = theta.sin();
            r[(1, 1)] = theta.cos();
            q = (r * q * r.transpose()).symmetrized();
        }
        let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let amp = rng.gen_range(-bump..=bump);
        Self::quadratic(q)?.with_term(amp, Shape::Gaussian { center, width: 1.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Potential {
        Potential::quadratic(SmallMat::from_rows(&[&[1.0, 0.2], &[0.2, 0.5]]))
            .unwrap()
            .with_linear(vec![0.1, -0.3])
            .unwrap()
            .with_term(0.3, Shape::Gaussian { center: vec![0.2, -0.1], width: 0.8 })
            .unwrap()
            .with_term(0.05, Shape::Fourier { wavevector: vec![1.0, 2.0], phase: 0.4 })
            .unwrap()
    }

    #[test]
    fn derivatives_match_differences() {
        let p = sample();
        let x = [0.3, -0.7];
        let e = 1e-5;
        let g = p.gradient(&x);
        let h = p.hessian(&x);
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            assert!(((p.value(&xp) - p.value(&xm)) / (2.0 * e) - g[i]).abs() < 1e-8);
            let gp = p.gradient(&xp);
            let gm = p.gradient(&xm);
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * e) - h[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn lower_bound_holds() {
        let p = sample();
        let lb = p.hessian_lower_bound().unwrap();
        for i in 0..41 {
            for j in 0..41 {
                let x = [-2.0 + 0.1 * i as f64, -2.0 + 0.1 * j as f64];
                assert!(eig_sym(&p.hessian(&x)).unwrap().min() >= lb);
            }
        }
    }

    #[test]
    fn gradient_map_inverse() {
        let p = sample();
        let (c, s) = (0.8, 0.6);
        let x0 = [1.3, -0.4];
        let g = p.gradient(&x0);
        let y: Vec<f64> = (0..2).map(|i| c * x0[i] + s * g[i]).collect();
        let x = p.invert_gradient_map(c, s, &y).unwrap();
        assert!((x[0] - x0[0]).abs() < 1e-12 && (x[1] - x0[1]).abs() < 1e-12);
    }
}
