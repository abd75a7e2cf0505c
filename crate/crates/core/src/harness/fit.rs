//! Least-squares fit of a field by a polynomial of degree at most two.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::smallmat::SmallMat;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFit {
    /// Coordinates are `z = (x − center)/scale`.
    pub center: Vec<f64>,
    pub scale: f64,
    /// Coefficients of `1, z₀, …, z_{n−1}, zᵢzⱼ (i ≤ j)` in that order.
    pub coeffs: Vec<f64>,
    /// `max |u − fit|` over the fitted points.
    pub max_deviation: f64,
    pub points: usize,
}

fn monomials(z: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    out.extend_from_slice(z);
    for i in 0..z.len() {
        for j in i..z.len() {
            out.push(z[i] * z[j]);
        }
    }
}

impl QuadraticFit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().zip(&self.center).map(|(&a, &c)| (a - c) / self.scale).collect();
        let mut m = Vec::new();
        monomials(&z, &mut m);
        m.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Hessian of the fitted polynomial in the original coordinates.
    pub fn hessian(&self) -> SmallMat<f64> {
        let n = self.center.len();
        let mut h = SmallMat::zeros(n);
        let mut idx = 1 + n;
        let s2 = self.scale * self.scale;
        for i in 0..n {
            for j in i..n {
                let c = self.coeffs[idx] / s2;
                if i == j {
                    h[(i, i)] = 2.0 * c;
                } else {
                    h[(i, j)] = c;
                    h[(j, i)] = c;
                }
                idx += 1;
            }
        }
        h
    }
}

/// Fits `u` over `points` and reports the max deviation there.
pub fn quadratic_fit(u: &ScalarField<f64>, points: &[usize]) -> Result<QuadraticFit> {
    let spec = &u.spec;
    let n = spec.n();
    let m = (n + 1) * (n + 2) / 2;
    if points.len() < m {
        return Err(Error::Config(format!("quadratic fit needs at least {m} points, got {}", points.len())));
    }
    let mut center = vec![0.0; n];
    for &k in points {
        for (c, x) in center.iter_mut().zip(spec.coords(k)) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= points.len() as f64);
    let scale = points
        .iter()
        .flat_map(|&k| spec.coords(k).into_iter().zip(&center).map(|(x, c)| (x - c).abs()).collect::<Vec<_>>())
        .fold(0.0f64, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    let mut phi = Vec::with_capacity(m);
    let zs = |k: usize| -> Vec<f64> { spec.coords(k).iter().zip(&center).map(|(&x, &c)| (x - c) / scale).collect() };
    for &k in points {
        monomials(&zs(k), &mut phi);
        for a in 0..m {
            rhs[a] += phi[a] * u.values[k];
            for b in 0..=a {
                gram[a * m + b] += phi[a] * phi[b];
            }
        }
    }
    // Cholesky of the normal equations.
    let max_diag = (0..m).map(|a| gram[a * m + a]).fold(0.0f64, f64::max);
    let mut l = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..=a {
            let mut s = gram[a * m + b];
            for c in 0..b {
                s -= l[a * m + c] * l[b * m + c];
            }
            if a == b {
                if !(s > 1e-12 * max_diag) {
                    return Err(Error::Config("quadratic fit is rank deficient on this point set".into()));
                }
                l[a * m + a] = s.sqrt();
            } else {
                l[a * m + b] = s / l[b * m + b];
            }
        }
    }
    let mut c = rhs;
    for a in 0..m {
        for b in 0..a {
            c[a] -= l[a * m + b] * c[b];
        }
        c[a] /= l[a * m + a];
    }
    for a in (0..m).rev() {
        for b in (a + 1)..m {
            c[a] -= l[b * m + a] * c[b];
        }
        c[a] /= l[a * m + a];
    }
    let mut max_deviation = 0.0f64;
    for &k in points {
        monomials(&zs(k), &mut phi);
        let f: f64 = phi.iter().zip(&c).map(|(a, b)| a * b).sum();
        max_deviation = max_deviation.max((u.values[k] - f).abs());
    }
    Ok(QuadraticFit { center, scale, coeffs: c, max_deviation, points: points.len() })
}
