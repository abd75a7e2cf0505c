//! Second-order finite differences: central where the axis neighbors exist,
//! one-sided at box edges.

use super::{GridSpec, ScalarField, SymMatrixField, VectorField};
use crate::error::{Error, Result};
use crate::smallmat::SmallMat;
use crate::Real;

/// First-derivative weights (before dividing by `h`) along one axis.
fn first_weights<T: Real>(k: usize, d: usize) -> [(isize, T); 3] {
    let half = T::lit(0.5);
    if k > 0 && k + 1 < d {
        [(-1, -half), (1, half), (0, T::zero())]
    } else if k == 0 {
        [(0, T::lit(-1.5)), (1, T::lit(2.0)), (2, -half)]
    } else {
        [(0, T::lit(1.5)), (-1, T::lit(-2.0)), (-2, half)]
    }
}

/// Second-derivative weights (before dividing by `h²`) along one axis.
fn second_weights<T: Real>(k: usize, d: usize) -> [(isize, T); 4] {
    let one = T::one();
    if k > 0 && k + 1 < d {
        [(-1, one), (0, T::lit(-2.0)), (1, one), (0, T::zero())]
    } else {
        let s = if k == 0 { 1 } else { -1 };
        [(0, T::lit(2.0)), (s, T::lit(-5.0)), (2 * s, T::lit(4.0)), (3 * s, -one)]
    }
}

fn require_points<T: Real>(spec: &GridSpec<T>, min: usize, op: &str) -> Result<()> {
    if let Some(d) = spec.dims().iter().find(|&&d| d < min) {
        return Err(Error::Config(format!("{op} needs at least {min} points per axis, grid has {d}")));
    }
    Ok(())
}

pub fn gradient<T: Real>(u: &ScalarField<T>) -> Result<VectorField<T>> {
    let spec = &u.spec;
    require_points(spec, 3, "gradient")?;
    let n = spec.n();
    let inv_h = T::one() / spec.h();
    let mut out = VectorField::zeros(spec);
    for k in 0..spec.len() {
        let g = out.at_mut(k);
        for (axis, gi) in g.iter_mut().enumerate() {
            let w = first_weights::<T>(spec.axis_index(k, axis), spec.dims()[axis]);
            let mut s = T::zero();
            for (o, c) in w {
                if c != T::zero() {
                    s = s + c * u.values[spec.step(k, axis, o).expect("stencil inside box")];
                }
            }
            *gi = s * inv_h;
        }
        debug_assert_eq!(g.len(), n);
    }
    Ok(out)
}

/// Central-difference Hessian at a point whose radius-1 stencil exists.
///
/// Diagonal: `(u(x+heᵢ) − 2u(x) + u(x−heᵢ))/h²`; off-diagonal: the centered
/// four-point cross stencil divided by `4h²`. Reads `values` through the
/// layout of `spec`, so callers may pass perturbed copies of a field.
#[inline]
pub fn central_hessian_at<T: Real>(spec: &GridSpec<T>, values: &[T], k: usize) -> SmallMat<T> {
    let n = spec.n();
    let h2 = spec.h() * spec.h();
    let inv_h2 = T::one() / h2;
    let inv_4h2 = T::lit(0.25) * inv_h2;
    let two = T::lit(2.0);
    let mut m = SmallMat::zeros(n);
    let uc = values[k];
    for i in 0..n {
        let si = spec.stride(i);
        let up = values[k + si];
        let dn = values[k - si];
        m[(i, i)] = (up - two * uc + dn) * inv_h2;
        for j in (i + 1)..n {
            let sj = spec.stride(j);
            let v = (values[k + si + sj] - values[k + si - sj] - values[k - si + sj] + values[k - si - sj]) * inv_4h2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn has_central_stencil<T: Real>(spec: &GridSpec<T>, k: usize) -> bool {
    (0..spec.n()).all(|a| {
        let i = spec.axis_index(k, a);
        i > 0 && i + 1 < spec.dims()[a]
    })
}

/// Hessian at every grid point. Central stencils wherever the radius-1
/// neighborhood exists; one-sided second-order stencils on box faces.
pub fn hessian<T: Real>(u: &ScalarField<T>) -> Result<SymMatrixField<T>> {
    let spec = &u.spec;
    require_points(spec, 5, "hessian")?;
    let n = spec.n();
    let inv_h2 = T::one() / (spec.h() * spec.h());
    let mut out = SymMatrixField::zeros(spec);
    let mut off = vec![0isize; n];
    for k in 0..spec.len() {
        if has_central_stencil(spec, k) {
            out.set(k, &central_hessian_at(spec, &u.values, k));
            continue;
        }
        let mut m = SmallMat::zeros(n);
        for i in 0..n {
            let d = spec.dims()[i];
            let ki = spec.axis_index(k, i);
            let mut s = T::zero();
            for (o, c) in second_weights::<T>(ki, d) {
                if c != T::zero() {
                    s = s + c * u.values[spec.step(k, i, o).expect("stencil inside box")];
                }
            }
            m[(i, i)] = s * inv_h2;
            let wi = first_weights::<T>(ki, d);
            for j in (i + 1)..n {
                let wj = first_weights::<T>(spec.axis_index(k, j), spec.dims()[j]);
                let mut s = T::zero();
                for &(oi, ci) in &wi {
                    for &(oj, cj) in &wj {
                        if ci == T::zero() || cj == T::zero() {
                            continue;
                        }
                        off.iter_mut().for_each(|x| *x = 0);
                        off[i] = oi;
                        off[j] = oj;
                        s = s + ci * cj * u.values[spec.offset(k, &off).expect("stencil inside box")];
                    }
                }
                m[(i, j)] = s * inv_h2;
                m[(j, i)] = m[(i, j)];
            }
        }
        out.set(k, &m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, pts: usize, lo: f64, h: f64) -> GridSpec<f64> {
        GridSpec::new(vec![pts; n], h, vec![lo; n]).unwrap()
    }

    #[test]
    fn linear_gradient_is_exact() {
        let g = grid(3, 6, -0.3, 0.1);
        let u = ScalarField::from_fn(&g, |x| x[0]);
        let du = gradient(&u).unwrap();
        for k in 0..g.len() {
            let v = du.at(k);
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn central_difference_on_quadratic_and_sine() {
        let g = grid(1, 11, 0.0, 0.1);
        let u = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        let du = gradient(&u).unwrap();
        assert!((du.at(3)[0] - 0.6).abs() < 1e-14);

        // sin'(0) ≈ sin(h)/h from the central stencil.
        let h: f64 = 0.01;
        let g = GridSpec::new(vec![5], h, vec![-2.0 * h]).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].sin());
        let du = gradient(&u).unwrap();
        let expected = h.sin() / h;
        assert!((du.at(2)[0] - expected).abs() < 1e-13);
        assert!((du.at(2)[0] - 0.9999833334166665).abs() < 1e-12);
    }

    #[test]
    fn hessian_of_simple_quadratics() {
        let g = grid(2, 7, -0.3, 0.1);
        let u = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let hs = hessian(&u).unwrap();
        for k in 0..g.len() {
            let m = hs.at(k);
            assert!((m - SmallMat::identity(2)).max_abs() < 1e-10, "point {k}: {m:?}");
        }
        let u = ScalarField::from_fn(&g, |x| x[0] * x[1]);
        let hs = hessian(&u).unwrap();
        for k in 0..g.len() {
            let m = hs.at(k);
            assert!(m[(0, 0)].abs() < 1e-10 && m[(1, 1)].abs() < 1e-10 && (m[(0, 1)] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_quartic_truncation() {
        // (x+h)^4 - 2x^4 + (x-h)^4 = 12x²h² + 2h⁴ ⇒ 12 + 2h² at x = 1.
        let h: f64 = 0.01;
        let g = GridSpec::new(vec![5], h, vec![1.0 - 2.0 * h]).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].powi(4));
        let hs = hessian(&u).unwrap();
        assert!((hs.at(2)[(0, 0)] - 12.0002).abs() < 1e-8);
    }

    #[test]
    fn size_preconditions() {
        let g = grid(2, 4, 0.0, 0.1);
        let u = ScalarField::constant(&g, 1.0);
        assert!(matches!(hessian(&u), Err(Error::Config(_))));
        assert!(gradient(&u).is_ok());
        let g = grid(2, 2, 0.0, 0.1);
        assert!(matches!(gradient(&ScalarField::constant(&g, 1.0)), Err(Error::Config(_))));
    }
}
