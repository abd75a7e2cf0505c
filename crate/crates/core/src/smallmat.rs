//! Dense matrices of order at most 4 and the cyclic Jacobi eigensolver.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::Real;

pub const MAX_DIM: usize = 4;

/// Number of stored entries of a packed upper triangle.
#[inline]
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)` in the packed upper triangle (row by row, `j >= i`).
#[inline]
pub fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Square matrix of order `n <= 4` stored inline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat<T> {
    n: usize,
    a: [[T; MAX_DIM]; MAX_DIM],
}

impl<T: Real> SmallMat<T> {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix order {n} outside 1..=4");
        Self { n, a: [[T::zero(); MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    pub fn scalar(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = s;
        }
        m
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.a[i][i] = v;
        }
        m
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "non-square row data");
            m.a[i][..n].copy_from_slice(r);
        }
        m
    }

    /// Symmetric matrix from a packed upper triangle.
    pub fn from_packed(n: usize, packed: &[T]) -> Self {
        debug_assert_eq!(packed.len(), packed_len(n));
        let mut m = Self::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m.a[i][j] = packed[k];
                m.a[j][i] = packed[k];
                k += 1;
            }
        }
        m
    }

    /// Writes the upper triangle into `out`.
    pub fn write_packed(&self, out: &mut [T]) {
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                out[k] = self.a[i][j];
                k += 1;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.a[i][j] = self.a[j][i];
            }
        }
        t
    }

    /// `(A + Aᵀ)/2`; used after products of commuting symmetric factors.
    pub fn symmetrized(&self) -> Self {
        let half = T::lit(0.5);
        let mut s = *self;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = half * (self.a[i][j] + self.a[j][i]);
                s.a[i][j] = v;
                s.a[j][i] = v;
            }
        }
        s
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = m.a[i][j] * s;
            }
        }
        m
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.a[i][i])
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + self.a[i][j] * self.a[i][j];
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.a[i][j].is_finite()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.a[i][j] == self.a[j][i]))
    }

    /// Determinant by cofactor expansion along the first row.
    pub fn det(&self) -> T {
        cofactor_det(self.n, &|i, j| self.a[i][j])
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; `None` when a
    /// pivot falls below `n·eps·‖A‖_max`.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let scale = self.max_abs();
        if !(scale > T::zero()) || !self.is_finite() {
            return None;
        }
        let tiny = scale * T::epsilon() * T::from_usize_lossy(n);
        let mut a = *self;
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (piv, pval) = (col..n).map(|r| (r, a.a[r][col].abs())).fold((col, T::zero()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pval <= tiny {
                return None;
            }
            a.a.swap(col, piv);
            inv.a.swap(col, piv);
            let d = a.a[col][col];
            for j in 0..n {
                a.a[col][j] = a.a[col][j] / d;
                inv.a[col][j] = inv.a[col][j] / d;
            }
            for r in 0..n {
                if r != col {
                    let f = a.a[r][col];
                    if f != T::zero() {
                        for j in 0..n {
                            a.a[r][j] = a.a[r][j] - f * a.a[col][j];
                            inv.a[r][j] = inv.a[r][j] - f * inv.a[col][j];
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self.a[i][j] * v[j])).collect()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.a[i][j]).collect()
    }
}

fn cofactor_det<T: Real>(n: usize, at: &dyn Fn(usize, usize) -> T) -> T {
    match n {
        1 => at(0, 0),
        2 => at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0),
        _ => {
            let mut acc = T::zero();
            for c in 0..n {
                let minor = |i: usize, j: usize| at(i + 1, if j < c { j } else { j + 1 });
                let term = at(0, c) * cofactor_det(n - 1, &minor);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

impl<T> Index<(usize, usize)> for SmallMat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.a[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for SmallMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.a[i][j]
    }
}

impl<T: Real> Add for SmallMat<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let mut m = self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[i][j] + rhs.a[i][j];
            }
        }
        m
    }
}

impl<T: Real> Sub for SmallMat<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let mut m = self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[i][j] - rhs.a[i][j];
            }
        }
        m
    }
}

impl<T: Real> Mul for SmallMat<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.a[i][k] * rhs.a[k][j];
                }
                m.a[i][j] = s;
            }
        }
        m
    }
}

/// Eigen-decomposition of a symmetric matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors stored as columns of `vectors`.
#[derive(Clone, Copy, Debug)]
pub struct SymEigen<T> {
    n: usize,
    values: [T; MAX_DIM],
    pub vectors: SmallMat<T>,
}

impl<T: Real> SymEigen<T> {
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values[..self.n]
    }

    #[inline]
    pub fn min(&self) -> T {
        self.values[0]
    }

    #[inline]
    pub fn max(&self) -> T {
        self.values[self.n - 1]
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, f: impl Fn(T) -> T) -> SmallMat<T> {
        let n = self.n;
        let fv: Vec<T> = self.values().iter().map(|&l| f(l)).collect();
        let mut m = SmallMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)];
                }
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        m
    }
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver for symmetric matrices of order at most 4.
///
/// Sweeps over all `(p, q)` pairs until the off-diagonal Frobenius norm drops
/// below `1e-13·‖A‖_F` (or a few ulps of `‖A‖_F` for `f32`). Only the upper
/// triangle is trusted to be symmetric; the input is symmetrized first.
pub fn eig_sym<T: Real>(a: &SmallMat<T>) -> Result<SymEigen<T>> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("eig_sym: non-finite matrix entry".into()));
    }
    let n = a.dim();
    let mut m = a.symmetrized();
    let mut v = SmallMat::identity(n);
    let norm = m.frobenius_norm();
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(8.0)) * norm;

    let off = |m: &SmallMat<T>| {
        let mut s = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                s = s + m[(p, q)] * m[(p, q)];
            }
        }
        (s + s).sqrt()
    };

    let mut sweeps = 0;
    while norm > T::zero() && off(&m) > tol && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (apq + apq);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J the (p, q) plane rotation [[c, s], [-s, c]].
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
    }

    let mut order = [0usize, 1, 2, 3];
    order[..n].sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("finite eigenvalues"));
    let mut values = [T::zero(); MAX_DIM];
    let mut vectors = SmallMat::zeros(n);
    for (dst, &src) in order[..n].iter().enumerate() {
        values[dst] = m[(src, src)];
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEigen { n, values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_swap() {
        let e = eig_sym(&SmallMat::<f64>::identity(3)).unwrap();
        assert_eq!(e.values(), &[1.0, 1.0, 1.0]);
        let e = eig_sym(&SmallMat::<f64>::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values()[0] + 1.0).abs() < 1e-15);
        assert!((e.values()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let m = SmallMat::from_rows(&[&[1.0, f64::NAN], &[f64::NAN, 1.0]]);
        assert!(matches!(eig_sym(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_matrix() {
        let e = eig_sym(&SmallMat::<f64>::zeros(4)).unwrap();
        assert!(e.values().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn reconstruct_4x4() {
        let a = SmallMat::from_rows(&[
            &[4.0, 1.0, -2.0, 0.5],
            &[1.0, -3.0, 0.0, 2.0],
            &[-2.0, 0.0, 1.0, 1.5],
            &[0.5, 2.0, 1.5, 0.0],
        ]);
        let e = eig_sym(&a).unwrap();
        let back = e.map(|l| l);
        assert!((back - a).max_abs() < 1e-12);
        let vtv = e.vectors.transpose() * e.vectors;
        assert!((vtv - SmallMat::identity(4)).max_abs() < 1e-12);
        assert!(e.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn packed_layout() {
        assert_eq!(packed_index(3, 0, 0), 0);
        assert_eq!(packed_index(3, 0, 2), 2);
        assert_eq!(packed_index(3, 1, 1), 3);
        assert_eq!(packed_index(3, 2, 1), 4);
        assert_eq!(packed_index(3, 2, 2), 5);
        let m = SmallMat::from_packed(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut out = [0.0; 6];
        m.write_packed(&mut out);
        assert_eq!(out, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m[(2, 1)], 5.0);
    }

    #[test]
    fn inverse_and_det() {
        let a = SmallMat::<f64>::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        assert!((a.det() - 18.0).abs() < 1e-14);
        let inv = a.inverse().unwrap();
        assert!(((a * inv) - SmallMat::identity(3)).max_abs() < 1e-14);
        let singular = SmallMat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let a = SmallMat::<f32>::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = eig_sym(&a).unwrap();
        assert!((e.values()[0] - 1.0).abs() < 1e-6);
        assert!((e.values()[1] - 3.0).abs() < 1e-6);
    }
}
