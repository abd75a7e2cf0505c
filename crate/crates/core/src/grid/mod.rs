//! Uniform grids over boxes in Rⁿ (n ≤ 4) and the fields sampled on them.
//!
//! Points are ordered row-major with axis 0 slowest. Every axis shares the
//! spacing `h`; the coordinate of index `k` along axis `i` is `origin[i] + k·h`.

mod dump;
mod mask;
mod stencil;

pub use dump::{parse_dump, to_dump_string, write_dump, Dump, PointTuples};
pub use mask::{cube_offsets, DomainMask, PointClass};
pub use stencil::{central_hessian_at, gradient, hessian};

use crate::error::{Error, Result};
use crate::smallmat::{packed_len, SmallMat, MAX_DIM};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    dims: Vec<usize>,
    h: T,
    origin: Vec<T>,
    strides: Vec<usize>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(dims: Vec<usize>, h: T, origin: Vec<T>) -> Result<Self> {
        let n = dims.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Config(format!("grid dimension {n} outside 1..=4")));
        }
        if origin.len() != n {
            return Err(Error::Config(format!("origin has {} coordinates, grid has {n} axes", origin.len())));
        }
        if dims.contains(&0) {
            return Err(Error::Config("grid axis with zero points".into()));
        }
        if !(h > T::zero() && h.is_finite()) {
            return Err(Error::Config(format!("grid spacing must be positive and finite, got {h}")));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        let mut strides = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Ok(Self { dims, h, origin, strides })
    }

    /// `points` per axis on `[-half_width, half_width]ⁿ`.
    pub fn centered(n: usize, points: usize, half_width: T) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config("centered grid needs at least 2 points per axis".into()));
        }
        let h = (half_width + half_width) / T::from_usize_lossy(points - 1);
        Self::new(vec![points; n], h, vec![-half_width; n])
    }

    /// Grid with spacing `h` whose points include the origin and cover `[-half_width, half_width]ⁿ`.
    pub fn centered_with_spacing(n: usize, h: T, half_width: T) -> Result<Self> {
        let k = (half_width / h).ceil().to_usize().ok_or_else(|| Error::Config("bad half width".into()))?;
        let hw = h * T::from_usize_lossy(k);
        Self::new(vec![2 * k + 1; n], h, vec![-hw; n])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    #[inline]
    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Cell volume `hⁿ`.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.n() as i32)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Index of `flat` along `axis`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        (0..self.n()).map(|a| self.axis_index(flat, a)).collect()
    }

    pub fn coord(&self, flat: usize, axis: usize) -> T {
        self.origin[axis] + T::from_usize_lossy(self.axis_index(flat, axis)) * self.h
    }

    pub fn coords(&self, flat: usize) -> Vec<T> {
        (0..self.n()).map(|a| self.coord(flat, a)).collect()
    }

    /// Neighbor at integer offsets, if it lies inside the box.
    pub fn offset(&self, flat: usize, offsets: &[isize]) -> Option<usize> {
        let mut out = flat as isize;
        for (axis, &o) in offsets.iter().enumerate() {
            if o == 0 {
                continue;
            }
            let k = self.axis_index(flat, axis) as isize + o;
            if k < 0 || k >= self.dims[axis] as isize {
                return None;
            }
            out += o * self.strides[axis] as isize;
        }
        Some(out as usize)
    }

    /// Neighbor along one axis.
    #[inline]
    pub fn step(&self, flat: usize, axis: usize, o: isize) -> Option<usize> {
        let k = self.axis_index(flat, axis) as isize + o;
        if k < 0 || k >= self.dims[axis] as isize {
            None
        } else {
            Some((flat as isize + o * self.strides[axis] as isize) as usize)
        }
    }

    /// Same layout, spacing and origin multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.dims.clone(), self.h * factor, self.origin.iter().map(|&o| o * factor).collect())
    }
}

fn check_values<T: Real>(what: &str, expected: usize, values: &[T]) -> Result<()> {
    if values.len() != expected {
        return Err(Error::InvalidInput(format!("{what}: expected {expected} values, got {}", values.len())));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what}: entry {k}")));
    }
    Ok(())
}

/// One real per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        check_values("scalar field", spec.len(), &values)?;
        Ok(Self { spec, values })
    }

    pub fn constant(spec: &GridSpec<T>, c: T) -> Self {
        Self { spec: spec.clone(), values: vec![c; spec.len()] }
    }

    pub fn from_fn(spec: &GridSpec<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..spec.len()).map(|k| f(&spec.coords(k))).collect();
        Self { spec: spec.clone(), values }
    }

    #[inline]
    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }
}

/// `n` reals per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> VectorField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        check_values("vector field", spec.len() * spec.n(), &values)?;
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: &GridSpec<T>) -> Self {
        Self { spec: spec.clone(), values: vec![T::zero(); spec.len() * spec.n()] }
    }

    #[inline]
    pub fn at(&self, k: usize) -> &[T] {
        let n = self.spec.n();
        &self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize) -> &mut [T] {
        let n = self.spec.n();
        &mut self.values[k * n..(k + 1) * n]
    }
}

/// Symmetric `n×n` matrix per grid point, stored as a packed upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrixField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

impl<T: Real> SymMatrixField<T> {
    pub fn new(spec: GridSpec<T>, values: Vec<T>) -> Result<Self> {
        check_values("symmetric matrix field", spec.len() * packed_len(spec.n()), &values)?;
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: &GridSpec<T>) -> Self {
        Self { spec: spec.clone(), values: vec![T::zero(); spec.len() * packed_len(spec.n())] }
    }

    pub fn from_fn(spec: &GridSpec<T>, f: impl Fn(&[T]) -> SmallMat<T>) -> Self {
        let mut out = Self::zeros(spec);
        for k in 0..spec.len() {
            out.set(k, &f(&spec.coords(k)));
        }
        out
    }

    #[inline]
    pub fn packed(&self, k: usize) -> &[T] {
        let m = packed_len(self.spec.n());
        &self.values[k * m..(k + 1) * m]
    }

    #[inline]
    pub fn at(&self, k: usize) -> SmallMat<T> {
        SmallMat::from_packed(self.spec.n(), self.packed(k))
    }

    #[inline]
    pub fn set(&mut self, k: usize, m: &SmallMat<T>) {
        let p = packed_len(self.spec.n());
        m.write_packed(&mut self.values[k * p..(k + 1) * p]);
    }

    /// Per-point map preserving the layout.
    pub fn map(&self, f: impl Fn(&SmallMat<T>) -> SmallMat<T>) -> Self {
        let mut out = Self::zeros(&self.spec);
        for k in 0..self.spec.len() {
            out.set(k, &f(&self.at(k)));
        }
        out
    }
}
