use crate::error::{Error, Result};
use crate::grid::{DomainMask, GridSpec, ScalarField, SymMatrixField};
use crate::phase::{check_same_grid, MetricField};
use crate::smallmat::{eig_sym, packed_index};
use crate::Real;

const NOT_UNKNOWN: usize = usize::MAX;

/// Assembled flux-form discretization of `f ↦ ∂_j(A^{ij} ∂_i f)` over the
/// interior points of a mask, together with the weight `w` that turns it into
/// `w⁻¹ ∂_j(A^{ij} ∂_i f)`.
///
/// Diagonal terms use the 3-point flux stencil with `A^{ii}` averaged
/// arithmetically to half points; mixed terms use centered differences on both
/// derivatives. The entry for neighbor `x + a·eᵢ + b·eⱼ` is
/// `ab·(A^{ij}(x + b·eⱼ) + A^{ij}(x + a·eᵢ))/(4h²)`, which is the same pair of
/// floating point numbers seen from either end, so the matrix is exactly
/// symmetric.
#[derive(Clone, Debug)]
pub struct DivergenceFormOperator<T> {
    pub spec: GridSpec<T>,
    pub mask: DomainMask<T>,
    pub coeff: SymMatrixField<T>,
    pub weight: ScalarField<T>,
    /// Interior grid indices, in unknown order.
    pub unknowns: Vec<usize>,
    unknown_of: Vec<usize>,
    row_ptr: Vec<usize>,
    /// Grid index of each stencil entry.
    cols: Vec<usize>,
    /// Unknown index of each stencil entry (`usize::MAX` for boundary points).
    cols_unknown: Vec<usize>,
    vals: Vec<T>,
    /// Smallest eigenvalue of `A` over the interior.
    pub a_min: T,
    /// Largest eigenvalue of `A` over the interior.
    pub a_max: T,
}

/// `A = √det g · g⁻¹` with weight `√det g`.
pub fn assemble<T: Real>(g: &MetricField<T>, mask: &DomainMask<T>) -> Result<DivergenceFormOperator<T>> {
    check_same_grid(&g.spec, &mask.spec)?;
    let spec = &g.spec;
    let mut bad = Vec::new();
    for k in required_points(mask) {
        if !(eig_sym(&g.g.at(k))?.min() > T::zero()) || !(g.sqrt_det_g.values[k] > T::zero()) {
            bad.push(k);
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvalidInput(format!(
            "metric not positive definite at {} point(s); first at {:?}",
            bad.len(),
            spec.coords(bad[0])
        )));
    }
    let coeff = SymMatrixField {
        spec: spec.clone(),
        values: g
            .g_inv
            .values
            .chunks(crate::smallmat::packed_len(spec.n()))
            .zip(&g.sqrt_det_g.values)
            .flat_map(|(c, &w)| c.iter().map(move |&x| w * x))
            .collect(),
    };
    DivergenceFormOperator::from_coefficients(coeff, g.sqrt_det_g.clone(), mask)
}

/// Interior points and everything their stencils read.
fn required_points<T: Real>(mask: &DomainMask<T>) -> Vec<usize> {
    let spec = &mask.spec;
    let mut need = vec![false; spec.len()];
    let offs = crate::grid::cube_offsets(spec.n(), 1);
    for k in mask.interior() {
        for o in &offs {
            if let Some(j) = spec.offset(k, o) {
                need[j] = true;
            }
        }
    }
    (0..spec.len()).filter(|&k| need[k]).collect()
}

impl<T: Real> DivergenceFormOperator<T> {
    /// Operator with explicit coefficients `A` (symmetric, positive definite
    /// where read) and weight `w > 0`.
    pub fn from_coefficients(coeff: SymMatrixField<T>, weight: ScalarField<T>, mask: &DomainMask<T>) -> Result<Self> {
        check_same_grid(&coeff.spec, &mask.spec)?;
        check_same_grid(&weight.spec, &mask.spec)?;
        let spec = coeff.spec.clone();
        let n = spec.n();
        let unknowns = mask.require_interior()?;
        let mut unknown_of = vec![NOT_UNKNOWN; spec.len()];
        for (u, &k) in unknowns.iter().enumerate() {
            unknown_of[k] = u;
        }

        let mut bad = Vec::new();
        for k in required_points(mask) {
            if !(eig_sym(&coeff.at(k))?.min() > T::zero()) || !(weight.values[k] > T::zero()) {
                bad.push(k);
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidInput(format!(
                "coefficients not positive definite at {} point(s); first at {:?}",
                bad.len(),
                spec.coords(bad[0])
            )));
        }

        let (mut a_min, mut a_max) = (T::infinity(), T::neg_infinity());
        for &k in &unknowns {
            let e = eig_sym(&coeff.at(k))?;
            a_min = a_min.min(e.min());
            a_max = a_max.max(e.max());
        }

        let a = |k: usize, i: usize, j: usize| coeff.values[k * crate::smallmat::packed_len(n) + packed_index(n, i, j)];
        let h2 = spec.h() * spec.h();
        let half_inv_h2 = T::lit(0.5) / h2;
        let quarter_inv_h2 = T::lit(0.25) / h2;

        let mut row_ptr = Vec::with_capacity(unknowns.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut off = vec![0isize; n];
        for &k in &unknowns {
            let mut diag = T::zero();
            let mut entries: Vec<(usize, T)> = Vec::with_capacity(2 * n + 2 * n * (n - 1));
            for i in 0..n {
                let si = spec.stride(i);
                let aii = a(k, i, i);
                let up = (aii + a(k + si, i, i)) * half_inv_h2;
                let dn = (aii + a(k - si, i, i)) * half_inv_h2;
                entries.push((k + si, up));
                entries.push((k - si, dn));
                diag = diag - (up + dn);
                for j in (i + 1)..n {
                    for (ai, bj) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
                        off.iter_mut().for_each(|x| *x = 0);
                        off[j] = bj;
                        let kb = spec.offset(k, &off).expect("interior stencil");
                        off[j] = 0;
                        off[i] = ai;
                        let ka = spec.offset(k, &off).expect("interior stencil");
                        off[j] = bj;
                        let target = spec.offset(k, &off).expect("interior stencil");
                        let v = (a(kb, i, j) + a(ka, i, j)) * quarter_inv_h2;
                        entries.push((target, if ai * bj > 0 { v } else { -v }));
                    }
                }
            }
            entries.push((k, diag));
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        let cols_unknown = cols.iter().map(|&c| unknown_of[c]).collect();
        Ok(Self {
            spec,
            mask: mask.clone(),
            coeff,
            weight,
            unknowns,
            unknown_of,
            row_ptr,
            cols,
            cols_unknown,
            vals,
            a_min,
            a_max,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    /// `min λ(A) / max λ(A)` over the interior.
    pub fn ellipticity_ratio(&self) -> T {
        self.a_min / self.a_max
    }

    pub fn unknown_index(&self, grid_index: usize) -> Option<usize> {
        let u = self.unknown_of[grid_index];
        (u != NOT_UNKNOWN).then_some(u)
    }

    /// Stencil of unknown row `r` as `(grid index, coefficient)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `∂_j(A^{ij} ∂_i f)` at each interior point (unknown order), reading `f`
    /// on the whole grid.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        (0..self.unknowns.len()).map(|r| self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * f[c])).collect()
    }

    /// `w⁻¹ ∂_j(A^{ij} ∂_i f)` as a grid field, zero off the interior.
    pub fn apply_weighted(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        check_same_grid(&f.spec, &self.spec)?;
        let lf = self.apply(&f.values);
        let mut out = vec![T::zero(); self.spec.len()];
        for (r, &k) in self.unknowns.iter().enumerate() {
            out[k] = lf[r] / self.weight.values[k];
        }
        Ok(ScalarField { spec: self.spec.clone(), values: out })
    }

    /// `y = −L_II x` (symmetric positive definite).
    pub(crate) fn neg_interior_apply(&self, x: &[T], y: &mut [T]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                let u = self.cols_unknown[e];
                if u != NOT_UNKNOWN {
                    acc = acc + self.vals[e] * x[u];
                }
            }
            *yr = -acc;
        }
    }

    /// `L_IB f_B`: the boundary contribution moved to the right-hand side.
    pub(crate) fn boundary_rhs(&self, f: &[T]) -> Vec<T> {
        (0..self.unknowns.len())
            .map(|r| {
                let mut acc = T::zero();
                for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                    if self.cols_unknown[e] == NOT_UNKNOWN {
                        acc = acc + self.vals[e] * f[self.cols[e]];
                    }
                }
                acc
            })
            .collect()
    }

    /// Diagonal of `−L_II`.
    pub(crate) fn neg_diagonal(&self) -> Vec<T> {
        (0..self.unknowns.len())
            .map(|r| {
                let k = self.unknowns[r];
                -self.row(r).find(|&(c, _)| c == k).map(|e| e.1).unwrap_or(T::zero())
            })
            .collect()
    }

    /// Interior-block entry `L[r][c]` by unknown indices.
    pub fn entry(&self, r: usize, c: usize) -> T {
        let target = self.unknowns[c];
        self.row(r).find(|&(g, _)| g == target).map(|e| e.1).unwrap_or(T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallmat::SmallMat;

    fn flat_op(n: usize, pts: usize, g: f64) -> DivergenceFormOperator<f64> {
        let spec = GridSpec::<f64>::centered(n, pts, 1.0).unwrap();
        let metric = MetricField::constant(&spec, &SmallMat::scalar(n, g)).unwrap();
        assemble(&metric, &DomainMask::full_box(&spec)).unwrap()
    }

    #[test]
    fn identity_metric_gives_standard_laplacian() {
        let op = flat_op(2, 9, 1.0);
        let h2 = op.spec.h() * op.spec.h();
        for r in 0..op.num_unknowns() {
            let row: Vec<(usize, f64)> = op.row(r).filter(|e| e.1 != 0.0).collect();
            assert_eq!(row.len(), 5);
            let k = op.unknowns[r];
            for (c, v) in row {
                let expect = if c == k { -4.0 / h2 } else { 1.0 / h2 };
                assert!((v - expect).abs() < 1e-12 * expect.abs());
            }
        }
        let op3 = flat_op(3, 7, 1.0);
        let h2 = op3.spec.h().powi(2);
        assert!((op3.neg_diagonal()[0] - 6.0 / h2).abs() < 1e-9);
    }

    #[test]
    fn conformal_cancellation_in_two_dimensions() {
        let a = flat_op(2, 9, 1.0);
        let b = flat_op(2, 9, 2.0);
        assert_eq!(a.vals.len(), b.vals.len());
        for (x, y) in a.vals.iter().zip(&b.vals) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        // n = 3: A = 2^{1/2} I.
        let a = flat_op(3, 7, 1.0);
        let b = flat_op(3, 7, 2.0);
        for (x, y) in a.vals.iter().zip(&b.vals) {
            assert!((y - 2f64.sqrt() * x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn linear_functions_are_annihilated_by_constant_coefficients() {
        let spec = GridSpec::<f64>::centered(2, 11, 1.0).unwrap();
        let g = SmallMat::from_rows(&[&[2.0, 0.7], &[0.7, 1.5]]);
        let op = assemble(&MetricField::constant(&spec, &g).unwrap(), &DomainMask::full_box(&spec)).unwrap();
        let f = ScalarField::from_fn(&spec, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0);
        let scale = op.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(op.apply(&f.values).iter().all(|r| r.abs() < 1e-12 * scale));
    }

    #[test]
    fn rejects_indefinite_coefficients() {
        let spec = GridSpec::<f64>::centered(2, 9, 1.0).unwrap();
        let coeff = SymMatrixField::from_fn(&spec, |x| {
            if x[0] > 0.3 {
                SmallMat::diag(&[1.0, -1.0])
            } else {
                SmallMat::identity(2)
            }
        });
        let w = ScalarField::constant(&spec, 1.0);
        assert!(matches!(
            DivergenceFormOperator::from_coefficients(coeff, w, &DomainMask::full_box(&spec)),
            Err(Error::InvalidInput(_))
        ));
    }
}
