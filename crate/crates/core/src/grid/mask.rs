use super::GridSpec;
use crate::error::{Error, Result};
use crate::Real;

/// Depth of the frozen layer around the interior (pins u and Du).
pub const BOUNDARY_DEPTH: isize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Interior,
    Boundary,
    Exterior,
}

/// Interior / boundary-layer / exterior classification of grid points.
///
/// A region point is interior when every point within Chebyshev index distance
/// 2 exists and lies in the region; the remaining region points form the
/// boundary layer. Interior stencils (radius 1) therefore never touch the
/// exterior, and the points of radius-1 stencils centered on the inner
/// boundary ring still stay inside the region.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMask<T> {
    pub spec: GridSpec<T>,
    class: Vec<PointClass>,
}

/// All offset vectors in `{-r..=r}ⁿ`, row-major.
pub fn cube_offsets(n: usize, r: isize) -> Vec<Vec<isize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-r..=r).map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o);
                    p
                })
            })
            .collect();
    }
    out
}

impl<T: Real> DomainMask<T> {
    pub fn from_region(spec: &GridSpec<T>, inside: impl Fn(&[T]) -> bool) -> Self {
        let region: Vec<bool> = (0..spec.len()).map(|k| inside(&spec.coords(k))).collect();
        let offsets = cube_offsets(spec.n(), BOUNDARY_DEPTH);
        let class = (0..spec.len())
            .map(|k| {
                if !region[k] {
                    PointClass::Exterior
                } else if offsets.iter().all(|o| spec.offset(k, o).is_some_and(|j| region[j])) {
                    PointClass::Interior
                } else {
                    PointClass::Boundary
                }
            })
            .collect();
        Self { spec: spec.clone(), class }
    }

    /// The whole box; the outer two index layers form the boundary.
    pub fn full_box(spec: &GridSpec<T>) -> Self {
        Self::from_region(spec, |_| true)
    }

    /// Grid points with `|x - center| <= radius`.
    pub fn ball(spec: &GridSpec<T>, center: &[T], radius: T) -> Self {
        let r2 = radius * radius * (T::one() + T::lit(1e-12));
        Self::from_region(spec, |x| x.iter().zip(center).fold(T::zero(), |acc, (&a, &c)| acc + (a - c) * (a - c)) <= r2)
    }

    #[inline]
    pub fn class(&self, k: usize) -> PointClass {
        self.class[k]
    }

    #[inline]
    pub fn is_interior(&self, k: usize) -> bool {
        self.class[k] == PointClass::Interior
    }

    #[inline]
    pub fn is_boundary(&self, k: usize) -> bool {
        self.class[k] == PointClass::Boundary
    }

    #[inline]
    pub fn in_region(&self, k: usize) -> bool {
        self.class[k] != PointClass::Exterior
    }

    pub fn interior(&self) -> Vec<usize> {
        self.indices(PointClass::Interior)
    }

    pub fn boundary(&self) -> Vec<usize> {
        self.indices(PointClass::Boundary)
    }

    fn indices(&self, c: PointClass) -> Vec<usize> {
        (0..self.class.len()).filter(|&k| self.class[k] == c).collect()
    }

    /// Points whose full radius-1 stencil lies in the region: the interior
    /// plus the inner boundary ring. Every stencil that reads an interior
    /// value is centered at one of these points, so they carry the discrete
    /// integral of the volume functional.
    pub fn quadrature(&self) -> Vec<usize> {
        let offsets = cube_offsets(self.spec.n(), 1);
        (0..self.class.len())
            .filter(|&k| {
                self.in_region(k) && offsets.iter().all(|o| self.spec.offset(k, o).is_some_and(|j| self.in_region(j)))
            })
            .collect()
    }

    pub fn require_interior(&self) -> Result<Vec<usize>> {
        let i = self.interior();
        if i.is_empty() {
            Err(Error::Config("mask has an empty interior".into()))
        } else {
            Ok(i)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mask_has_two_layers() {
        let g = GridSpec::centered(2, 9, 1.0).unwrap();
        let m = DomainMask::full_box(&g);
        assert_eq!(m.interior().len(), 25);
        assert_eq!(m.boundary().len(), 81 - 25);
        assert_eq!(m.quadrature().len(), 49);
        assert!(m.is_boundary(g.flat(&[1, 4])));
        assert!(m.is_interior(g.flat(&[2, 2])));
    }

    #[test]
    fn interior_stencils_stay_in_region() {
        let g = GridSpec::centered(2, 21, 2.0).unwrap();
        let m = DomainMask::ball(&g, &[0.0, 0.0], 1.7);
        let offs = cube_offsets(2, 1);
        for k in m.quadrature() {
            for o in &offs {
                let j = g.offset(k, o).unwrap();
                assert!(m.in_region(j));
            }
        }
        for k in m.interior() {
            for o in &cube_offsets(2, 2) {
                assert!(m.in_region(g.offset(k, o).unwrap()));
            }
        }
        assert!(m.class(0) == PointClass::Exterior);
    }

    #[test]
    fn tiny_grid_has_no_interior() {
        let g = GridSpec::centered(2, 4, 1.0).unwrap();
        assert!(DomainMask::full_box(&g).require_interior().is_err());
    }
}
