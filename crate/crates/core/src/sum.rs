//! Fixed-order reductions. Results depend only on the input order, never on
//! scheduling, so repeated runs are bit-identical.

use crate::Real;

const LEAF: usize = 8;

/// Pairwise (binary tree) summation with leaves of 8 sequential terms.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise dot product; same tree shape as [`pairwise_sum`].
pub fn pairwise_dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= LEAF {
        let mut acc = T::zero();
        for (&x, &y) in a.iter().zip(b) {
            acc = acc + x * y;
        }
        return acc;
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

pub fn max_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}
