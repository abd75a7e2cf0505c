//! Jacobi-preconditioned conjugate gradients on `−L_II u_I = L_IB u_B`.

use std::fmt::Write as _;

use super::DivergenceFormOperator;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::phase::check_same_grid;
use crate::sum::pairwise_dot;
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Target relative residual `‖b − Kx‖ / ‖b‖`.
    pub tolerance: f64,
    /// Defaults to 20 × number of unknowns.
    pub max_iterations: Option<usize>,
    /// Record the residual after every iteration.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: None, verbose: false }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Config(format!("solver tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DirichletSolve<T> {
    pub field: ScalarField<T>,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Relative residual per iteration (iteration 0 first); filled when verbose.
    pub history: Vec<f64>,
}

/// CSV log of a residual history: `iteration,relative_residual`.
pub fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,relative_residual\n");
    for (i, r) in history.iter().enumerate() {
        let _ = writeln!(s, "{i},{r:.6e}");
    }
    s
}

/// Interior values of the solution of `∂_j(A^{ij}∂_i f) = 0` with `f` equal to
/// `boundary` off the interior.
pub fn solve_dirichlet<T: Real>(
    op: &DivergenceFormOperator<T>,
    boundary: &ScalarField<T>,
    cfg: &SolverConfig,
) -> Result<ScalarField<T>> {
    solve_dirichlet_detailed(op, boundary, cfg).map(|s| s.field)
}

pub fn solve_dirichlet_detailed<T: Real>(
    op: &DivergenceFormOperator<T>,
    boundary: &ScalarField<T>,
    cfg: &SolverConfig,
) -> Result<DirichletSolve<T>> {
    cfg.validate()?;
    check_same_grid(&boundary.spec, &op.spec)?;
    let nu = op.num_unknowns();
    let max_iter = cfg.max_iterations.unwrap_or(20 * nu.max(1));
    let tol = T::lit(cfg.tolerance);

    let b = op.boundary_rhs(&boundary.values);
    let b_norm = pairwise_dot(&b, &b).sqrt();

    // Start from the mean boundary value: constants lie in the kernel, so
    // constant data is solved before the first iteration.
    let bpts = op.mask.boundary();
    let mean = if bpts.is_empty() {
        T::zero()
    } else {
        crate::sum::pairwise_sum(&bpts.iter().map(|&k| boundary.values[k]).collect::<Vec<_>>())
            / T::from_usize_lossy(bpts.len())
    };
    let mut x = vec![mean; nu];
    let mut ax = vec![T::zero(); nu];
    op.neg_interior_apply(&x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();

    let denom = if b_norm > T::zero() { b_norm } else { T::one() };
    let mut rel = pairwise_dot(&r, &r).sqrt() / denom;
    let mut history = Vec::new();
    if cfg.verbose {
        history.push(rel.as_f64());
    }

    let diag = op.neg_diagonal();
    let inv_d: Vec<T> = diag.iter().map(|&d| T::one() / d).collect();
    let mut z: Vec<T> = r.iter().zip(&inv_d).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = pairwise_dot(&r, &z);
    let mut ap = vec![T::zero(); nu];

    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            let last = rel.as_f64();
            if !cfg.verbose {
                history.push(last);
            }
            return Err(Error::Convergence { iterations: it, last_residual: last, history });
        }
        op.neg_interior_apply(&p, &mut ap);
        let pap = pairwise_dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Convergence { iterations: it, last_residual: rel.as_f64(), history });
        }
        let alpha = rz / pap;
        for i in 0..nu {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        for i in 0..nu {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new = pairwise_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..nu {
            p[i] = z[i] + beta * p[i];
        }
        rel = pairwise_dot(&r, &r).sqrt() / denom;
        it += 1;
        if cfg.verbose {
            history.push(rel.as_f64());
        }
    }

    let mut field = boundary.clone();
    for (u, &k) in op.unknowns.iter().enumerate() {
        field.values[k] = x[u];
    }
    Ok(DirichletSolve { field, iterations: it, relative_residual: rel.as_f64(), history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::assemble;
    use crate::grid::{DomainMask, GridSpec};
    use crate::phase::MetricField;
    use crate::smallmat::SmallMat;

    fn flat(pts: usize) -> (GridSpec<f64>, DivergenceFormOperator<f64>) {
        let spec = GridSpec::centered(2, pts, 1.0).unwrap();
        let op = assemble(&MetricField::constant(&spec, &SmallMat::identity(2)).unwrap(), &DomainMask::full_box(&spec))
            .unwrap();
        (spec, op)
    }

    #[test]
    fn constant_boundary_gives_constant_solution() {
        let (spec, op) = flat(17);
        let sol = solve_dirichlet(&op, &ScalarField::constant(&spec, 7.0), &SolverConfig::default()).unwrap();
        assert!(sol.values.iter().all(|&v| (v - 7.0).abs() < 1e-10));
    }

    #[test]
    fn harmonic_polynomials_are_reproduced() {
        let (spec, op) = flat(17);
        let cfg = SolverConfig::with_tolerance(1e-13);
        for f in [|x: &[f64]| x[0] * x[1], |x: &[f64]| x[0] * x[0] - x[1] * x[1]] {
            let exact = ScalarField::from_fn(&spec, f);
            let mut bnd = exact.clone();
            for k in op.unknowns.iter() {
                bnd.values[*k] = 0.0;
            }
            let sol = solve_dirichlet(&op, &bnd, &cfg).unwrap();
            for k in 0..spec.len() {
                assert!((sol.values[k] - exact.values[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn convergence_failure_carries_history() {
        let (spec, op) = flat(17);
        let bnd = ScalarField::from_fn(&spec, |x| x[0] * x[0]);
        let cfg = SolverConfig { tolerance: 1e-12, max_iterations: Some(2), verbose: true };
        match solve_dirichlet_detailed(&op, &bnd, &cfg) {
            Err(Error::Convergence { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 3);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn verbose_log_is_csv() {
        let (spec, op) = flat(9);
        let bnd = ScalarField::from_fn(&spec, |x| x[0]);
        let cfg = SolverConfig { verbose: true, ..SolverConfig::default() };
        let s = solve_dirichlet_detailed(&op, &bnd, &cfg).unwrap();
        assert_eq!(s.history.len(), s.iterations + 1);
        let csv = history_csv(&s.history);
        assert!(csv.starts_with("iteration,relative_residual\n0,"));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::with_tolerance(0.0).validate().is_err());
        assert!(SolverConfig::with_tolerance(1.5).validate().is_err());
        assert!(SolverConfig { max_iterations: Some(0), ..SolverConfig::default() }.validate().is_err());
    }
}
