//! Divergence-form elliptic operators `f ↦ ∂_j(A^{ij} ∂_i f)` on grid masks,
//! Dirichlet solves, and the Harnack / oscillation / rescaling measurements.

mod cg;
mod measure;
mod operator;

pub use cg::{history_csv, solve_dirichlet, solve_dirichlet_detailed, DirichletSolve, SolverConfig};
pub use measure::{
    ball_points, functional_residual, hamstat_residual, harnack_ratio, oscillation, oscillation_decay,
    oscillation_decay_with, patch_sign, rescale_check, DecayLevel, DecayReport, GraphResidual, RescaleReport,
};
pub use operator::{assemble, DivergenceFormOperator};
