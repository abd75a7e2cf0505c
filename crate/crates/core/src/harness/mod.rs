//! Experiment drivers: configuration, analytic potentials, volume descent,
//! least-squares fits and reports.

mod banded;
mod config;
mod experiments;
mod fit;
mod minimize;
mod potential;
mod report;

pub use banded::BandedSpd;
pub use config::{DomainShape, ExperimentConfig, MSetting, ShapeId, WarmStart};
pub use experiments::{
    harnack_suite, harnack_trial, liouville_with, minimize_volume, phase_precondition, rotated_metric, run,
    run_bernstein_sweep, run_harnack, run_liouville, run_phase, run_rotation_check, run_theorem4_check,
    seeded_liouville_potential, HarnackTrial, LiouvilleOutcome, RandomCoefficients, RandomPositiveData, EXPERIMENTS,
};
pub use fit::{quadratic_fit, QuadraticFit};
pub use minimize::{minimize_volume_from, DescentOptions, DescentStep, Minimized};
pub use potential::{Potential, Shape};
pub use report::{Check, Comparison, ExperimentReport};
