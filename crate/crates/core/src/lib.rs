//! Numerical toolkit for gradient graphs `{(x, Du(x))}` of potentials `u`:
//! Lagrangian phase `θ = Σ arctan λᵢ(D²u)`, the induced metric `I + (D²u)²`,
//! the volume functional and its exact discrete first variation, the rotated
//! coordinates `T(x) = cos(δ/n)x + sin(δ/n)Du(x)` with certified ellipticity
//! constants, divergence-form elliptic solves for the graph Laplacian, and
//! experiment drivers (volume minimization, Harnack and oscillation-decay
//! measurements, rigidity sweeps).
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`, which is what the experiment harness uses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod elliptic;
pub mod error;
pub mod grid;
pub mod harness;
pub mod phase;
pub mod rotation;
pub mod scalar;
pub mod smallmat;
pub mod sum;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridSpec64 = grid::GridSpec<f64>;
pub type ScalarField64 = grid::ScalarField<f64>;
pub type VectorField64 = grid::VectorField<f64>;
pub type SymMatrixField64 = grid::SymMatrixField<f64>;
pub type DomainMask64 = grid::DomainMask<f64>;
pub type SmallMat64 = smallmat::SmallMat<f64>;
pub type PhaseField64 = phase::PhaseField<f64>;
pub type MetricField64 = phase::MetricField<f64>;
pub type RotationParams64 = rotation::RotationParams<f64>;
pub type RotationCertificate64 = rotation::RotationCertificate<f64>;
pub type DivergenceFormOperator64 = elliptic::DivergenceFormOperator<f64>;

pub type GridSpec32 = grid::GridSpec<f32>;
pub type ScalarField32 = grid::ScalarField<f32>;
pub type SymMatrixField32 = grid::SymMatrixField<f32>;
