//! Numerical toolkit for the continuous linear fragmentation equation
//!
//! ```text
//! ∂u/∂t (x,t) = −a(x)u(x,t) + ∫_x^∞ a(y) b(x,y) u(y,t) dy
//! ```
//!
//! posed in weighted spaces `X_ω = L¹((0,∞), ω(x)dx)`. The crate covers
//!
//! - [`kernels`]: fragmentation rates `a` and daughter distributions `b`,
//!   including mass-conservation classification;
//! - [`weights`]: weight families with overflow-safe log evaluation, the
//!   derived weight `(1+c)ω` and the log-derivative comparison test;
//! - [`admissibility`]: the ratio `n_ω(y)/ω(y)` and the sampled verdicts
//!   built on it;
//! - [`weight_builder`]: piecewise-linear majorants, a Volterra marching
//!   solver and the constructive weight pipeline, plus the exponential
//!   weight parameter search;
//! - [`simulator`]: a conservative size-grid discretization and positive
//!   time stepping with a matrix-exponential reference propagator.
//!
//! Every numerical type is generic over [`Scalar`] (`f32` or `f64`); the
//! `f64` aliases at the crate root are what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod simulator;
pub mod weight_builder;
pub mod weights;

mod scalar;

pub use error::{BuildError, KernelError, QuadratureError, SimError, WeightError};
pub use scalar::Scalar;

pub type FragmentKernel = kernels::FragmentKernel<f64>;
pub type RateFunction = kernels::RateFunction<f64>;
pub type MassReport = kernels::MassReport<f64>;
pub type Weight = weights::Weight<f64>;
pub type ComparisonVerdict = weights::ComparisonVerdict<f64>;
pub type QuadratureSpec = quadrature::QuadratureSpec<f64>;
pub type AdmissibilityReport = admissibility::AdmissibilityReport<f64>;
pub type RelativeBoundEstimate = admissibility::RelativeBoundEstimate<f64>;
pub type MajorantH = weight_builder::MajorantH<f64>;
pub type MajorantB = weight_builder::MajorantB<f64>;
pub type VolterraSolution = weight_builder::VolterraSolution<f64>;
pub type ConstructedWeight = weight_builder::ConstructedWeight<f64>;
pub type Grid = simulator::Grid<f64>;
pub type DiscreteGenerator = simulator::DiscreteGenerator<f64>;
pub type DensityState = simulator::DensityState<f64>;
pub type Trajectory = simulator::Trajectory<f64>;
