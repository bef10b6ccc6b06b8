//! Random walks in dynamic random environments on finite tori.
//!
//! The crate has two halves that are meant to be cross-checked against each
//! other:
//!
//! * [`oracle`] builds the generators of the environment seen by the walker as
//!   dense matrices over the irreducible component of the torus state space and
//!   computes spectral gaps, perturbation norms, invariant densities, the
//!   Dyson-Phillips terms of the perturbed semigroup, velocity series and the
//!   variational lower bound on the diffusion coefficient.
//! * [`coupling`] simulates the environment by a graphical construction and
//!   drives the unperturbed and perturbed walkers from one Poisson clock and one
//!   sequence of uniforms, so the two walkers are coupled pathwise.
//!   [`estimators`] turns replicas into velocity, diffusion and occupation
//!   estimates.
//!
//! Model definitions live in [`lattice`], [`env`] and [`rates`]. The linear
//! algebra is generic over [`Scalar`] (`f32` and `f64`); the simulator and the
//! estimators work in `f64`.

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod coupling;
pub mod env;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod oracle;
pub mod rates;
mod scalar;

pub use check::CheckRecord;
pub use env::{EnvKind, EnvModel, Transition};
pub use error::{Error, Result};
pub use lattice::{Displacement, LatticeTorus, SpinConfig};
pub use rates::{RateFamily, RateSpec};
pub use scalar::{lit, Scalar};

/// Environment model with double-precision density.
pub type Env = EnvModel<f64>;
/// Rate tables in double precision; the simulator consumes this type.
pub type Rates = RateSpec<f64>;
/// Dense operator in double precision.
pub type Operator = oracle::LinearOperator<f64>;
/// Probability vector in double precision.
pub type Measure = oracle::MeasureVector<f64>;
/// State space with double-precision reference measure.
pub type Space = oracle::StateSpace<f64>;
/// Generator bundle in double precision.
pub type Generators = oracle::Generators<f64>;

/// Single-precision variants, mainly useful for cross-checking the numerics.
pub type Operator32 = oracle::LinearOperator<f32>;
pub type Space32 = oracle::StateSpace<f32>;
pub type Rates32 = RateSpec<f32>;
pub type Env32 = EnvModel<f32>;
