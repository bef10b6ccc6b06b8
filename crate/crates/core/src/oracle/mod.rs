//! Exact finite-state computations on the irreducible component of a torus.
//!
//! Every quantity here is a deterministic function of the model, the rates and
//! the torus; the Monte Carlo side of the crate is validated against it.

mod bounds;
mod decay;
mod diffusion;
mod dyson;
mod expansion;
mod gap;
mod generators;
pub mod linalg;
mod norm;
mod operator;
mod space;
mod stationary;
mod velocity;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bounds::{semigroup_bounds_check, BoundsConfig};
pub use decay::{decay_profile, DecayProfile, LocalFunction, LogLinearFit};
pub use diffusion::{diffusion_variational, VariationalDiffusion};
pub use dyson::{dyson_checks, dyson_term, dyson_terms};
pub use expansion::{density_expansion, ExpansionReport};
pub use gap::{contraction_check, spectral_gap, SpectralGap};
pub use generators::{build_generators, build_on_space, Generators};
pub use norm::{l2_operator_norm, OperatorNorm};
pub use operator::LinearOperator;
pub use space::{MeasureVector, StateSpace, DEFAULT_STATE_CAP};
pub use stationary::{closeness_checks, poisson_solve, stationary_solve, Stationary};
pub use velocity::{velocity, VelocityReport};

use crate::scalar::{lit, Scalar};

/// `count` test functions with i.i.d. Uniform(-1, 1) entries, reproducible from `seed`.
pub fn random_battery<T: Scalar>(n: usize, count: usize, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(n, |_, _| lit::<T>(rng.random_range(-1.0..1.0))))
        .collect()
}

/// `||f||_inf` of `f - mu(f)`.
pub(crate) fn centered_sup<T: Scalar>(mu: &MeasureVector<T>, f: &DVector<T>) -> T {
    mu.centered(f).amax()
}
