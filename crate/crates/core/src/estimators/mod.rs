//! Monte Carlo estimators over replicas of the coupled process.
//!
//! Every standard error is computed across independent replicas; within a
//! replica only time averages are taken.

mod diffusion;
mod fclt;
mod occupation;
mod report;
mod velocity;

pub use diffusion::{estimate_diffusion, estimate_diffusion_batched, DiffusionReport};
pub use fclt::{fclt_diagnostics, FcltReport, SampledPaths};
pub use occupation::{burn_in, estimate_occupation, time_average, OccupationReport};
pub use report::{linear_fit, mean_and_se, LinearFit, MCReport};
pub use velocity::{estimate_velocity, estimate_velocity_mart, MartingaleVelocity};
