//! Pathwise coupling of the unperturbed and perturbed walkers.
//!
//! One environment realization (graphical construction with rate-one rings
//! at every site), one Poisson clock of rate `lambda` and one sequence of
//! uniforms drive both walkers. At clock time `t_k` a walker at `z` reads the
//! window of `tau_z sigma_{t_k-}` and jumps by `y` when `U_k` falls in the
//! interval assigned to `y` by the [`CouplingLayout`].

mod layout;
mod rng;
mod sim;

pub use layout::{build_layout, CouplingLayout, Interval};
pub use rng::{replica_stream, Substream};
pub use sim::{
    simulate_coupled, simulate_env, simulate_replicas, CoupledPath, EnvEvent, EnvLog, InitialLaw, Segment, Walker,
    WalkerLog,
};
