use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::layout::CouplingLayout;
use super::rng::{replica_stream, Substream};
use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::lattice::{LatticeTorus, SpinConfig};
use crate::oracle::StateSpace;
use crate::rates::RateSpec;

/// Spin change applied at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvEvent {
    pub time: f64,
    pub site: u32,
    pub spin: u8,
}

/// Environment trajectory on `[0, horizon]`; only effective flips are logged.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvLog {
    pub initial: SpinConfig,
    pub events: Vec<EnvEvent>,
    pub horizon: f64,
}

impl EnvLog {
    /// `sigma_t`, right-continuous.
    pub fn state_at(&self, t: f64) -> SpinConfig {
        let mut sigma = self.initial;
        for e in self.events.iter().take_while(|e| e.time <= t) {
            sigma.set(e.site as usize, e.spin);
        }
        sigma
    }

    pub fn final_state(&self) -> SpinConfig {
        self.state_at(f64::INFINITY)
    }
}

fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Graphical construction: a rate-one ring at every site; at a ring at `x`
/// the proposed spin is 1 with probability `rho` and is accepted when the
/// constraint holds at `x`.
pub fn simulate_env(
    model: &EnvModel<f64>,
    torus: &LatticeTorus,
    eta0: SpinConfig,
    horizon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EnvLog> {
    model.validate(torus)?;
    if !(horizon >= 0.0) {
        return Err(Error::Precondition(format!("horizon {horizon} is negative")));
    }
    let n = torus.n_sites();
    let mut sigma = eta0;
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp_sample(rng, n as f64);
        if t > horizon {
            break;
        }
        let x = rng.random_range(0..n);
        let proposed = u8::from(rng.random::<f64>() < model.rho);
        if proposed != sigma.get(x) && model.constraint(torus, &sigma, x) {
            sigma.set(x, proposed);
            events.push(EnvEvent {
                time: t,
                site: x as u32,
                spin: proposed,
            });
        }
    }
    Ok(EnvLog {
        initial: eta0,
        events,
        horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Walker {
    Unperturbed,
    Perturbed,
}

/// Jump times and positions of one walker; entry 0 is the start at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerLog {
    dim: usize,
    pub times: Vec<f64>,
    positions: Vec<i64>,
}

impl WalkerLog {
    fn new(start: &[i64]) -> Self {
        Self {
            dim: start.len(),
            times: vec![0.0],
            positions: start.to_vec(),
        }
    }

    fn push(&mut self, t: f64, x: &[i64]) {
        self.times.push(t);
        self.positions.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_jumps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn position(&self, k: usize) -> &[i64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    /// `X_t`, right-continuous.
    pub fn position_at(&self, t: f64) -> &[i64] {
        let k = self.times.partition_point(|&s| s <= t).max(1) - 1;
        self.position(k)
    }

    pub fn final_position(&self) -> &[i64] {
        self.position(self.len() - 1)
    }
}

/// Interval `[start, end)` on which the environment seen by a walker is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub seen: SpinConfig,
}

/// Both walkers driven by one environment, one clock and one uniform sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPath {
    pub torus: LatticeTorus,
    pub horizon: f64,
    pub env: EnvLog,
    pub clock: Vec<f64>,
    pub uniforms: Vec<f64>,
    pub unperturbed: WalkerLog,
    pub perturbed: WalkerLog,
    /// First clock time at which the walkers take different decisions.
    pub split_time: Option<f64>,
}

impl CoupledPath {
    pub fn walker(&self, which: Walker) -> &WalkerLog {
        match which {
            Walker::Unperturbed => &self.unperturbed,
            Walker::Perturbed => &self.perturbed,
        }
    }

    /// Whether `X_s != X^eps_s` for some `s <= t`.
    pub fn separated_by(&self, t: f64) -> bool {
        self.split_time.is_some_and(|s| s <= t)
    }

    /// `tau_{X_t} sigma_t` for the chosen walker.
    pub fn env_seen_by_walker(&self, which: Walker, t: f64) -> Result<SpinConfig> {
        if t > self.horizon {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self
            .env
            .state_at(t)
            .translate(&self.torus, self.walker(which).position_at(t)))
    }

    /// Piecewise-constant trajectory of the environment seen by `which` on `[from, horizon]`.
    ///
    /// A walker jump and an environment flip at the same instant are applied
    /// in that order.
    pub fn for_each_segment(&self, which: Walker, from: f64, mut visit: impl FnMut(Segment)) {
        let log = self.walker(which);
        let mut sigma = self.env.initial;
        let mut k = 0usize;
        let mut e = 0usize;
        let mut start = 0.0f64;
        loop {
            let next_jump = log.times.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let next_flip = self.env.events.get(e).map_or(f64::INFINITY, |ev| ev.time);
            let end = next_jump.min(next_flip).min(self.horizon);
            if end > from {
                let seen = sigma.translate(&self.torus, log.position(k));
                visit(Segment {
                    start: start.max(from),
                    end,
                    seen,
                });
            }
            if end >= self.horizon {
                break;
            }
            if next_jump <= next_flip {
                k += 1;
            } else {
                let ev = self.env.events[e];
                sigma.set(ev.site as usize, ev.spin);
                e += 1;
            }
            start = end;
        }
    }

    pub fn segments(&self, which: Walker, from: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        self.for_each_segment(which, from, |s| out.push(s));
        out
    }
}

/// How the initial environment of each replica is chosen.
#[derive(Debug, Clone)]
pub enum InitialLaw {
    Fixed(SpinConfig),
    /// Exact draw from the reference measure of an enumerated component.
    Reference(Arc<StateSpace<f64>>),
    /// Product Bernoulli(rho), redrawn while it is the fully occupied trap of a
    /// constrained model. Exact for the independent-flip, East and FA-1f
    /// components.
    Product,
}

impl InitialLaw {
    fn sample(&self, model: &EnvModel<f64>, torus: &LatticeTorus, rng: &mut ChaCha8Rng) -> SpinConfig {
        match self {
            InitialLaw::Fixed(eta) => *eta,
            InitialLaw::Reference(space) => {
                let u: f64 = rng.random();
                let w = space.mu().weights();
                let mut acc = 0.0;
                let i = w
                    .iter()
                    .position(|&p| {
                        acc += p;
                        u < acc
                    })
                    .unwrap_or(space.len() - 1);
                space.config(i)
            }
            InitialLaw::Product => loop {
                let spins: Vec<u8> = (0..torus.n_sites())
                    .map(|_| u8::from(rng.random::<f64>() < model.rho))
                    .collect();
                let eta = SpinConfig::from_spins(&spins);
                if model.kind == crate::env::EnvKind::IndependentFlip || eta.vacancies() > 0 {
                    break eta;
                }
            },
        }
    }
}

/// Simulates replica `replica` of the coupled process up to `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled(
    model: &EnvModel<f64>,
    spec: &RateSpec<f64>,
    layout: &CouplingLayout,
    torus: &LatticeTorus,
    initial: &InitialLaw,
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<CoupledPath> {
    spec.check_torus(torus)?;
    if layout.n_displacements() != spec.n_displacements() || layout.n_windows() != spec.n_windows() {
        return Err(Error::Precondition("layout was built for different rates".into()));
    }
    let eta0 = initial.sample(model, torus, &mut replica_stream(seed, replica, Substream::Initial));
    if let InitialLaw::Reference(space) = initial {
        if space.torus() != torus {
            return Err(Error::Geometry("reference space lives on another torus".into()));
        }
    }
    let env = simulate_env(
        model,
        torus,
        eta0,
        horizon,
        &mut replica_stream(seed, replica, Substream::Environment),
    )?;

    let mut clock_rng = replica_stream(seed, replica, Substream::Clock);
    let mut unif_rng = replica_stream(seed, replica, Substream::Uniforms);
    let mut clock = Vec::new();
    let mut uniforms = Vec::new();
    if layout.lambda() > 0.0 {
        let mut t = exp_sample(&mut clock_rng, layout.lambda());
        while t <= horizon {
            clock.push(t);
            uniforms.push(unif_rng.random::<f64>());
            t += exp_sample(&mut clock_rng, layout.lambda());
        }
    }

    let origin = vec![0i64; torus.dim()];
    let mut x = origin.clone();
    let mut xe = origin.clone();
    let mut unperturbed = WalkerLog::new(&origin);
    let mut perturbed = WalkerLog::new(&origin);
    let mut split_time = None;
    let mut sigma = eta0;
    let mut e = 0usize;
    let displacements = spec.displacements();
    for (&t, &u) in clock.iter().zip(&uniforms) {
        // strict left limit: flips at exactly t come after the jump
        while e < env.events.len() && env.events[e].time < t {
            sigma.set(env.events[e].site as usize, env.events[e].spin);
            e += 1;
        }
        let w = spec.window_from_site(torus, sigma.bits(), torus.site_of(&x));
        let we = spec.window_from_site(torus, sigma.bits(), torus.site_of(&xe));
        let jump = layout.jump_base(w, u);
        let jump_e = layout.jump_perturbed(we, u);
        if split_time.is_none() && jump != jump_e {
            split_time = Some(t);
        }
        if let Some(i) = jump {
            x.iter_mut().zip(&displacements[i]).for_each(|(a, b)| *a += b);
            unperturbed.push(t, &x);
        }
        if let Some(i) = jump_e {
            xe.iter_mut().zip(&displacements[i]).for_each(|(a, b)| *a += b);
            perturbed.push(t, &xe);
        }
    }
    Ok(CoupledPath {
        torus: *torus,
        horizon,
        env,
        clock,
        uniforms,
        unperturbed,
        perturbed,
        split_time,
    })
}

/// Replicas `0..n` in parallel, returned in replica order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_replicas(
    model: &EnvModel<f64>,
    spec: &RateSpec<f64>,
    layout: &CouplingLayout,
    torus: &LatticeTorus,
    initial: &InitialLaw,
    horizon: f64,
    seed: u64,
    n: usize,
) -> Result<Vec<CoupledPath>> {
    (0..n as u64)
        .into_par_iter()
        .map(|r| simulate_coupled(model, spec, layout, torus, initial, horizon, seed, r))
        .collect()
}
