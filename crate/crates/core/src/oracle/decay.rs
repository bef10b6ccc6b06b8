use nalgebra::DVector;

use super::space::{MeasureVector, StateSpace};
use crate::error::{Error, Result};
use crate::lattice::{Displacement, LatticeTorus, SpinConfig};
use crate::scalar::Scalar;

/// Function of the configuration on the box `B(R_f)` around the origin.
///
/// Stored as a table over window indices, with the same lexicographic box
/// enumeration as the rate tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunction<T> {
    dim: usize,
    radius: usize,
    offsets: Vec<Displacement>,
    values: Vec<T>,
}

impl<T: Scalar> LocalFunction<T> {
    pub fn from_fn(dim: usize, radius: usize, mut f: impl FnMut(&[u8]) -> T) -> Result<Self> {
        let side = 2 * radius + 1;
        let n = side.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if dim == 0 || n > 20 {
            return Err(Error::Geometry(format!(
                "box of radius {radius} in dimension {dim} is too large"
            )));
        }
        let r = radius as i64;
        let offsets: Vec<Displacement> = (0..n)
            .map(|mut k| {
                let mut p = vec![0i64; dim];
                for c in p.iter_mut().rev() {
                    *c = (k % side) as i64 - r;
                    k /= side;
                }
                p
            })
            .collect();
        let values = (0..1usize << n)
            .map(|w| {
                let spins: Vec<u8> = (0..n).map(|k| ((w >> k) & 1) as u8).collect();
                f(&spins)
            })
            .collect();
        Ok(Self {
            dim,
            radius,
            offsets,
            values,
        })
    }

    /// `eta(0)`.
    pub fn occupation(dim: usize) -> Self {
        Self::from_fn(dim, 0, |s| if s[0] == 1 { T::one() } else { T::zero() }).expect("single site fits")
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[Displacement] {
        &self.offsets
    }

    /// `(tau_x f)(eta) = f(eta(x + .))`, with `x` given as a site.
    pub fn eval_at(&self, torus: &LatticeTorus, eta: &SpinConfig, x: usize) -> T {
        let w = self
            .offsets
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, b)| acc | ((eta.get(torus.shift(x, b)) as usize) << k));
        self.values[w]
    }
}

/// Least-squares fit of `log y = intercept + slope m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl LogLinearFit {
    /// Returns `None` with fewer than two points or a non-positive value.
    pub fn fit(points: &[(f64, f64)]) -> Option<Self> {
        if points.len() < 2 || points.iter().any(|&(_, y)| !(y > 0.0)) {
            return None;
        }
        let n = points.len() as f64;
        let (mx, my) = points
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y.ln() / n));
        let (sxx, sxy, syy) = points.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &(x, y)| {
            let (dx, dy) = (x - mx, y.ln() - my);
            (a + dx * dx, b + dx * dy, c + dy * dy)
        });
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        Some(Self {
            slope,
            intercept: my - slope * mx,
            r2,
        })
    }

    /// Fitted decay rate `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// `mu_eps(tau_x f) - mu(f)` for every site `x` of the torus.
#[derive(Debug, Clone)]
pub struct DecayProfile<T> {
    pub torus: LatticeTorus,
    pub radius: usize,
    /// First shell outside the overlap of the rate window and the support of `f`: `R + R_f`.
    pub near_field: usize,
    /// `(site, |x|_inf, value)` in site order.
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> DecayProfile<T> {
    /// Largest shell radius used for fitting: `L/2 - R_f`.
    pub fn fit_limit(&self) -> usize {
        (self.torus.side() / 2).saturating_sub(self.radius)
    }

    /// `max_{|x|_inf = m} |value|` for `m = 0..=fit_limit`.
    pub fn envelope(&self) -> Vec<f64> {
        let mut env = vec![0.0f64; self.fit_limit() + 1];
        for &(_, m, v) in &self.entries {
            if m < env.len() {
                env[m] = env[m].max(v.as_f64().abs());
            }
        }
        env
    }

    /// Envelope is non-increasing on shells `near_field..=fit_limit`.
    pub fn envelope_is_monotone(&self) -> bool {
        self.far_envelope().windows(2).all(|w| w[1].1 <= w[0].1)
    }

    fn far_envelope(&self) -> Vec<(f64, f64)> {
        self.envelope()
            .into_iter()
            .enumerate()
            .skip(self.near_field)
            .map(|(m, y)| (m as f64, y))
            .collect()
    }

    /// Log-linear fit of the envelope on shells `near_field..=fit_limit`.
    pub fn fit(&self) -> Option<LogLinearFit> {
        LogLinearFit::fit(&self.far_envelope())
    }
}

/// Exact profile of `mu_eps(tau_x f) - mu(f)` over all torus shifts; `rate_range`
/// is the range `R` of the walker rates that produced `mu_eps`.
pub fn decay_profile<T: Scalar>(
    space: &StateSpace<T>,
    mu_eps: &MeasureVector<T>,
    f: &LocalFunction<T>,
    rate_range: usize,
) -> Result<DecayProfile<T>> {
    let torus = *space.torus();
    if f.dim != torus.dim() || 2 * f.radius + 1 > torus.side() {
        return Err(Error::Geometry(format!(
            "support of radius {} does not fit a {}-dimensional torus of side {}",
            f.radius,
            torus.dim(),
            torus.side()
        )));
    }
    if mu_eps.len() != space.len() {
        return Err(Error::Geometry("measure does not live on this state space".into()));
    }
    let origin = space.function(|eta| f.eval_at(&torus, eta, 0));
    let mean = space.mu().expect(&origin);
    let entries = (0..torus.n_sites())
        .map(|x| {
            let shifted: DVector<T> = space.function(|eta| f.eval_at(&torus, eta, x));
            (x, torus.sup_norm(x), mu_eps.expect(&shifted) - mean)
        })
        .collect();
    Ok(DecayProfile {
        torus,
        radius: f.radius,
        near_field: rate_range + f.radius,
        entries,
    })
}
