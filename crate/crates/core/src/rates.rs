//! Finite-range walker rates stored as dense tables over local windows.
//!
//! A rate function `r(y, eta)` with range `R` only reads `eta` on the box
//! `B(R) = {b : |b|_inf <= R}`. The box is enumerated lexicographically and
//! the restriction of `eta` to it is packed into a window index, bit `k`
//! holding `eta(b_k)`. Both the base rates `r` and the perturbation `r_hat`
//! are tables indexed by `(window, displacement)`.

use crate::error::{Error, Result};
use crate::lattice::{Displacement, LatticeTorus, SpinConfig};
use crate::scalar::{lit, Scalar};

/// Largest box size supported by the window tables.
const MAX_WINDOW_SITES: usize = 20;

/// Built-in walker families.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFamily {
    /// `r(+-1) = 1/2`, `r_hat(+-1, eta) = +-s (2 eta(0) - 1)`.
    Interface {
        strength: f64,
    },
    /// `r(+-1, eta) = (1 - eta(0))(1 - eta(+-1))`, tilted by a field of strength `s`.
    DrivenProbe {
        strength: f64,
    },
    /// Environment-independent walk with rate 1/2 to each nearest neighbour and no perturbation.
    Decoupled,
    Custom(String),
}

impl RateFamily {
    pub fn name(&self) -> &str {
        match self {
            RateFamily::Interface { .. } => "interface",
            RateFamily::DrivenProbe { .. } => "driven_probe",
            RateFamily::Decoupled => "decoupled",
            RateFamily::Custom(name) => name,
        }
    }

    pub fn strength(&self) -> f64 {
        match self {
            RateFamily::Interface { strength } | RateFamily::DrivenProbe { strength } => *strength,
            _ => 0.0,
        }
    }
}

/// Restriction of a configuration to `B(R)`, as seen from the walker.
#[derive(Debug, Clone, Copy)]
pub struct LocalWindow<'a> {
    bits: u64,
    offsets: &'a [Displacement],
}

impl LocalWindow<'_> {
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// Spin at offset `b` relative to the walker. Panics if `b` is outside the box.
    pub fn at(&self, b: &[i64]) -> u8 {
        let k = self
            .offsets
            .iter()
            .position(|o| o.as_slice() == b)
            .expect("offset inside the window box");
        ((self.bits >> k) & 1) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSpec<T> {
    dim: usize,
    range: usize,
    family: RateFamily,
    offsets: Vec<Displacement>,
    displacements: Vec<Displacement>,
    base: Vec<T>,
    pert: Vec<T>,
}

/// Mean local drift of the walker, perturbed and unperturbed.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpObservable<T> {
    /// `j_eps(eta) = sum_y y r_eps(y, eta)`.
    pub perturbed: Vec<T>,
    /// `j(eta) = sum_y y r(y, eta)`.
    pub base: Vec<T>,
}

fn box_points(dim: usize, range: usize) -> Vec<Displacement> {
    let r = range as i64;
    let mut pts = vec![vec![]];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-r..=r).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    pts
}

fn euclid(y: &[i64]) -> f64 {
    y.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
}

impl<T: Scalar> RateSpec<T> {
    /// Tabulates `(r, r_hat)` from a closure over displacement and window.
    pub fn from_fn<F>(dim: usize, range: usize, family: RateFamily, mut rates: F) -> Result<Self>
    where
        F: FnMut(&[i64], LocalWindow<'_>) -> (T, T),
    {
        if dim == 0 || range == 0 {
            return Err(Error::InvalidRates("dimension and range must be positive".into()));
        }
        let offsets = box_points(dim, range);
        if offsets.len() > MAX_WINDOW_SITES {
            return Err(Error::InvalidRates(format!(
                "window box has {} sites, at most {MAX_WINDOW_SITES} supported",
                offsets.len()
            )));
        }
        let displacements: Vec<Displacement> = offsets.iter().filter(|y| y.iter().any(|&c| c != 0)).cloned().collect();
        let n_windows = 1usize << offsets.len();
        let nd = displacements.len();
        let mut base = Vec::with_capacity(n_windows * nd);
        let mut pert = Vec::with_capacity(n_windows * nd);
        for w in 0..n_windows {
            let window = LocalWindow {
                bits: w as u64,
                offsets: &offsets,
            };
            for y in &displacements {
                let (r, rh) = rates(y, window);
                base.push(r);
                pert.push(rh);
            }
        }
        let spec = Self {
            dim,
            range,
            family,
            offsets,
            displacements,
            base,
            pert,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Walker that sticks to space-time interfaces: symmetric base rates 1/2
    /// and perturbation `r_hat(+-1, eta) = +-s (2 eta(0) - 1)`.
    pub fn interface(strength: T) -> Result<Self> {
        let half = lit::<T>(0.5);
        Self::from_fn(
            1,
            1,
            RateFamily::Interface {
                strength: strength.as_f64(),
            },
            |y, w| {
                let sign = lit::<T>(y[0] as f64);
                let spin = lit::<T>(2.0 * w.at(&[0]) as f64 - 1.0);
                (half, sign * strength * spin)
            },
        )
    }

    /// Probe driven by a field `s`: moves only between empty sites, with
    /// forward/backward rates tilted to `2/(1+e^{-s})` and `2/(1+e^{s})`.
    pub fn driven_probe(strength: T) -> Result<Self> {
        let one = T::one();
        let two = lit::<T>(2.0);
        let forward = two / (one + (-strength).exp());
        let backward = two / (one + strength.exp());
        Self::from_fn(
            1,
            1,
            RateFamily::DrivenProbe {
                strength: strength.as_f64(),
            },
            |y, w| {
                let open = (1 - w.at(&[0])) * (1 - w.at(y));
                let r = lit::<T>(open as f64);
                let tilt = if y[0] > 0 { forward } else { backward };
                (r, r * (tilt - one))
            },
        )
    }

    /// Simple walk with rate 1/2 to each nearest neighbour, no perturbation.
    pub fn decoupled(dim: usize) -> Result<Self> {
        let half = lit::<T>(0.5);
        Self::from_fn(dim, 1, RateFamily::Decoupled, |y, _| {
            let nearest = y.iter().map(|c| c.abs()).sum::<i64>() == 1;
            (if nearest { half } else { T::zero() }, T::zero())
        })
    }

    fn validate(&self) -> Result<()> {
        for (k, (&r, &rh)) in self.base.iter().zip(&self.pert).enumerate() {
            let (w, i) = (k / self.n_displacements(), k % self.n_displacements());
            if !(r >= T::zero()) {
                return Err(Error::InvalidRates(format!(
                    "negative base rate r({:?}, window {w}) = {r}",
                    self.displacements[i]
                )));
            }
            if !(r + rh >= T::zero()) {
                return Err(Error::InvalidRates(format!(
                    "negative perturbed rate r+r_hat({:?}, window {w}) = {}",
                    self.displacements[i],
                    r + rh
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn family(&self) -> &RateFamily {
        &self.family
    }

    /// Nonzero displacements of `B(R)` in lexicographic order.
    pub fn displacements(&self) -> &[Displacement] {
        &self.displacements
    }

    pub fn n_displacements(&self) -> usize {
        self.displacements.len()
    }

    /// Sites of `B(R)` in window-bit order.
    pub fn offsets(&self) -> &[Displacement] {
        &self.offsets
    }

    pub fn n_windows(&self) -> usize {
        1 << self.offsets.len()
    }

    #[inline]
    pub fn base_rate(&self, window: usize, i: usize) -> T {
        self.base[window * self.displacements.len() + i]
    }

    #[inline]
    pub fn pert_rate(&self, window: usize, i: usize) -> T {
        self.pert[window * self.displacements.len() + i]
    }

    #[inline]
    pub fn perturbed_rate(&self, window: usize, i: usize) -> T {
        self.base_rate(window, i) + self.pert_rate(window, i)
    }

    /// Checks that `B(R)` embeds in `torus` without wrapping onto itself.
    pub fn check_torus(&self, torus: &LatticeTorus) -> Result<()> {
        if torus.dim() != self.dim {
            return Err(Error::Geometry(format!(
                "rates are {}-dimensional but the torus is {}-dimensional",
                self.dim,
                torus.dim()
            )));
        }
        if 2 * self.range + 1 > torus.side() {
            return Err(Error::Geometry(format!(
                "range {} needs side >= {}, got {}",
                self.range,
                2 * self.range + 1,
                torus.side()
            )));
        }
        Ok(())
    }

    /// Window of `tau_x eta` on `B(R)`.
    pub fn window_at(&self, torus: &LatticeTorus, eta: &SpinConfig, x: &[i64]) -> usize {
        let origin = torus.site_of(x);
        self.window_from_site(torus, eta.bits(), origin)
    }

    #[inline]
    pub(crate) fn window_from_site(&self, torus: &LatticeTorus, bits: u64, origin: usize) -> usize {
        self.offsets.iter().enumerate().fold(0usize, |acc, (k, b)| {
            acc | ((((bits >> torus.shift(origin, b)) & 1) as usize) << k)
        })
    }

    pub fn index_of(&self, y: &[i64]) -> Option<usize> {
        self.displacements.iter().position(|d| d.as_slice() == y)
    }

    /// Evaluates `(r(y, tau_x eta), r_hat(y, tau_x eta))`.
    pub fn rate_eval(&self, torus: &LatticeTorus, y: &[i64], eta: &SpinConfig, x: &[i64]) -> Result<(T, T)> {
        if y.len() != self.dim || y.iter().any(|c| c.unsigned_abs() as usize > self.range) {
            return Err(Error::OutOfRange {
                displacement: y.to_vec(),
                range: self.range,
            });
        }
        self.check_torus(torus)?;
        let Some(i) = self.index_of(y) else {
            return Ok((T::zero(), T::zero()));
        };
        let w = self.window_at(torus, eta, x);
        Ok((self.base_rate(w, i), self.pert_rate(w, i)))
    }

    /// Drift of the walker standing at the origin of `eta`.
    pub fn jump_observable(&self, torus: &LatticeTorus, eta: &SpinConfig) -> JumpObservable<T> {
        let origin = vec![0; self.dim];
        self.jump_at_window(self.window_at(torus, eta, &origin))
    }

    pub fn jump_at_window(&self, window: usize) -> JumpObservable<T> {
        let mut perturbed = vec![T::zero(); self.dim];
        let mut base = vec![T::zero(); self.dim];
        for (i, y) in self.displacements.iter().enumerate() {
            let r = self.base_rate(window, i);
            let re = r + self.pert_rate(window, i);
            for (k, &c) in y.iter().enumerate() {
                let c = lit::<T>(c as f64);
                base[k] += c * r;
                perturbed[k] += c * re;
            }
        }
        JumpObservable { perturbed, base }
    }

    fn sup_over_windows(&self, i: usize, f: impl Fn(T, T) -> T) -> T {
        (0..self.n_windows())
            .map(|w| f(self.base_rate(w, i), self.pert_rate(w, i)))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `beta = sum_y |y| sup_eta |r_hat(y, eta)|`.
    pub fn beta_norm(&self) -> T {
        (0..self.n_displacements())
            .map(|i| lit::<T>(euclid(&self.displacements[i])) * self.sup_over_windows(i, |_, h| h.abs()))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `sum_y |y|^n sup_eta r_eps(y, eta)`.
    pub fn moment(&self, n: i32) -> T {
        (0..self.n_displacements())
            .map(|i| lit::<T>(euclid(&self.displacements[i]).powi(n)) * self.sup_over_windows(i, |r, h| r + h))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `sum_y sup_eta |r_hat(y, eta)|`; twice this bounds the L2 norm of the perturbation.
    pub fn pert_sup_sum(&self) -> T {
        (0..self.n_displacements())
            .map(|i| self.sup_over_windows(i, |_, h| h.abs()))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `sum_y sup_eta r(y, eta)`.
    pub fn base_sup_sum(&self) -> T {
        (0..self.n_displacements())
            .map(|i| self.sup_over_windows(i, |r, _| r))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `c(eps) = sup_eta sum_y |r_hat(y, eta)|`, the per-unit-time decoupling rate.
    pub fn decoupling_rate(&self) -> T {
        (0..self.n_windows())
            .map(|w| {
                (0..self.n_displacements())
                    .map(|i| self.pert_rate(w, i).abs())
                    .fold(T::zero(), |a, b| a + b)
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn has_perturbation(&self) -> bool {
        self.pert.iter().any(|&h| h != T::zero())
    }

    /// Same base rates with the perturbation multiplied by `factor`.
    pub fn scale_perturbation(&self, factor: T) -> Result<Self> {
        let mut out = self.clone();
        out.pert.iter_mut().for_each(|h| *h *= factor);
        out.family = RateFamily::Custom(format!("{}*{}", self.family.name(), factor));
        out.validate()?;
        Ok(out)
    }

    /// Same base rates, no perturbation.
    pub fn without_perturbation(&self) -> Self {
        let mut out = self.clone();
        out.pert.iter_mut().for_each(|h| *h = T::zero());
        out
    }

    /// Converts the tables to another scalar type.
    pub fn cast<U: Scalar>(&self) -> RateSpec<U> {
        RateSpec {
            dim: self.dim,
            range: self.range,
            family: self.family.clone(),
            offsets: self.offsets.clone(),
            displacements: self.displacements.clone(),
            base: self.base.iter().map(|&x| lit::<U>(x.as_f64())).collect(),
            pert: self.pert.iter().map(|&x| lit::<U>(x.as_f64())).collect(),
        }
    }
}
