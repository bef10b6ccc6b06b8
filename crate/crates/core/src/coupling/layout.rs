use crate::error::{Error, Result};
use crate::rates::RateSpec;

/// Half-open sub-interval `[lo, hi)` of `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    #[inline]
    pub fn contains(&self, u: f64) -> bool {
        self.lo <= u && u < self.hi
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// Interval tables realizing the jump decisions of both walkers.
///
/// For window `w` and displacement `y_i`, `base(w, i)` is `I(y_i, w)` with
/// length `r / lambda`. The perturbed set `I_eps(y_i, w)` is the union of
/// `core(w, i)`, the left part of `I(y_i, w)` of length `(r + min(0, r_hat)) / lambda`,
/// and `extra(w, i)` of length `max(0, r_hat) / lambda`, carved from the slack
/// above `sum_j r(y_j, w) / lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingLayout {
    lambda: f64,
    n_disp: usize,
    base: Vec<Interval>,
    core: Vec<Interval>,
    extra: Vec<Interval>,
}

impl CouplingLayout {
    /// Clock rate `lambda = max_w sum_y (r + max(0, r_hat))`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_windows(&self) -> usize {
        self.base.len() / self.n_disp.max(1)
    }

    pub fn n_displacements(&self) -> usize {
        self.n_disp
    }

    pub fn base(&self, w: usize, i: usize) -> Interval {
        self.base[w * self.n_disp + i]
    }

    /// The two pieces of `I_eps(y_i, w)`.
    pub fn perturbed(&self, w: usize, i: usize) -> [Interval; 2] {
        let k = w * self.n_disp + i;
        [self.core[k], self.extra[k]]
    }

    /// Displacement index chosen by the unperturbed walker, if any.
    #[inline]
    pub fn jump_base(&self, w: usize, u: f64) -> Option<usize> {
        let row = &self.base[w * self.n_disp..(w + 1) * self.n_disp];
        row.iter().position(|iv| iv.contains(u))
    }

    /// Displacement index chosen by the perturbed walker, if any.
    #[inline]
    pub fn jump_perturbed(&self, w: usize, u: f64) -> Option<usize> {
        let s = w * self.n_disp;
        (0..self.n_disp).find(|&i| self.core[s + i].contains(u) || self.extra[s + i].contains(u))
    }

    /// Length of the perturbed "no jump" remainder `J_eps(w)`.
    pub fn perturbed_rest(&self, w: usize) -> f64 {
        let s = w * self.n_disp;
        1.0 - (s..s + self.n_disp)
            .map(|k| self.core[k].len() + self.extra[k].len())
            .sum::<f64>()
    }
}

/// Deterministic layout: `I(y_i, w)` placed consecutively from 0 in displacement order.
pub fn build_layout(spec: &RateSpec<f64>) -> Result<CouplingLayout> {
    let nd = spec.n_displacements();
    let nw = spec.n_windows();
    let mut lambda = 0.0f64;
    for w in 0..nw {
        let mut total = 0.0;
        for i in 0..nd {
            let (r, h) = (spec.base_rate(w, i), spec.pert_rate(w, i));
            if r < 0.0 || r + h < 0.0 {
                return Err(Error::InvalidRates(format!(
                    "negative rate at window {w}, displacement {:?}",
                    spec.displacements()[i]
                )));
            }
            total += r + h.max(0.0);
        }
        lambda = lambda.max(total);
    }
    let empty = Interval { lo: 0.0, hi: 0.0 };
    let mut base = vec![empty; nw * nd];
    let mut core = vec![empty; nw * nd];
    let mut extra = vec![empty; nw * nd];
    if lambda > 0.0 {
        for w in 0..nw {
            let mut cursor = 0.0;
            for i in 0..nd {
                let r = spec.base_rate(w, i) / lambda;
                let h = spec.pert_rate(w, i) / lambda;
                base[w * nd + i] = Interval {
                    lo: cursor,
                    hi: cursor + r,
                };
                core[w * nd + i] = Interval {
                    lo: cursor,
                    hi: cursor + r + h.min(0.0),
                };
                cursor += r;
            }
            for i in 0..nd {
                let h = spec.pert_rate(w, i).max(0.0) / lambda;
                extra[w * nd + i] = Interval {
                    lo: cursor,
                    hi: cursor + h,
                };
                cursor += h;
            }
        }
    }
    Ok(CouplingLayout {
        lambda,
        n_disp: nd,
        base,
        core,
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn interface_layout_on_occupied_window() {
        let spec = RateSpec::interface(0.1).unwrap();
        let l = build_layout(&spec).unwrap();
        assert!(close(l.lambda(), 1.1));
        // window index 2 has eta(0) = 1 and empty neighbours; displacement 0 is -1, 1 is +1
        let (w, minus, plus) = (2, 0, 1);
        let lam = 1.1;
        assert!(close(l.base(w, minus).hi, 0.5 / lam));
        assert!(close(l.base(w, plus).lo, 0.5 / lam) && close(l.base(w, plus).hi, 1.0 / lam));
        let [c, e] = l.perturbed(w, minus);
        assert!(close(c.len(), 0.4 / lam) && e.is_empty());
        let [c, e] = l.perturbed(w, plus);
        assert!(close(c.len(), 0.5 / lam) && close(e.lo, 1.0 / lam) && close(e.hi, 1.1 / lam));
        assert!(close(l.perturbed_rest(w), 1.0 - 1.0 / lam));
    }

    #[test]
    fn zero_perturbation_gives_identical_sets() {
        let spec = RateSpec::driven_probe(0.0).unwrap();
        let l = build_layout(&spec).unwrap();
        for w in 0..spec.n_windows() {
            for i in 0..spec.n_displacements() {
                let [c, e] = l.perturbed(w, i);
                assert_eq!(c, l.base(w, i));
                assert!(e.is_empty());
            }
        }
    }

    #[test]
    fn negative_perturbed_rate_is_rejected() {
        // tables are validated on construction, so negative perturbed rates never reach the layout
        assert!(RateSpec::<f64>::interface(0.6).is_err());
        let spec = RateSpec::interface(0.5).unwrap();
        assert!(close(build_layout(&spec).unwrap().perturbed(2, 0)[0].len(), 0.0));
    }

    proptest! {
        #[test]
        fn measure_constraints_hold(s in -0.5f64..0.5, probe in any::<bool>()) {
            let spec = if probe { RateSpec::driven_probe(s * 4.0).unwrap() } else { RateSpec::interface(s).unwrap() };
            let l = build_layout(&spec).unwrap();
            let lam = l.lambda();
            for w in 0..spec.n_windows() {
                let mut total = 0.0;
                for i in 0..spec.n_displacements() {
                    let (r, h) = (spec.base_rate(w, i), spec.pert_rate(w, i));
                    let b = l.base(w, i);
                    let [c, e] = l.perturbed(w, i);
                    prop_assert!(close(b.len(), r / lam));
                    prop_assert!(close(c.len() + e.len(), (r + h) / lam));
                    prop_assert!(close(b.overlap(&c) + b.overlap(&e), (r + h.min(0.0)) / lam));
                    prop_assert!(close(b.overlap(&c) + b.overlap(&e) + h.max(0.0) / lam, c.len() + e.len()));
                    prop_assert!(e.hi <= 1.0 + 1e-12);
                    for j in 0..i {
                        prop_assert!(b.overlap(&l.base(w, j)) == 0.0);
                        let [cj, ej] = l.perturbed(w, j);
                        prop_assert!(c.overlap(&cj) + c.overlap(&ej) + e.overlap(&cj) + e.overlap(&ej) == 0.0);
                    }
                    total += c.len() + e.len();
                }
                prop_assert!(close(total + l.perturbed_rest(w), 1.0));
                prop_assert!(l.perturbed_rest(w) >= -1e-12);
            }
        }
    }
}
