use std::collections::{HashMap, VecDeque};

use nalgebra::DVector;

use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::lattice::{LatticeTorus, SpinConfig, Translator};
use crate::scalar::Scalar;

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: usize = 1 << 14;

/// Probability vector over the enumerated states.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector<T: Scalar> {
    weights: DVector<T>,
}

impl<T: Scalar> MeasureVector<T> {
    /// Normalizes nonnegative `weights` to total mass one.
    pub fn from_weights(weights: DVector<T>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::Numerical("measure has a negative or NaN weight".into()));
        }
        let total = weights.sum();
        if !(total > T::zero()) {
            return Err(Error::Numerical("measure has zero total mass".into()));
        }
        Ok(Self {
            weights: weights / total,
        })
    }

    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::from_usize(n).unwrap();
        Self {
            weights: DVector::from_element(n, w),
        }
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn expect(&self, f: &DVector<T>) -> T {
        self.weights.dot(f)
    }

    /// `<f, g>` in `L^2(self)`.
    pub fn inner(&self, f: &DVector<T>, g: &DVector<T>) -> T {
        self.weights
            .iter()
            .zip(f.iter().zip(g.iter()))
            .fold(T::zero(), |acc, (&m, (&a, &b))| acc + m * a * b)
    }

    pub fn norm(&self, f: &DVector<T>) -> T {
        self.inner(f, f).max(T::zero()).sqrt()
    }

    /// `f - mean(f)`.
    pub fn centered(&self, f: &DVector<T>) -> DVector<T> {
        let m = self.expect(f);
        f.map(|x| x - m)
    }

    /// `||f - mean(f)||` in `L^2(self)`.
    pub fn centered_norm(&self, f: &DVector<T>) -> T {
        self.norm(&self.centered(f))
    }

    pub fn total_variation(&self, other: &Self) -> T {
        (&self.weights - &other.weights).abs().sum() / (T::one() + T::one())
    }

    pub fn min_weight(&self) -> T {
        self.weights.min()
    }
}

/// Irreducible component of the torus configurations with the reference
/// measure `mu` (product Bernoulli conditioned on the component).
///
/// The component is the closure of the all-empty configuration under the
/// environment flips and lattice translations. For the independent-flip
/// environment this is every configuration; for the East and FA models it
/// excludes the fully occupied trap.
#[derive(Debug, Clone)]
pub struct StateSpace<T: Scalar> {
    torus: LatticeTorus,
    model: EnvModel<T>,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
    mu: MeasureVector<T>,
}

impl<T: Scalar> StateSpace<T> {
    pub fn build(model: &EnvModel<T>, torus: &LatticeTorus, cap: usize) -> Result<Self> {
        model.validate(torus)?;
        let n = torus.n_sites();
        let shifts: Vec<Translator> = (0..torus.dim())
            .map(|axis| Translator::new(torus, &torus.unit(axis, 1)))
            .collect();
        let start = 0u64;
        let mut seen: HashMap<u64, ()> = HashMap::from([(start, ())]);
        let mut queue = VecDeque::from([start]);
        while let Some(bits) = queue.pop_front() {
            let sigma = SpinConfig::from_bits(bits, n);
            let flips = model
                .transitions_unchecked(torus, &sigma)
                .into_iter()
                .map(|t| sigma.flipped(t.site).bits());
            let moves = shifts.iter().map(|s| s.apply(bits));
            for next in flips.chain(moves) {
                if seen.insert(next, ()).is_none() {
                    if seen.len() > cap {
                        return Err(Error::StateCap {
                            states: seen.len(),
                            cap,
                        });
                    }
                    queue.push_back(next);
                }
            }
        }
        let mut states: Vec<u64> = seen.into_keys().collect();
        states.sort_unstable();
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let weights = DVector::from_iterator(
            states.len(),
            states
                .iter()
                .map(|&s| model.bernoulli_weight(&SpinConfig::from_bits(s, n))),
        );
        let mu = MeasureVector::from_weights(weights)?;
        Ok(Self {
            torus: *torus,
            model: *model,
            states,
            index,
            mu,
        })
    }

    pub fn torus(&self) -> &LatticeTorus {
        &self.torus
    }

    pub fn model(&self) -> &EnvModel<T> {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn config(&self, i: usize) -> SpinConfig {
        SpinConfig::from_bits(self.states[i], self.torus.n_sites())
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.index.get(&bits).copied()
    }

    pub fn mu(&self) -> &MeasureVector<T> {
        &self.mu
    }

    /// Tabulates `f` over the component.
    pub fn function(&self, mut f: impl FnMut(&SpinConfig) -> T) -> DVector<T> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|i| f(&self.config(i))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_component_is_everything() {
        let t = LatticeTorus::new(1, 4).unwrap();
        let s = StateSpace::build(&EnvModel::<f64>::independent(0.3).unwrap(), &t, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.len(), 16);
        assert!((s.mu().weights().sum() - 1.0).abs() < 1e-15);
        // product measure: mu(all empty) = 0.7^4
        assert!((s.mu().weights()[0] - 0.7f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn east_excludes_the_trap() {
        let t = LatticeTorus::new(1, 5).unwrap();
        let s = StateSpace::build(&EnvModel::<f64>::east(0.5).unwrap(), &t, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.len(), 31);
        assert!(s.index_of(0b11111).is_none());
        let w = s.mu().weights();
        assert!(w.iter().all(|&x| (x - 1.0 / 31.0).abs() < 1e-15));
    }

    #[test]
    fn fa_two_dims_component() {
        let t = LatticeTorus::new(2, 3).unwrap();
        let s = StateSpace::build(&EnvModel::fa(1, 0.5).unwrap(), &t, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.len(), 511);
    }

    #[test]
    fn cap_is_enforced() {
        let t = LatticeTorus::new(1, 12).unwrap();
        let err = StateSpace::build(&EnvModel::independent(0.5).unwrap(), &t, 1000).unwrap_err();
        assert!(matches!(err, Error::StateCap { .. }));
    }

    #[test]
    fn measure_helpers() {
        let m = MeasureVector::<f64>::from_weights(DVector::from_vec(vec![1.0, 3.0])).unwrap();
        let f = DVector::from_vec(vec![2.0, -2.0]);
        assert!((m.expect(&f) + 1.0).abs() < 1e-15);
        assert!((m.centered_norm(&f) - 3.0f64.sqrt()).abs() < 1e-12);
        let u = MeasureVector::<f64>::uniform(2);
        assert!((m.total_variation(&u) - 0.25).abs() < 1e-15);
        assert!(MeasureVector::from_weights(DVector::from_vec(vec![-1.0, 2.0])).is_err());
    }
}
