//! Spin-flip environments: independent flips and kinetically constrained models.

use crate::error::{Error, Result};
use crate::lattice::{LatticeTorus, SpinConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    /// No constraint; every site flips towards Bernoulli(rho).
    IndependentFlip,
    /// One-dimensional East model: a site may flip if its right neighbour is empty.
    East,
    /// Fredrickson-Andersen model: at least `j` empty nearest neighbours.
    FaJf(usize),
}

/// A reversible spin-flip environment with equilibrium density `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvModel<T> {
    pub kind: EnvKind,
    pub rho: T,
}

/// A single allowed flip out of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub site: usize,
    pub new_spin: u8,
    pub rate: T,
}

impl<T: Scalar> EnvModel<T> {
    pub fn new(kind: EnvKind, rho: T) -> Result<Self> {
        if !(rho > T::zero() && rho < T::one()) {
            return Err(Error::UnsupportedModel(format!("density must lie in (0,1), got {rho}")));
        }
        if let EnvKind::FaJf(0) = kind {
            return Err(Error::UnsupportedModel("FA-jf requires j >= 1".into()));
        }
        Ok(Self { kind, rho })
    }

    pub fn independent(rho: T) -> Result<Self> {
        Self::new(EnvKind::IndependentFlip, rho)
    }

    pub fn east(rho: T) -> Result<Self> {
        Self::new(EnvKind::East, rho)
    }

    pub fn fa(j: usize, rho: T) -> Result<Self> {
        Self::new(EnvKind::FaJf(j), rho)
    }

    /// Checks the model is defined on `torus`.
    pub fn validate(&self, torus: &LatticeTorus) -> Result<()> {
        match self.kind {
            EnvKind::East if torus.dim() != 1 => Err(Error::UnsupportedModel(format!(
                "East model is only defined for d = 1 (got d = {})",
                torus.dim()
            ))),
            EnvKind::FaJf(j) if j > torus.dim() => Err(Error::UnsupportedModel(format!(
                "FA-{j}f needs j <= d (got d = {})",
                torus.dim()
            ))),
            _ => Ok(()),
        }
    }

    /// Kinetic constraint `c_x(sigma)`; never reads `sigma(x)` itself.
    #[inline]
    pub fn constraint(&self, torus: &LatticeTorus, sigma: &SpinConfig, x: usize) -> bool {
        match self.kind {
            EnvKind::IndependentFlip => true,
            EnvKind::East => sigma.get((x + 1) % torus.side()) == 0,
            EnvKind::FaJf(j) => torus.neighbours(x).filter(|&z| sigma.get(z) == 0).count() >= j,
        }
    }

    /// Unconstrained rate `rho (1 - s) + (1 - rho) s` for a site currently at `s`.
    #[inline]
    pub fn flip_rate(&self, current: u8) -> T {
        if current == 0 {
            self.rho
        } else {
            T::one() - self.rho
        }
    }

    /// Weight of `sigma` under the product Bernoulli(rho) measure.
    pub fn bernoulli_weight(&self, sigma: &SpinConfig) -> T {
        let k = sigma.occupied() as i32;
        let n = sigma.n_sites() as i32;
        self.rho.powi(k) * (T::one() - self.rho).powi(n - k)
    }

    /// All flips with strictly positive rate out of `sigma`, in site order.
    pub fn transitions(&self, torus: &LatticeTorus, sigma: &SpinConfig) -> Result<Vec<Transition<T>>> {
        self.validate(torus)?;
        Ok(self.transitions_unchecked(torus, sigma))
    }

    pub(crate) fn transitions_unchecked(&self, torus: &LatticeTorus, sigma: &SpinConfig) -> Vec<Transition<T>> {
        (0..torus.n_sites())
            .filter(|&x| self.constraint(torus, sigma, x))
            .map(|x| {
                let s = sigma.get(x);
                Transition {
                    site: x,
                    new_spin: 1 - s,
                    rate: self.flip_rate(s),
                }
            })
            .filter(|t| t.rate > T::zero())
            .collect()
    }

    pub fn name(&self) -> String {
        match self.kind {
            EnvKind::IndependentFlip => "independent_flip".into(),
            EnvKind::East => "east".into(),
            EnvKind::FaJf(j) => format!("fa{j}f"),
        }
    }
}

/// Free-function form of [`EnvModel::transitions`].
pub fn env_transitions<T: Scalar>(
    model: &EnvModel<T>,
    torus: &LatticeTorus,
    sigma: &SpinConfig,
) -> Result<Vec<Transition<T>>> {
    model.transitions(torus, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus(d: usize, l: usize) -> LatticeTorus {
        LatticeTorus::new(d, l).unwrap()
    }

    #[test]
    fn independent_flip_from_empty() {
        let m = EnvModel::independent(0.5).unwrap();
        let t = torus(1, 2);
        let tr = m.transitions(&t, &SpinConfig::from_spins(&[0, 0])).unwrap();
        assert_eq!(
            tr,
            vec![
                Transition {
                    site: 0,
                    new_spin: 1,
                    rate: 0.5
                },
                Transition {
                    site: 1,
                    new_spin: 1,
                    rate: 0.5
                },
            ]
        );
    }

    #[test]
    fn east_all_ones_is_trapped() {
        let m = EnvModel::east(0.5).unwrap();
        let tr = m
            .transitions(&torus(1, 3), &SpinConfig::from_spins(&[1, 1, 1]))
            .unwrap();
        assert!(tr.is_empty());
    }

    #[test]
    fn fa1f_hand_checked() {
        let m = EnvModel::fa(1, 0.75).unwrap();
        let tr = m
            .transitions(&torus(1, 3), &SpinConfig::from_spins(&[1, 0, 1]))
            .unwrap();
        assert_eq!(
            tr,
            vec![
                Transition {
                    site: 0,
                    new_spin: 0,
                    rate: 0.25
                },
                Transition {
                    site: 2,
                    new_spin: 0,
                    rate: 0.25
                },
            ]
        );
    }

    #[test]
    fn east_requires_one_dimension() {
        let m = EnvModel::east(0.5).unwrap();
        let t = torus(2, 3);
        assert!(matches!(
            m.transitions(&t, &SpinConfig::empty(&t)),
            Err(Error::UnsupportedModel(_))
        ));
        assert!(EnvModel::fa(2, 0.5).unwrap().validate(&torus(1, 4)).is_err());
        assert!(EnvModel::<f64>::independent(1.0).is_err());
    }

    fn models() -> Vec<EnvModel<f64>> {
        vec![
            EnvModel::independent(0.3).unwrap(),
            EnvModel::east(0.6).unwrap(),
            EnvModel::fa(1, 0.45).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn outflow_bounded_by_sites(bits in any::<u64>(), side in 2usize..10) {
            let t = torus(1, side);
            let sigma = SpinConfig::from_bits(bits, side);
            for m in models() {
                let total: f64 = m.transitions(&t, &sigma).unwrap().iter().map(|x| x.rate).sum();
                prop_assert!(total <= side as f64);
            }
        }

        #[test]
        fn detailed_balance(bits in any::<u64>(), side in 2usize..10) {
            let t = torus(1, side);
            let sigma = SpinConfig::from_bits(bits, side);
            for m in models() {
                for tr in m.transitions(&t, &sigma).unwrap() {
                    let next = sigma.flipped(tr.site);
                    let back = m.transitions(&t, &next).unwrap();
                    let rev = back.iter().find(|b| b.site == tr.site).expect("reverse flip allowed");
                    let lhs = m.bernoulli_weight(&sigma) * tr.rate;
                    let rhs = m.bernoulli_weight(&next) * rev.rate;
                    prop_assert!((lhs - rhs).abs() <= 1e-15 * lhs.max(rhs).max(1e-300));
                }
            }
        }

        #[test]
        fn translation_covariant(bits in any::<u64>(), side in 2usize..10, y in -12i64..12) {
            let t = torus(1, side);
            let sigma = SpinConfig::from_bits(bits, side);
            for m in models() {
                let shifted = sigma.translate(&t, &[y]);
                let mut expected: Vec<_> = m
                    .transitions(&t, &sigma)
                    .unwrap()
                    .into_iter()
                    .map(|tr| (t.shift(tr.site, &[-y]), tr.new_spin, tr.rate))
                    .collect();
                expected.sort_by_key(|a| a.0);
                let got: Vec<_> = m
                    .transitions(&t, &shifted)
                    .unwrap()
                    .into_iter()
                    .map(|tr| (tr.site, tr.new_spin, tr.rate))
                    .collect();
                prop_assert_eq!(got, expected);
            }
        }

        #[test]
        fn fa_2d_translation_covariant(bits in any::<u64>(), y0 in -4i64..4, y1 in -4i64..4) {
            let t = torus(2, 3);
            let m = EnvModel::fa(1, 0.4).unwrap();
            let sigma = SpinConfig::from_bits(bits, t.n_sites());
            let y = [y0, y1];
            let shifted = sigma.translate(&t, &y);
            let back = [-y0, -y1];
            let mut expected: Vec<_> = m
                .transitions(&t, &sigma)
                .unwrap()
                .into_iter()
                .map(|tr| (t.shift(tr.site, &back), tr.new_spin))
                .collect();
            expected.sort();
            let got: Vec<_> = m.transitions(&t, &shifted).unwrap().into_iter().map(|tr| (tr.site, tr.new_spin)).collect();
            prop_assert_eq!(got, expected);
        }
    }
}
