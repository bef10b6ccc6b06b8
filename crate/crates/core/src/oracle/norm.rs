use super::linalg::symmetric_spectrum;
use super::operator::LinearOperator;
use crate::check::{anchors, CheckRecord};
use crate::rates::RateSpec;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorm<T> {
    /// `||L_hat||` in `L^2(mu)`.
    pub epsilon: T,
    /// `2 sum_y sup_eta |r_hat(y, eta)|`.
    pub bound: T,
}

impl<T: Scalar> OperatorNorm<T> {
    pub fn check(&self, slack: f64) -> CheckRecord {
        CheckRecord::at_most(
            "perturbation-norm-bound",
            anchors::NORM_BOUND,
            self.epsilon.as_f64(),
            self.bound.as_f64(),
            slack,
        )
    }
}

/// Largest singular value of `D^{1/2} L_hat D^{-1/2}`, with the a priori bound.
pub fn l2_operator_norm<T: Scalar>(pert: &LinearOperator<T>, spec: &RateSpec<T>) -> OperatorNorm<T> {
    let b = pert.similarity();
    let gram = b.transpose() * &b;
    let (values, _) = symmetric_spectrum(&gram);
    let top = values.last().copied().unwrap_or(T::zero()).max(T::zero());
    OperatorNorm {
        epsilon: top.sqrt(),
        bound: lit::<T>(2.0) * spec.pert_sup_sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;
    use crate::oracle::{build_generators, DEFAULT_STATE_CAP};

    fn norm_for(spec: &RateSpec<f64>, model: EnvModel<f64>, l: usize) -> OperatorNorm<f64> {
        let t = LatticeTorus::new(1, l).unwrap();
        let g = build_generators(&model, spec, &t, DEFAULT_STATE_CAP).unwrap();
        l2_operator_norm(&g.pert, spec)
    }

    #[test]
    fn zero_perturbation_has_zero_norm() {
        let n = norm_for(&RateSpec::decoupled(1).unwrap(), EnvModel::independent(0.5).unwrap(), 4);
        assert_eq!(n.epsilon, 0.0);
        assert_eq!(n.bound, 0.0);
    }

    #[test]
    fn interface_norm_below_bound() {
        let n = norm_for(
            &RateSpec::interface(0.1).unwrap(),
            EnvModel::independent(0.3).unwrap(),
            5,
        );
        assert!((n.bound - 0.4).abs() < 1e-15);
        assert!(n.epsilon > 0.0 && n.epsilon <= n.bound);
        assert!(n.check(1e-9).pass);
    }

    #[test]
    fn norm_is_linear_in_the_perturbation() {
        let spec = RateSpec::interface(0.05).unwrap();
        let n1 = norm_for(&spec, EnvModel::east(0.5).unwrap(), 5);
        let n2 = norm_for(&spec.scale_perturbation(2.0).unwrap(), EnvModel::east(0.5).unwrap(), 5);
        assert!((n2.epsilon - 2.0 * n1.epsilon).abs() < 1e-12);
    }

    #[test]
    fn driven_probe_norm_below_bound() {
        let n = norm_for(&RateSpec::driven_probe(0.3).unwrap(), EnvModel::fa(1, 0.4).unwrap(), 5);
        assert!(n.epsilon <= n.bound + 1e-12);
    }
}
