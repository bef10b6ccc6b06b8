use nalgebra::DVector;

use super::centered_sup;
use super::generators::Generators;
use super::linalg::expm;
use super::stationary::Stationary;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Time grid and slack for [`semigroup_bounds_check`].
#[derive(Debug, Clone)]
pub struct BoundsConfig<T> {
    pub times: Vec<T>,
    pub slack: f64,
}

impl<T: Scalar> Default for BoundsConfig<T> {
    fn default() -> Self {
        Self {
            times: [0.0, 0.1, 0.5, 1.0, 2.0, 5.0].into_iter().map(lit).collect(),
            slack: 1e-9,
        }
    }
}

/// Verifies, for every `t` and test function `f`:
///
/// 1. `||S_eps(t)f - mu(S_eps(t)f)||_mu <= e^{-(gamma-eps)t} ||f - mu(f)||_mu`
/// 2. `|mu(S_eps(t)f) - mu_eps(f)| <= eps/(gamma-eps) e^{-(gamma-eps)t} ||f - mu(f)||_mu`
/// 3. `||S_eps(t)f - mu_eps(f)||_{mu_eps} <= (gamma/(gamma-eps))^{3/2} e^{-(gamma-eps)t/2} ||f - mu(f)||_inf`
///
/// Violations are reported as failed records rather than errors.
pub fn semigroup_bounds_check<T: Scalar>(
    gens: &Generators<T>,
    stationary: &Stationary<T>,
    gamma: T,
    epsilon: T,
    functions: &[DVector<T>],
    config: &BoundsConfig<T>,
) -> Result<Vec<CheckRecord>> {
    if !(epsilon < gamma) {
        return Err(Error::Assumption(format!(
            "eps = {epsilon} is not below gamma = {gamma}"
        )));
    }
    let mu = gens.mu();
    let mu_eps = &stationary.mu_eps;
    let rate = gamma - epsilon;
    let mut out = Vec::with_capacity(3 * functions.len() * config.times.len());
    for &t in &config.times {
        let semigroup = expm(&(gens.ew_eps.matrix() * t))?;
        let decay = (-rate * t).exp();
        for (k, f) in functions.iter().enumerate() {
            let g = &semigroup * f;
            let spread = mu.centered_norm(f);
            out.push(CheckRecord::at_most(
                format!("perturbed-contraction/t={t}/f={k}"),
                anchors::PERTURBED_CONTRACTION,
                mu.centered_norm(&g).as_f64(),
                (decay * spread).as_f64(),
                config.slack,
            ));
            out.push(CheckRecord::at_most(
                format!("mean-convergence/t={t}/f={k}"),
                anchors::MEAN_CONVERGENCE,
                (mu.expect(&g) - mu_eps.expect(f)).abs().as_f64(),
                (epsilon / rate * decay * spread).as_f64(),
                config.slack,
            ));
            let target = mu_eps.expect(f);
            let lhs = mu_eps.norm(&g.map(|x| x - target));
            let rhs = (gamma / rate).powf(lit(1.5)) * (-rate * t / lit(2.0)).exp() * centered_sup(mu, f);
            out.push(CheckRecord::at_most(
                format!("perturbed-l2-decay/t={t}/f={k}"),
                anchors::PERTURBED_L2_DECAY,
                lhs.as_f64(),
                rhs.as_f64(),
                config.slack,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;
    use crate::oracle::{
        build_generators, l2_operator_norm, random_battery, spectral_gap, stationary_solve, DEFAULT_STATE_CAP,
    };
    use crate::rates::RateSpec;

    #[test]
    fn east_interface_battery_passes() {
        let spec = RateSpec::interface(0.02).unwrap();
        let t = LatticeTorus::new(1, 5).unwrap();
        let g = build_generators(&EnvModel::east(0.5).unwrap(), &spec, &t, DEFAULT_STATE_CAP).unwrap();
        let gamma = spectral_gap(&g.env).unwrap().gamma;
        let eps = l2_operator_norm(&g.pert, &spec).epsilon;
        assert!(eps < gamma);
        let stat = stationary_solve(&g.ew_eps).unwrap();
        let fs = random_battery(g.space.len(), 20, 5);
        let checks = semigroup_bounds_check(&g, &stat, gamma, eps, &fs, &BoundsConfig::default()).unwrap();
        assert_eq!(checks.len(), 3 * 20 * 6);
        assert!(checks.iter().all(|c| c.pass), "{:?}", checks.iter().find(|c| !c.pass));
    }

    #[test]
    fn constant_function_has_zero_left_sides() {
        let spec = RateSpec::interface(0.05).unwrap();
        let t = LatticeTorus::new(1, 4).unwrap();
        let g = build_generators(&EnvModel::independent(0.4).unwrap(), &spec, &t, DEFAULT_STATE_CAP).unwrap();
        let gamma = spectral_gap(&g.env).unwrap().gamma;
        let eps = l2_operator_norm(&g.pert, &spec).epsilon;
        let stat = stationary_solve(&g.ew_eps).unwrap();
        let c = DVector::from_element(g.space.len(), 2.5);
        let checks = semigroup_bounds_check(&g, &stat, gamma, eps, &[c], &BoundsConfig::default()).unwrap();
        assert!(checks.iter().all(|r| r.lhs.abs() < 1e-12 && r.pass));
    }
}
