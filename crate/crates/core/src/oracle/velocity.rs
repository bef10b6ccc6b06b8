use super::expansion::density_expansion;
use super::generators::Generators;
use super::linalg::expm;
use super::stationary::stationary_solve;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::rates::RateSpec;
use crate::scalar::{lit, Scalar};

/// Asymptotic velocity: exact value, series partial sums and error bounds, per axis.
#[derive(Debug, Clone)]
pub struct VelocityReport<T: Scalar> {
    pub gamma: T,
    pub epsilon: T,
    /// `mu_eps(j_eps)` from the left-null solve.
    pub exact: Vec<T>,
    /// `lim_t mu(S_eps(t) j_eps)` from a long-time matrix exponential.
    pub long_time: Vec<T>,
    /// `mu(j_eps)`, the velocity before any correction.
    pub mean_drift: Vec<T>,
    /// `series[k][axis] = mu(j_eps) + sum_{n=0}^{k} <x^(n+1), j_eps>_mu`, `k = 0..=K`: the
    /// n-th correction is the integrated Dyson term of order n.
    pub series: Vec<Vec<T>>,
    /// `||j_eps - mu(j_eps)||_mu` per axis.
    pub drift_spread: Vec<T>,
}

impl<T: Scalar> VelocityReport<T> {
    pub fn order(&self) -> usize {
        self.series.len() - 1
    }

    pub fn error(&self, k: usize, axis: usize) -> T {
        (self.exact[axis] - self.series[k][axis]).abs()
    }

    /// `sum_{n > k} (eps/gamma)^(n+1) ||j - mu(j)||`.
    pub fn tail_bound(&self, k: usize, axis: usize) -> T {
        let q = self.epsilon / self.gamma;
        q.powi(k as i32 + 2) / (T::one() - q) * self.drift_spread[axis]
    }

    pub fn checks(&self, slack: f64, equality_tol: f64) -> Vec<CheckRecord> {
        let mut out = Vec::new();
        for axis in 0..self.exact.len() {
            for k in 0..=self.order() {
                out.push(CheckRecord::at_most(
                    format!("velocity-series/axis={axis}/k={k}"),
                    anchors::VELOCITY_TAIL,
                    self.error(k, axis).as_f64(),
                    self.tail_bound(k, axis).as_f64(),
                    slack,
                ));
            }
            out.push(CheckRecord::equal(
                format!("velocity-two-routes/axis={axis}"),
                anchors::VELOCITY_TWO_ROUTES,
                self.exact[axis].as_f64(),
                self.long_time[axis].as_f64(),
                equality_tol,
            ));
        }
        out
    }
}

/// Computes `v(eps) = mu_eps(j_eps)` and its expansion to order `k`.
pub fn velocity<T: Scalar>(
    gens: &Generators<T>,
    spec: &RateSpec<T>,
    gamma: T,
    epsilon: T,
    k: usize,
) -> Result<VelocityReport<T>> {
    if !(epsilon < gamma) {
        return Err(Error::Assumption(format!(
            "velocity series needs eps < gamma (eps = {epsilon}, gamma = {gamma})"
        )));
    }
    let mu = gens.mu();
    let drift = gens.drift(spec, true);
    let stat = stationary_solve(&gens.ew_eps)?;
    let expansion = density_expansion(&gens.ew, &gens.pert, gamma, epsilon, k + 1)?;

    let exact: Vec<T> = drift.iter().map(|j| stat.mu_eps.expect(j)).collect();
    let horizon = lit::<T>(60.0) / (gamma - epsilon);
    let semigroup = expm(&(gens.ew_eps.matrix() * horizon))?;
    let long_time = drift.iter().map(|j| mu.expect(&(&semigroup * j))).collect();

    let series = (0..=k)
        .map(|order| {
            drift
                .iter()
                .map(|j| {
                    expansion.terms[..=order]
                        .iter()
                        .fold(mu.expect(j), |acc, x| acc + mu.inner(x, j))
                })
                .collect()
        })
        .collect();
    let mean_drift = drift.iter().map(|j| mu.expect(j)).collect();
    let drift_spread = drift.iter().map(|j| mu.centered_norm(j)).collect();
    Ok(VelocityReport {
        gamma,
        epsilon,
        exact,
        long_time,
        mean_drift,
        series,
        drift_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;
    use crate::oracle::{build_generators, l2_operator_norm, spectral_gap, DEFAULT_STATE_CAP};

    fn report(spec: &RateSpec<f64>, model: EnvModel<f64>, l: usize, k: usize) -> VelocityReport<f64> {
        let t = LatticeTorus::new(1, l).unwrap();
        let g = build_generators(&model, spec, &t, DEFAULT_STATE_CAP).unwrap();
        let gamma = spectral_gap(&g.env).unwrap().gamma;
        let eps = l2_operator_norm(&g.pert, spec).epsilon;
        velocity(&g, spec, gamma, eps, k).unwrap()
    }

    #[test]
    fn decoupled_walk_has_zero_velocity() {
        let r = report(
            &RateSpec::decoupled(1).unwrap(),
            EnvModel::independent(0.3).unwrap(),
            4,
            3,
        );
        assert!(r.exact[0].abs() < 1e-14);
        assert!(r.mean_drift[0].abs() < 1e-14);
        assert!(r.series.iter().all(|s| s[0].abs() < 1e-14));
    }

    #[test]
    fn half_filling_interface_walk_has_no_zeroth_order() {
        let eps = 0.01;
        let r = report(&RateSpec::interface(eps).unwrap(), EnvModel::east(0.5).unwrap(), 5, 4);
        // mu conditioned on the East component is not exactly Bernoulli(1/2) at site 0,
        // so compare with the direct average instead of 2 eps (2 rho - 1) = 0
        let rho0 = 15.0 / 31.0;
        assert!((r.mean_drift[0] - 2.0 * eps * (2.0 * rho0 - 1.0)).abs() < 1e-14);
        let r = report(
            &RateSpec::interface(0.1).unwrap(),
            EnvModel::independent(0.5).unwrap(),
            4,
            4,
        );
        assert!(r.mean_drift[0].abs() < 1e-15);
    }

    #[test]
    fn series_within_tail_bounds() {
        let r = report(
            &RateSpec::interface(0.05).unwrap(),
            EnvModel::independent(0.3).unwrap(),
            4,
            5,
        );
        assert!(r.checks(1e-9, 1e-8).iter().all(|c| c.pass));
        assert!(r.error(5, 0) < r.error(0, 0));
    }

    #[test]
    fn tail_bound_holds_for_weak_perturbations() {
        // the error of order k scales like eps^(k+2), so small eps is the sharp regime
        for s in [0.001, 0.01, 0.05] {
            let r = report(
                &RateSpec::interface(s).unwrap(),
                EnvModel::independent(0.3).unwrap(),
                6,
                4,
            );
            // absolute slack at the roundoff floor of v
            for c in r.checks(1e-15, 1e-8) {
                assert!(c.pass, "strength {s}: {} lhs {:e} rhs {:e}", c.check_id, c.lhs, c.rhs);
            }
        }
    }

    #[test]
    fn driven_probe_velocity_follows_the_field() {
        let r = report(
            &RateSpec::driven_probe(0.1).unwrap(),
            EnvModel::independent(0.5).unwrap(),
            5,
            3,
        );
        assert!(r.exact[0] > 0.0);
        let r = report(
            &RateSpec::driven_probe(-0.1).unwrap(),
            EnvModel::independent(0.5).unwrap(),
            5,
            3,
        );
        assert!(r.exact[0] < 0.0);
    }
}
