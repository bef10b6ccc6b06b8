use nalgebra::{DMatrix, DVector};

use super::linalg::expm;
use super::operator::LinearOperator;
use crate::check::{anchors, CheckRecord};
use crate::error::Result;
use crate::scalar::{lit, Scalar};

/// Dyson-Phillips terms `S^(0)(t), ..., S^(n_max)(t)` of the semigroup of
/// `L_ew + L_hat`.
///
/// All terms come from one exponential of the block-bidiagonal matrix with
/// `L_ew` on the diagonal and `L_hat` on the superdiagonal: block `(0, n)` of
/// `exp(t B)` is the `n`-fold time-ordered integral `S^(n)(t)`.
pub fn dyson_terms<T: Scalar>(
    ew: &LinearOperator<T>,
    pert: &LinearOperator<T>,
    n_max: usize,
    t: T,
) -> Result<Vec<LinearOperator<T>>> {
    let n = ew.dim();
    let blocks = n_max + 1;
    let mut b = DMatrix::<T>::zeros(n * blocks, n * blocks);
    for k in 0..blocks {
        b.view_mut((k * n, k * n), (n, n)).copy_from(&(ew.matrix() * t));
        if k + 1 < blocks {
            b.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&(pert.matrix() * t));
        }
    }
    let e = expm(&b)?;
    Ok((0..blocks)
        .map(|k| LinearOperator::new(e.view((0, k * n), (n, n)).into_owned(), ew.measure().clone()))
        .collect())
}

/// The single term `S^(n)(t)`; `n = 0` is `e^{t L_ew}`.
pub fn dyson_term<T: Scalar>(
    ew: &LinearOperator<T>,
    pert: &LinearOperator<T>,
    n: usize,
    t: T,
) -> Result<LinearOperator<T>> {
    Ok(dyson_terms(ew, pert, n, t)?.pop().expect("at least one term"))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Tail bound of the truncated expansion for `k = 1..=k_max` and the
/// term-wise variance decay `||S^(m)(t) f - mu(.)|| <= e^{-gamma t} (eps t)^m / m!`.
#[allow(clippy::too_many_arguments)]
pub fn dyson_checks<T: Scalar>(
    ew: &LinearOperator<T>,
    pert: &LinearOperator<T>,
    gamma: T,
    epsilon: T,
    k_max: usize,
    times: &[T],
    functions: &[DVector<T>],
    slack: f64,
) -> Result<Vec<CheckRecord>> {
    let mu = ew.measure();
    let full = ew + pert;
    let ratio = epsilon / gamma;
    let tail_factor = lit::<T>(2.0) * gamma / (gamma - epsilon);
    let mut out = Vec::new();
    for &t in times {
        let terms = dyson_terms(ew, pert, k_max, t)?;
        let semigroup = expm(&(full.matrix() * t))?;
        for (fi, f) in functions.iter().enumerate() {
            let spread = mu.centered_norm(f);
            let exact = &semigroup * f;
            let applied: Vec<DVector<T>> = terms.iter().map(|s| s.apply(f)).collect();
            let mut partial = DVector::<T>::zeros(f.len());
            for (k, g) in applied.iter().enumerate().take(k_max) {
                partial += g;
                let resid = mu.norm(&(&exact - &partial));
                out.push(CheckRecord::at_most(
                    format!("dyson-tail/t={t}/k={}/f={fi}", k + 1),
                    anchors::DYSON_TAIL,
                    resid.as_f64(),
                    (ratio.powi(k as i32 + 1) * tail_factor * spread).as_f64(),
                    slack,
                ));
            }
            for (m, g) in applied.iter().enumerate() {
                let bound = (-gamma * t).exp().as_f64() * (epsilon * t).as_f64().powi(m as i32) / factorial(m)
                    * spread.as_f64();
                out.push(CheckRecord::at_most(
                    format!("dyson-term-decay/t={t}/n={m}/f={fi}"),
                    anchors::DYSON_TERM_DECAY,
                    mu.centered_norm(g).as_f64(),
                    bound,
                    slack,
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;
    use crate::oracle::{build_generators, l2_operator_norm, random_battery, spectral_gap, DEFAULT_STATE_CAP};
    use crate::rates::RateSpec;

    fn gens(strength: f64) -> (crate::oracle::Generators<f64>, RateSpec<f64>) {
        let spec = RateSpec::interface(strength).unwrap();
        let t = LatticeTorus::new(1, 4).unwrap();
        (
            build_generators(&EnvModel::independent(0.3).unwrap(), &spec, &t, DEFAULT_STATE_CAP).unwrap(),
            spec,
        )
    }

    #[test]
    fn zeroth_term_at_time_zero_is_identity() {
        let (g, _) = gens(0.05);
        let s = dyson_term(&g.ew, &g.pert, 0, 0.0).unwrap();
        assert_eq!(s.matrix(), &DMatrix::identity(g.space.len(), g.space.len()));
        let s3 = dyson_term(&g.ew, &g.pert, 3, 0.0).unwrap();
        assert!(s3.matrix().amax() == 0.0);
    }

    #[test]
    fn first_term_matches_quadrature() {
        // independent route: composite Simpson rule for int_0^t S(t-s) L_hat S(s) ds
        let (g, _) = gens(0.08);
        let t = 0.7;
        let steps = 200;
        let h = t / steps as f64;
        let mut acc = DMatrix::<f64>::zeros(g.space.len(), g.space.len());
        for i in 0..=steps {
            let s = i as f64 * h;
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let left = expm(&(g.ew.matrix() * (t - s))).unwrap();
            let right = expm(&(g.ew.matrix() * s)).unwrap();
            acc += (left * g.pert.matrix() * right) * (w * h / 3.0);
        }
        let s1 = dyson_term(&g.ew, &g.pert, 1, t).unwrap();
        assert!((s1.matrix() - acc).amax() < 1e-10);
    }

    #[test]
    fn partial_sums_converge_to_perturbed_semigroup() {
        let (g, spec) = gens(0.05);
        let t = 1.5;
        let terms = dyson_terms(&g.ew, &g.pert, 12, t).unwrap();
        let sum = terms
            .iter()
            .fold(DMatrix::zeros(g.space.len(), g.space.len()), |a, s| a + s.matrix());
        let exact = expm(&(g.ew_eps.matrix() * t)).unwrap();
        assert!((sum - exact).amax() < 1e-13);
        let gamma = spectral_gap(&g.env).unwrap().gamma;
        let eps = l2_operator_norm(&g.pert, &spec).epsilon;
        let fs = random_battery(g.space.len(), 10, 11);
        let checks = dyson_checks(&g.ew, &g.pert, gamma, eps, 5, &[0.5, 2.0], &fs, 1e-9).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{:?}", checks.iter().find(|c| !c.pass));
    }
}
