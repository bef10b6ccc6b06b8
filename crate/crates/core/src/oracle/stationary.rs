use nalgebra::DVector;

use super::linalg::BorderedSolver;
use super::operator::LinearOperator;
use super::space::MeasureVector;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone)]
pub struct Stationary<T: Scalar> {
    pub mu_eps: MeasureVector<T>,
    /// Density `h_eps = d mu_eps / d mu`.
    pub density: DVector<T>,
    /// `max |mu_eps^T L|`.
    pub residual: T,
}

/// Unique invariant distribution of an irreducible generator, as a density
/// with respect to the generator's reference measure.
pub fn stationary_solve<T: Scalar>(generator: &LinearOperator<T>) -> Result<Stationary<T>> {
    if !generator.is_irreducible() {
        return Err(Error::Reducible(
            "perturbed environment-seen-by-walker generator has more than one communicating class".into(),
        ));
    }
    let n = generator.dim();
    let ones = DVector::from_element(n, T::one());
    let solver = BorderedSolver::new(&generator.matrix().transpose(), &ones, &ones)?;
    let (pi, _) = solver.solve_with(&DVector::zeros(n), T::one())?;
    let floor = -lit::<T>(1e3) * T::default_epsilon();
    if pi.iter().any(|&p| p < floor) {
        return Err(Error::Numerical("stationary vector has negative entries".into()));
    }
    let mu_eps = MeasureVector::from_weights(pi.map(|p| p.max(T::zero())))?;
    let w = generator.measure().weights();
    let density = mu_eps.weights().component_div(w);
    let residual = (generator.matrix().transpose() * mu_eps.weights()).amax();
    Ok(Stationary {
        mu_eps,
        density,
        residual,
    })
}

/// Mean-zero solution `g` of `-L g = f - pi(f)` where `pi` is the invariant law of `L`.
///
/// Used as the corrector of additive functionals: `g(eta_0) - g(eta_t)` is
/// the remainder in the martingale decomposition of `int_0^t f(eta_s) ds`.
pub fn poisson_solve<T: Scalar>(
    generator: &LinearOperator<T>,
    invariant: &MeasureVector<T>,
    f: &DVector<T>,
) -> Result<DVector<T>> {
    let rhs = invariant.centered(f);
    let solver = BorderedSolver::new(&(-generator.matrix()), invariant.weights(), invariant.weights())?;
    solver.solve(&rhs)
}

/// `||h - 1|| <= eps/(gamma - eps)` and `|mu_eps(f) - mu(f)| <= eps/(gamma-eps) ||f - mu(f)||`.
pub fn closeness_checks<T: Scalar>(
    stat: &Stationary<T>,
    mu: &MeasureVector<T>,
    gamma: T,
    epsilon: T,
    functions: &[DVector<T>],
    slack: f64,
) -> Result<Vec<CheckRecord>> {
    if !(epsilon < gamma) {
        return Err(Error::Assumption(format!(
            "eps = {epsilon} is not below gamma = {gamma}"
        )));
    }
    let ratio = epsilon / (gamma - epsilon);
    let mut out = vec![CheckRecord::at_most(
        "density-closeness",
        anchors::DENSITY_CLOSENESS,
        mu.norm(&stat.density.map(|h| h - T::one())).as_f64(),
        ratio.as_f64(),
        slack,
    )];
    for (k, f) in functions.iter().enumerate() {
        out.push(CheckRecord::at_most(
            format!("mean-shift/f={k}"),
            anchors::MEAN_SHIFT,
            (stat.mu_eps.expect(f) - mu.expect(f)).abs().as_f64(),
            (ratio * mu.centered_norm(f)).as_f64(),
            slack,
        ));
    }
    Ok(out)
}
