use nalgebra::DVector;

use super::linalg::BorderedSolver;
use super::operator::LinearOperator;
use super::stationary::stationary_solve;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Terms and partial sums of the series `h_eps = 1 + sum_n x^(n)`.
#[derive(Debug, Clone)]
pub struct ExpansionReport<T: Scalar> {
    pub gamma: T,
    pub epsilon: T,
    /// `x^(1), ..., x^(k)`; each has `mu`-mean zero.
    pub terms: Vec<DVector<T>>,
    /// `h^(0) = 1, h^(1), ..., h^(k)`.
    pub partial: Vec<DVector<T>>,
    /// `(eps/gamma)^n` for `n = 1..=k`.
    pub term_bounds: Vec<T>,
    /// Density from the exact left-null solve.
    pub exact: DVector<T>,
    /// `||h^(k) - h_eps||` for `k = 0..=K`.
    pub residuals: Vec<T>,
    /// `(eps/gamma)^(k+1) gamma/(gamma - eps)` for `k = 0..=K`.
    pub residual_bounds: Vec<T>,
}

impl<T: Scalar> ExpansionReport<T> {
    pub fn ratio(&self) -> T {
        self.epsilon / self.gamma
    }

    pub fn checks(&self, mu: &super::MeasureVector<T>, slack: f64) -> Vec<CheckRecord> {
        let mut out: Vec<CheckRecord> = self
            .terms
            .iter()
            .zip(&self.term_bounds)
            .enumerate()
            .map(|(i, (x, &b))| {
                CheckRecord::at_most(
                    format!("expansion-term/n={}", i + 1),
                    anchors::EXPANSION_TERM,
                    mu.norm(x).as_f64(),
                    b.as_f64(),
                    slack,
                )
            })
            .collect();
        out.extend(
            self.residuals
                .iter()
                .zip(&self.residual_bounds)
                .enumerate()
                .map(|(k, (&r, &b))| {
                    CheckRecord::at_most(
                        format!("expansion-residual/k={k}"),
                        anchors::EXPANSION_RESIDUAL,
                        r.as_f64(),
                        b.as_f64(),
                        slack,
                    )
                }),
        );
        out
    }
}

/// Expands the perturbed invariant density to order `k` through the resolvent
/// recursion `x^(n+1) = (-L_ew^*)^{-1} L_hat^* x^(n)` with `x^(0) = 1`.
///
/// Every right-hand side has `mu`-mean zero because `L_hat` kills constants,
/// so each solve is posed on the mean-zero subspace.
pub fn density_expansion<T: Scalar>(
    ew: &LinearOperator<T>,
    pert: &LinearOperator<T>,
    gamma: T,
    epsilon: T,
    k: usize,
) -> Result<ExpansionReport<T>> {
    if !(epsilon < gamma) {
        return Err(Error::Assumption(format!(
            "expansion needs eps < gamma (eps = {epsilon}, gamma = {gamma})"
        )));
    }
    let mu = ew.measure();
    let n = ew.dim();
    let ew_adj = ew.adjoint();
    let pert_adj = pert.adjoint();
    let solver = BorderedSolver::new(&(-ew_adj.matrix()), mu.weights(), mu.weights())?;
    let exact = stationary_solve(&(ew + pert))?.density;

    let ratio = epsilon / gamma;
    let mut terms = Vec::with_capacity(k);
    let mut partial = vec![DVector::from_element(n, T::one())];
    let mut current = DVector::from_element(n, T::one());
    for _ in 0..k {
        current = solver.solve(&pert_adj.apply(&current))?;
        let next = partial.last().unwrap() + &current;
        terms.push(current.clone());
        partial.push(next);
    }
    let term_bounds = (1..=k).map(|i| ratio.powi(i as i32)).collect();
    let residuals = partial.iter().map(|h| mu.norm(&(h - &exact))).collect();
    let residual_bounds = (0..=k)
        .map(|i| ratio.powi(i as i32 + 1) * gamma / (gamma - epsilon))
        .collect();
    Ok(ExpansionReport {
        gamma,
        epsilon,
        terms,
        partial,
        term_bounds,
        exact,
        residuals,
        residual_bounds,
    })
}
