use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::operator::LinearOperator;
use super::space::StateSpace;
use crate::env::EnvModel;
use crate::error::{Error, Result};
use crate::lattice::{LatticeTorus, SpinConfig, Translator};
use crate::rates::RateSpec;
use crate::scalar::Scalar;

/// Generators of the environment seen by the walker on one state space.
#[derive(Debug, Clone)]
pub struct Generators<T: Scalar> {
    pub space: Arc<StateSpace<T>>,
    /// Spin-flip dynamics `L_env`.
    pub env: LinearOperator<T>,
    /// Unperturbed walker jumps `L_jump f = sum_y r(y,.) [f(tau_y .) - f]`.
    pub jump: LinearOperator<T>,
    /// Perturbation `L_hat f = sum_y r_hat(y,.) [f(tau_y .) - f]`.
    pub pert: LinearOperator<T>,
    /// `L_ew = L_env + L_jump`.
    pub ew: LinearOperator<T>,
    /// `L_ew_eps = L_ew + L_hat`.
    pub ew_eps: LinearOperator<T>,
}

impl<T: Scalar> Generators<T> {
    pub fn mu(&self) -> &super::MeasureVector<T> {
        self.space.mu()
    }

    /// Tabulates the walker drift `j_eps` (or `j` when `perturbed` is false), one vector per axis.
    pub fn drift(&self, spec: &RateSpec<T>, perturbed: bool) -> Vec<DVector<T>> {
        let torus = *self.space.torus();
        let table: Vec<Vec<T>> = (0..self.space.len())
            .map(|i| {
                let j = spec.jump_observable(&torus, &self.space.config(i));
                if perturbed {
                    j.perturbed
                } else {
                    j.base
                }
            })
            .collect();
        (0..spec.dim())
            .map(|k| DVector::from_iterator(table.len(), table.iter().map(|row| row[k])))
            .collect()
    }
}

fn jump_matrix<T: Scalar>(
    space: &StateSpace<T>,
    spec: &RateSpec<T>,
    rate: impl Fn(usize, usize) -> T,
) -> Result<DMatrix<T>> {
    let torus = space.torus();
    let n = space.len();
    let shifts: Vec<Translator> = spec.displacements().iter().map(|y| Translator::new(torus, y)).collect();
    let mut m = DMatrix::<T>::zeros(n, n);
    for (i, &bits) in space.states().iter().enumerate() {
        let w = spec.window_from_site(torus, bits, 0);
        for (k, shift) in shifts.iter().enumerate() {
            let r = rate(w, k);
            if r == T::zero() {
                continue;
            }
            let target = shift.apply(bits);
            let j = space
                .index_of(target)
                .ok_or_else(|| Error::Geometry(format!("translate of state {bits:#x} left the component")))?;
            m[(i, j)] += r;
            m[(i, i)] -= r;
        }
    }
    Ok(m)
}

fn env_matrix<T: Scalar>(space: &StateSpace<T>, model: &EnvModel<T>) -> Result<DMatrix<T>> {
    let torus = space.torus();
    let n = space.len();
    let mut m = DMatrix::<T>::zeros(n, n);
    for (i, &bits) in space.states().iter().enumerate() {
        let sigma = SpinConfig::from_bits(bits, torus.n_sites());
        for t in model.transitions_unchecked(torus, &sigma) {
            let j = space
                .index_of(sigma.flipped(t.site).bits())
                .ok_or_else(|| Error::Geometry("flip left the component".into()))?;
            m[(i, j)] += t.rate;
            m[(i, i)] -= t.rate;
        }
    }
    Ok(m)
}

/// Builds `L_env`, `L_jump`, `L_hat`, `L_ew` and `L_ew_eps` on the component of `torus`.
pub fn build_generators<T: Scalar>(
    model: &EnvModel<T>,
    spec: &RateSpec<T>,
    torus: &LatticeTorus,
    state_cap: usize,
) -> Result<Generators<T>> {
    spec.check_torus(torus)?;
    let space = Arc::new(StateSpace::build(model, torus, state_cap)?);
    build_on_space(space, spec)
}

/// Like [`build_generators`] but reuses an enumerated state space.
pub fn build_on_space<T: Scalar>(space: Arc<StateSpace<T>>, spec: &RateSpec<T>) -> Result<Generators<T>> {
    spec.check_torus(space.torus())?;
    let mu = space.mu().clone();
    let env = LinearOperator::new(env_matrix(&space, space.model())?, mu.clone());
    let jump = LinearOperator::new(jump_matrix(&space, spec, |w, k| spec.base_rate(w, k))?, mu.clone());
    let pert = LinearOperator::new(jump_matrix(&space, spec, |w, k| spec.pert_rate(w, k))?, mu);
    let ew = &env + &jump;
    let ew_eps = &ew + &pert;
    Ok(Generators {
        space,
        env,
        jump,
        pert,
        ew,
        ew_eps,
    })
}
