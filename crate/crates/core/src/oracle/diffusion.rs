use nalgebra::{DMatrix, DVector};

use super::linalg::BorderedSolver;
use super::operator::LinearOperator;
use super::space::StateSpace;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::lattice::Translator;
use crate::rates::RateSpec;
use crate::scalar::{lit, Scalar};

/// Exact minimum of the quadratic form
/// `Q(f) = -2 <f, L_env f>_mu + sum_y mu(r(y,.) [y.e + f(tau_y .) - f]^2)`
/// over all functions on the component; `value = inf Q / 2`.
#[derive(Debug, Clone)]
pub struct VariationalDiffusion<T: Scalar> {
    pub value: T,
    pub minimizer: DVector<T>,
    /// `Q(0)/2 = sum_y mu(r(y,.)) (y.e)^2 / 2`.
    pub plugin: T,
    /// `gamma / (2 S + gamma)` with `S = sum_y sup r(y,.)`.
    pub beta_star: T,
    /// `beta_star * plugin`, positive whenever the walker can move.
    pub lower_bound: T,
}

impl<T: Scalar> VariationalDiffusion<T> {
    /// `Q(f)/2` for a trial function.
    pub fn objective(space: &StateSpace<T>, env: &LinearOperator<T>, spec: &RateSpec<T>, e: &[T], f: &DVector<T>) -> T {
        let (a, b, c) = normal_equations(space, env, spec, e);
        ((f.transpose() * &a * f)[(0, 0)] + lit::<T>(2.0) * b.dot(f) + c) / lit(2.0)
    }

    pub fn check(&self, slack: f64) -> CheckRecord {
        CheckRecord::at_least(
            "diffusion-variational",
            anchors::DIFFUSION_POSITIVE,
            self.value.as_f64(),
            self.lower_bound.as_f64(),
            slack,
        )
    }
}

// Q(f) = f^T A f + 2 b^T f + c.
fn normal_equations<T: Scalar>(
    space: &StateSpace<T>,
    env: &LinearOperator<T>,
    spec: &RateSpec<T>,
    e: &[T],
) -> (DMatrix<T>, DVector<T>, T) {
    let n = space.len();
    let torus = space.torus();
    let w = space.mu().weights();
    // -2 <f, L f>_mu = f^T (-2 sym(D L)) f
    let dl = DMatrix::from_fn(n, n, |i, j| w[i] * env.matrix()[(i, j)]);
    let mut a = (&dl + dl.transpose()) * (-T::one());
    let mut b = DVector::<T>::zeros(n);
    let mut c = T::zero();
    for (k, y) in spec.displacements().iter().enumerate() {
        let shift = Translator::new(torus, y);
        let proj = y
            .iter()
            .zip(e)
            .fold(T::zero(), |s, (&yc, &ec)| s + lit::<T>(yc as f64) * ec);
        for (i, &bits) in space.states().iter().enumerate() {
            let r = spec.base_rate(spec.window_from_site(torus, bits, 0), k);
            if r == T::zero() {
                continue;
            }
            let j = space
                .index_of(shift.apply(bits))
                .expect("component is translation invariant");
            let m = w[i] * r;
            if i != j {
                a[(i, i)] += m;
                a[(j, j)] += m;
                a[(i, j)] -= m;
                a[(j, i)] -= m;
                b[j] += m * proj;
                b[i] -= m * proj;
            }
            c += m * proj * proj;
        }
    }
    (a, b, c)
}

/// Variational value of `<e, D_0 e>` for a symmetric walker, `r(y,eta) = r(-y, tau_y eta)`,
/// in a reversible environment with spectral gap `gamma`.
pub fn diffusion_variational<T: Scalar>(
    space: &StateSpace<T>,
    env: &LinearOperator<T>,
    spec: &RateSpec<T>,
    gamma: T,
    e: &[T],
) -> Result<VariationalDiffusion<T>> {
    let torus = space.torus();
    spec.check_torus(torus)?;
    if e.len() != spec.dim() {
        return Err(Error::Precondition(format!(
            "direction has {} components, expected {}",
            e.len(),
            spec.dim()
        )));
    }
    let tol = lit::<T>(1e-12);
    if !env.is_reversible(tol) {
        return Err(Error::Precondition("environment generator is not reversible".into()));
    }
    for (k, y) in spec.displacements().iter().enumerate() {
        let neg: Vec<i64> = y.iter().map(|c| -c).collect();
        let kn = spec
            .index_of(&neg)
            .ok_or_else(|| Error::Precondition(format!("displacement {y:?} has no reverse")))?;
        let shift = Translator::new(torus, y);
        for &bits in space.states() {
            let here = spec.base_rate(spec.window_from_site(torus, bits, 0), k);
            let back = spec.base_rate(spec.window_from_site(torus, shift.apply(bits), 0), kn);
            if (here - back).abs() > tol {
                return Err(Error::Precondition(format!(
                    "rates are not symmetric: r({y:?}, eta) != r(-y, tau_y eta) at state {bits:#x}"
                )));
            }
        }
    }
    let (a, b, c) = normal_equations(space, env, spec, e);
    let ones = DVector::from_element(space.len(), T::one());
    let solver = BorderedSolver::new(&a, &ones, space.mu().weights())?;
    let minimizer = solver.solve(&(-&b))?;
    let value = (c + b.dot(&minimizer)) / lit(2.0);
    let plugin = c / lit(2.0);
    let s = spec.base_sup_sum();
    let beta_star = gamma / (lit::<T>(2.0) * s + gamma);
    Ok(VariationalDiffusion {
        value,
        minimizer,
        plugin,
        beta_star,
        lower_bound: beta_star * plugin,
    })
}
