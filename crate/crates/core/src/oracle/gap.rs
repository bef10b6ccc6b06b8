use nalgebra::DVector;

use super::linalg::{expm, symmetric_spectrum};
use super::operator::LinearOperator;
use crate::check::{anchors, CheckRecord};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone)]
pub struct SpectralGap<T: Scalar> {
    /// Smallest nonzero eigenvalue of `-L` in `L^2(mu)`.
    pub gamma: T,
    /// False when the input was not reversible and its symmetric part was used.
    pub reversible: bool,
    /// Spectrum of the (symmetrized) `-L`, ascending.
    pub spectrum: Vec<T>,
    /// Eigenfunction of the gap eigenvalue, unit norm in `L^2(mu)`.
    pub slowest_mode: DVector<T>,
}

/// Spectral gap of a generator via the symmetric eigenproblem of
/// `D^{1/2} (-L) D^{-1/2}`.
pub fn spectral_gap<T: Scalar>(generator: &LinearOperator<T>) -> Result<SpectralGap<T>> {
    let n = generator.dim();
    if n < 2 {
        return Err(Error::Precondition("spectral gap needs at least two states".into()));
    }
    let scale = generator.matrix().amax().max(T::one());
    let tol = T::default_epsilon() * lit::<T>(1e3) * scale;
    let reversible = generator.is_reversible(tol);
    let sym = -generator.similarity();
    let (spectrum, vectors) = symmetric_spectrum(&sym);
    if spectrum[0].abs() > lit::<T>(1e3) * T::default_epsilon().sqrt() * scale {
        return Err(Error::Numerical(format!(
            "lowest eigenvalue {} of -L is not zero",
            spectrum[0]
        )));
    }
    let gamma = spectrum[1];
    let w = generator.measure().weights();
    let mode = DVector::from_fn(n, |i, _| vectors[(i, 1)] / w[i].sqrt());
    let norm = generator.measure().norm(&mode);
    Ok(SpectralGap {
        gamma,
        reversible,
        spectrum,
        slowest_mode: mode / norm,
    })
}

/// Checks `||e^{tL} f - mu(f)|| <= e^{-gamma t} ||f - mu(f)||` for every `f` and `t`.
pub fn contraction_check<T: Scalar>(
    generator: &LinearOperator<T>,
    gamma: T,
    functions: &[DVector<T>],
    times: &[T],
    slack: T,
) -> Result<Vec<CheckRecord>> {
    let mu = generator.measure();
    let mut out = Vec::with_capacity(functions.len() * times.len());
    for &t in times {
        let semigroup = expm(&(generator.matrix() * t))?;
        for (k, f) in functions.iter().enumerate() {
            let m = mu.expect(f);
            let lhs = mu.norm(&(&semigroup * f).map(|x| x - m));
            let rhs = (-gamma * t).exp() * mu.centered_norm(f);
            out.push(CheckRecord::at_most(
                format!("contraction/t={t}/f={k}"),
                anchors::CONTRACTION,
                lhs.as_f64(),
                rhs.as_f64(),
                slack.as_f64(),
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
    use crate::oracle::{random_battery, StateSpace, DEFAULT_STATE_CAP};
    use crate::rates::RateSpec;

    fn env_op(model: EnvModel<f64>, l: usize) -> LinearOperator<f64> {
        let t = LatticeTorus::new(1, l).unwrap();
        crate::oracle::build_generators(&model, &RateSpec::interface(0.0).unwrap(), &t, DEFAULT_STATE_CAP)
            .unwrap()
            .env
    }

    #[test]
    fn independent_flip_gap_is_one() {
        for rho in [0.2, 0.5, 0.85] {
            for l in [3, 4, 6] {
                let g = spectral_gap(&env_op(EnvModel::independent(rho).unwrap(), l)).unwrap();
                assert!((g.gamma - 1.0).abs() < 1e-10, "rho {rho} L {l}: {}", g.gamma);
                assert!(g.reversible);
            }
        }
    }

    #[test]
    fn independent_flip_spectrum_counts_sites() {
        // eigenvalue k appears C(L, k) times
        let g = spectral_gap(&env_op(EnvModel::independent(0.3).unwrap(), 4)).unwrap();
        let mut counts = [0usize; 5];
        for v in g.spectrum {
            counts[v.round() as usize] += 1;
            assert!((v - v.round()).abs() < 1e-10);
        }
        assert_eq!(counts, [1, 4, 6, 4, 1]);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let op = env_op(EnvModel::east(0.5).unwrap(), 4);
        let ones = DVector::from_element(op.dim(), 1.0);
        assert!(op.apply(&ones).amax() < 1e-15);
        let g = spectral_gap(&op).unwrap();
        assert!(g.spectrum[0].abs() < 1e-12);
        assert!(g.gamma > 1e-6);
    }

    #[test]
    fn east_contraction_holds_and_is_tight() {
        let op = env_op(EnvModel::east(0.5).unwrap(), 4);
        let g = spectral_gap(&op).unwrap();
        let mut fs = random_battery::<f64>(op.dim(), 30, 7);
        fs.push(g.slowest_mode.clone());
        let ts = [0.1, 0.5, 1.0, 2.0, 5.0];
        assert!(contraction_check(&op, g.gamma, &fs, &ts, 1e-9)
            .unwrap()
            .iter()
            .all(|c| c.pass));
        assert!(contraction_check(&op, g.gamma * 1.01, &fs, &ts, 1e-9)
            .unwrap()
            .iter()
            .any(|c| !c.pass));
    }

    #[test]
    fn gap_matches_in_single_precision() {
        let t = LatticeTorus::new(1, 4).unwrap();
        let space =
            std::sync::Arc::new(StateSpace::<f32>::build(&EnvModel::independent(0.4f32).unwrap(), &t, 64).unwrap());
        let gens = crate::oracle::build_on_space(space, &RateSpec::<f32>::interface(0.05).unwrap()).unwrap();
        let g = spectral_gap(&gens.env).unwrap();
        assert!((g.gamma - 1.0).abs() < 1e-4);
    }

    #[test]
    fn nonreversible_input_is_flagged() {
        let t = LatticeTorus::new(1, 4).unwrap();
        let totally_asymmetric = RateSpec::from_fn(1, 1, crate::rates::RateFamily::Custom("tasep".into()), |y, _| {
            (if y[0] == 1 { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let gens = crate::oracle::build_generators(
            &EnvModel::independent(0.5).unwrap(),
            &totally_asymmetric,
            &t,
            DEFAULT_STATE_CAP,
        )
        .unwrap();
        let g = spectral_gap(&gens.ew).unwrap();
        assert!(!g.reversible);
        // the jump part only adds a nonnegative Dirichlet form
        assert!(g.gamma >= 1.0 - 1e-10);
    }
}
