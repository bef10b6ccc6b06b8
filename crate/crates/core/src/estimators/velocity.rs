use serde::Serialize;

use super::report::MCReport;
use crate::coupling::{CoupledPath, Walker};
use crate::error::{Error, Result};
use crate::rates::RateSpec;

fn check_paths(paths: &[CoupledPath]) -> Result<f64> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientData("no replicas".into()))?;
    if !(first.horizon > 0.0) {
        return Err(Error::Precondition("horizon must be positive".into()));
    }
    Ok(first.horizon)
}

/// `X_T / T` averaged over replicas.
pub fn estimate_velocity(paths: &[CoupledPath], which: Walker) -> Result<MCReport> {
    let horizon = check_paths(paths)?;
    let samples: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            p.walker(which)
                .final_position()
                .iter()
                .map(|&x| x as f64 / horizon)
                .collect()
        })
        .collect();
    MCReport::from_samples("velocity", &samples, horizon)
}

/// Time average of the local drift along the path, with its variance
/// compared to the plain displacement estimator on the same replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleVelocity {
    pub report: MCReport,
    pub plain: MCReport,
    /// `se(plain)^2 / se(martingale)^2` per axis.
    pub variance_ratio: Vec<f64>,
}

/// `(1/T) int_0^T j(eta_s) ds`, the displacement minus its martingale part.
pub fn estimate_velocity_mart(
    paths: &[CoupledPath],
    spec: &RateSpec<f64>,
    which: Walker,
) -> Result<MartingaleVelocity> {
    let horizon = check_paths(paths)?;
    let perturbed = which == Walker::Perturbed;
    let samples: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            let mut acc = vec![0.0; spec.dim()];
            p.for_each_segment(which, 0.0, |s| {
                let j = spec.jump_observable(&p.torus, &s.seen);
                let j = if perturbed { j.perturbed } else { j.base };
                acc.iter_mut().zip(&j).for_each(|(a, v)| *a += v * (s.end - s.start));
            });
            acc.into_iter().map(|a| a / horizon).collect()
        })
        .collect();
    let report = MCReport::from_samples("velocity-martingale", &samples, horizon)?;
    let plain = estimate_velocity(paths, which)?;
    let variance_ratio = plain
        .std_error
        .iter()
        .zip(&report.std_error)
        .map(|(p, m)| if *m > 0.0 { (p / m).powi(2) } else { f64::INFINITY })
        .collect();
    Ok(MartingaleVelocity {
        report,
        plain,
        variance_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_layout, simulate_replicas, InitialLaw};
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;

    fn run(spec: &RateSpec<f64>, n: usize, horizon: f64) -> Vec<CoupledPath> {
        let t = LatticeTorus::new(1, 6).unwrap();
        let layout = build_layout(spec).unwrap();
        let model = EnvModel::independent(0.3).unwrap();
        simulate_replicas(&model, spec, &layout, &t, &InitialLaw::Product, horizon, 21, n).unwrap()
    }

    #[test]
    fn symmetric_walk_has_zero_velocity() {
        let spec = RateSpec::decoupled(1).unwrap();
        let paths = run(&spec, 400, 20.0);
        let v = estimate_velocity(&paths, Walker::Perturbed)
            .unwrap()
            .with_exact(vec![0.0]);
        assert_eq!(v.agrees(3.0), Some(true));
        let m = estimate_velocity_mart(&paths, &spec, Walker::Perturbed).unwrap();
        // the drift of the decoupled walk vanishes identically
        assert_eq!(m.report.estimate, vec![0.0]);
    }

    #[test]
    fn both_estimators_agree_and_martingale_is_tighter() {
        let spec = RateSpec::interface(0.2).unwrap();
        let paths = run(&spec, 400, 50.0);
        let m = estimate_velocity_mart(&paths, &spec, Walker::Perturbed).unwrap();
        let joint = (m.plain.std_error[0].powi(2) + m.report.std_error[0].powi(2)).sqrt();
        assert!((m.plain.estimate[0] - m.report.estimate[0]).abs() < 3.0 * joint);
        assert!(m.variance_ratio[0] > 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            estimate_velocity(&[], Walker::Perturbed),
            Err(Error::InsufficientData(_))
        ));
    }
}
