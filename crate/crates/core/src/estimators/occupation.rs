use nalgebra::DVector;

use super::report::MCReport;
use crate::coupling::{CoupledPath, Walker};
use crate::error::{Error, Result};
use crate::oracle::{MeasureVector, StateSpace};

/// Time discarded before stationary statistics: `max(10 / gamma, 1)`.
pub fn burn_in(gamma: f64) -> f64 {
    (10.0 / gamma).max(1.0)
}

/// Pooled time-occupation measure of the environment seen by the walker.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationReport {
    pub measure: MeasureVector<f64>,
    pub total_time: f64,
    pub burn_in: f64,
}

impl OccupationReport {
    pub fn total_variation(&self, other: &MeasureVector<f64>) -> f64 {
        self.measure.total_variation(other)
    }
}

fn check_burn(paths: &[CoupledPath], burn: f64) -> Result<()> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientData("no replicas".into()))?;
    if !(burn >= 0.0 && burn < first.horizon) {
        return Err(Error::Precondition(format!(
            "burn-in {burn} must lie in [0, {})",
            first.horizon
        )));
    }
    Ok(())
}

/// Fraction of time spent in each state of `space` after `burn`, pooled over replicas.
pub fn estimate_occupation(
    paths: &[CoupledPath],
    which: Walker,
    space: &StateSpace<f64>,
    burn: f64,
) -> Result<OccupationReport> {
    check_burn(paths, burn)?;
    let mut hist = DVector::<f64>::zeros(space.len());
    let mut total = 0.0;
    for p in paths {
        let mut err = None;
        p.for_each_segment(which, burn, |s| match space.index_of(s.seen.bits()) {
            Some(i) => hist[i] += s.end - s.start,
            None => err = Some(s.seen),
        });
        if let Some(seen) = err {
            return Err(Error::Geometry(format!(
                "visited state {seen} outside the enumerated component"
            )));
        }
        total += p.horizon - burn;
    }
    Ok(OccupationReport {
        measure: MeasureVector::from_weights(hist)?,
        total_time: total,
        burn_in: burn,
    })
}

/// Per-replica time average of `f` (tabulated on `space`) after `burn`.
pub fn time_average(
    paths: &[CoupledPath],
    which: Walker,
    space: &StateSpace<f64>,
    f: &DVector<f64>,
    burn: f64,
) -> Result<MCReport> {
    check_burn(paths, burn)?;
    let mut samples = Vec::with_capacity(paths.len());
    for p in paths {
        let mut acc = 0.0;
        let mut missing = false;
        p.for_each_segment(which, burn, |s| match space.index_of(s.seen.bits()) {
            Some(i) => acc += f[i] * (s.end - s.start),
            None => missing = true,
        });
        if missing {
            return Err(Error::Geometry("path left the enumerated component".into()));
        }
        samples.push(vec![acc / (p.horizon - burn)]);
    }
    MCReport::from_samples("time-average", &samples, paths[0].horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{build_layout, simulate_replicas, InitialLaw};
    use crate::env::EnvModel;
    use crate::lattice::LatticeTorus;
    use crate::oracle::{build_generators, stationary_solve, DEFAULT_STATE_CAP};
    use crate::rates::RateSpec;
    use std::sync::Arc;

    #[test]
    fn burn_in_floor() {
        assert_eq!(burn_in(1.0), 10.0);
        assert_eq!(burn_in(100.0), 1.0);
    }

    #[test]
    fn occupation_and_local_averages_match_oracle() {
        let t = LatticeTorus::new(1, 5).unwrap();
        let spec = RateSpec::interface(0.2).unwrap();
        let model = EnvModel::independent(0.3).unwrap();
        let g = build_generators(&model, &spec, &t, DEFAULT_STATE_CAP).unwrap();
        let stat = stationary_solve(&g.ew_eps).unwrap();
        let layout = build_layout(&spec).unwrap();
        let law = InitialLaw::Reference(Arc::clone(&g.space));
        let paths = simulate_replicas(&model, &spec, &layout, &t, &law, 60.0, 17, 300).unwrap();
        let occ = estimate_occupation(&paths, Walker::Perturbed, &g.space, burn_in(1.0)).unwrap();
        assert!(occ.total_variation(&stat.mu_eps) < 0.05);
        for site in 0..5 {
            let f = g.space.function(|e| e.get(site) as f64);
            let avg = time_average(&paths, Walker::Perturbed, &g.space, &f, 10.0)
                .unwrap()
                .with_exact(vec![stat.mu_eps.expect(&f)]);
            assert_eq!(avg.agrees(3.5), Some(true), "{avg:?}");
        }
    }

    #[test]
    fn bad_burn_in() {
        let t = LatticeTorus::new(1, 3).unwrap();
        let spec = RateSpec::decoupled(1).unwrap();
        let model = EnvModel::independent(0.5).unwrap();
        let space = StateSpace::build(&model, &t, DEFAULT_STATE_CAP).unwrap();
        let layout = build_layout(&spec).unwrap();
        let paths = simulate_replicas(&model, &spec, &layout, &t, &InitialLaw::Product, 5.0, 0, 2).unwrap();
        assert!(estimate_occupation(&paths, Walker::Perturbed, &space, 6.0).is_err());
    }
}
