use serde::Serialize;

use super::report::{linear_fit, LinearFit};
use crate::coupling::{CoupledPath, Walker};
use crate::error::{Error, Result};
use crate::lattice::SpinConfig;

/// Minimum replica count for the diagnostics.
pub const MIN_REPLICAS: usize = 200;

/// Walker positions on a common time grid, one row per replica.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPaths {
    /// Increasing grid `t_1 < ... < t_m = T`.
    pub times: Vec<f64>,
    /// `positions[replica][i][axis] = X_{t_i}`.
    pub positions: Vec<Vec<Vec<f64>>>,
    /// `rest_max[replica][i] = max_{s <= t_i} |g(eta_0) - g(eta_s)|` for a corrector `g`.
    pub rest_max: Option<Vec<Vec<f64>>>,
}

impl SampledPaths {
    /// Samples `which` at `T i / m`, `i = 1..=m`; with a corrector, also tracks the rest term.
    pub fn from_coupled(
        paths: &[CoupledPath],
        which: Walker,
        m: usize,
        corrector: Option<&(dyn Fn(&SpinConfig) -> f64 + Sync)>,
    ) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InsufficientData("no replicas".into()))?;
        if m == 0 {
            return Err(Error::Precondition("empty time grid".into()));
        }
        let horizon = first.horizon;
        let times: Vec<f64> = (1..=m).map(|i| horizon * i as f64 / m as f64).collect();
        let positions = paths
            .iter()
            .map(|p| {
                let log = p.walker(which);
                times
                    .iter()
                    .map(|&t| log.position_at(t).iter().map(|&x| x as f64).collect())
                    .collect()
            })
            .collect();
        let rest_max = corrector.map(|g| {
            paths
                .iter()
                .map(|p| {
                    let mut out = vec![0.0; m];
                    let mut g0 = None;
                    let mut running = 0.0f64;
                    let mut i = 0;
                    p.for_each_segment(which, 0.0, |s| {
                        let gs = g(&s.seen);
                        let base = *g0.get_or_insert(gs);
                        while i < m && times[i] < s.start {
                            out[i] = running;
                            i += 1;
                        }
                        running = running.max((base - gs).abs());
                    });
                    while i < m {
                        out[i] = running;
                        i += 1;
                    }
                    out
                })
                .collect()
        });
        Ok(Self {
            times,
            positions,
            rest_max,
        })
    }

    pub fn replicas(&self) -> usize {
        self.positions.len()
    }
}

/// Scaling, normality and rest-term diagnostics for the invariance principle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FcltReport {
    /// `E|X_t - v t|^2` on the time grid.
    pub variance: Vec<f64>,
    pub variance_fit: Option<LinearFit>,
    pub degenerate: bool,
    /// Jarque-Bera statistic of the first coordinate of the standardized endpoint.
    pub jarque_bera: f64,
    /// Asymptotic p-value `exp(-JB / 2)`.
    pub normality_p: f64,
    pub normal_at_1pct: bool,
    /// `(T_k, mean max_{t <= T_k} |R_t| / sqrt(T_k))` on dyadic sub-horizons.
    pub rest_ratios: Vec<(f64, f64)>,
    pub rest_decreasing: Option<bool>,
}

/// Diagnostics for `(X_{nt} - v n t) / sqrt(n)`; needs at least 200 replicas.
pub fn fclt_diagnostics(paths: &SampledPaths, v: &[f64]) -> Result<FcltReport> {
    let n = paths.replicas();
    if n < MIN_REPLICAS {
        return Err(Error::InsufficientData(format!(
            "{n} replicas; at least {MIN_REPLICAS} are needed"
        )));
    }
    let m = paths.times.len();
    let centred = |r: usize, i: usize| -> Vec<f64> {
        paths.positions[r][i]
            .iter()
            .zip(v)
            .map(|(x, vk)| x - vk * paths.times[i])
            .collect()
    };
    let variance: Vec<f64> = (0..m)
        .map(|i| {
            (0..n)
                .map(|r| centred(r, i).iter().map(|c| c * c).sum::<f64>())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let degenerate = variance[m - 1] <= 1e-12;
    let variance_fit = if degenerate {
        None
    } else {
        linear_fit(&paths.times, &variance)
    };

    let z: Vec<f64> = (0..n).map(|r| centred(r, m - 1)[0]).collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let m2 = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let (jarque_bera, normality_p) = if m2 > 0.0 {
        let m3 = z.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n as f64;
        let m4 = z.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let skew = m3 / m2.powf(1.5);
        let kurt = m4 / (m2 * m2);
        let jb = n as f64 / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
        (jb, (-jb / 2.0).exp())
    } else {
        (f64::INFINITY, 0.0)
    };

    let mut rest_ratios = Vec::new();
    if let Some(rest) = &paths.rest_max {
        let mut i = m;
        while i >= 1 {
            let t = paths.times[i - 1];
            let avg = rest.iter().map(|row| row[i - 1]).sum::<f64>() / n as f64;
            rest_ratios.push((t, avg / t.sqrt()));
            if !i.is_multiple_of(2) {
                break;
            }
            i /= 2;
        }
        rest_ratios.reverse();
    }
    let rest_decreasing = (rest_ratios.len() >= 2).then(|| rest_ratios.windows(2).all(|w| w[1].1 <= w[0].1));
    Ok(FcltReport {
        variance,
        variance_fit,
        degenerate,
        jarque_bera,
        normality_p,
        normal_at_1pct: normality_p > 0.01,
        rest_ratios,
        rest_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn brownian(n: usize, m: usize, horizon: f64, d: f64, seed: u64) -> SampledPaths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dt = horizon / m as f64;
        let times = (1..=m).map(|i| i as f64 * dt).collect();
        let positions = (0..n)
            .map(|_| {
                let mut x = 0.0;
                (0..m)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        x += (d * dt).sqrt() * g;
                        vec![x]
                    })
                    .collect()
            })
            .collect();
        // a bounded rest term: max |R| stays O(1), so the ratio falls like T^{-1/2}
        let rest_max = Some((0..n).map(|_| vec![1.0; m]).collect());
        SampledPaths {
            times,
            positions,
            rest_max,
        }
    }

    #[test]
    fn brownian_ground_truth_passes() {
        let p = brownian(2000, 64, 64.0, 2.0, 5);
        let r = fclt_diagnostics(&p, &[0.0]).unwrap();
        let fit = r.variance_fit.unwrap();
        assert!(fit.r2 > 0.98, "{fit:?}");
        assert!((fit.slope - 2.0).abs() < 0.2);
        assert!(r.normal_at_1pct);
        assert!(!r.degenerate);
        assert_eq!(r.rest_ratios.len(), 7);
        assert_eq!(r.rest_decreasing, Some(true));
    }

    #[test]
    fn frozen_paths_are_degenerate() {
        let p = SampledPaths {
            times: vec![1.0, 2.0],
            positions: vec![vec![vec![0.0], vec![0.0]]; 250],
            rest_max: None,
        };
        let r = fclt_diagnostics(&p, &[0.0]).unwrap();
        assert!(r.degenerate && r.variance_fit.is_none() && !r.normal_at_1pct);
        assert_eq!(r.rest_decreasing, None);
    }

    #[test]
    fn too_few_replicas() {
        let p = brownian(50, 4, 4.0, 1.0, 1);
        assert!(matches!(fclt_diagnostics(&p, &[0.0]), Err(Error::InsufficientData(_))));
    }
}
