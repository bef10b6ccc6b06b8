use serde::Serialize;

use crate::coupling::{CoupledPath, Walker};
use crate::error::{Error, Result};

/// Estimated diffusion matrix with entrywise standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionReport {
    /// Row-major `d x d`.
    pub matrix: Vec<f64>,
    pub std_error: Vec<f64>,
    pub dim: usize,
    pub replicas: usize,
    pub horizon: f64,
    pub batches: usize,
}

impl DiffusionReport {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn se(&self, i: usize, j: usize) -> f64 {
        self.std_error[i * self.dim + j]
    }
}

fn summarize(per_replica: Vec<Vec<f64>>, dim: usize, horizon: f64, batches: usize) -> Result<DiffusionReport> {
    let (matrix, std_error) = super::report::mean_and_se(&per_replica)?;
    Ok(DiffusionReport {
        matrix,
        std_error,
        dim,
        replicas: per_replica.len(),
        horizon,
        batches,
    })
}

fn outer(dx: &[f64], scale: f64) -> Vec<f64> {
    let d = dx.len();
    (0..d * d).map(|k| dx[k / d] * dx[k % d] * scale).collect()
}

/// Second moments of `(X_T - v T) / sqrt(T)` across replicas.
pub fn estimate_diffusion(paths: &[CoupledPath], which: Walker, v: &[f64]) -> Result<DiffusionReport> {
    estimate_diffusion_batched(paths, which, v, 1)
}

/// Like [`estimate_diffusion`], averaging `batches` consecutive increments of
/// length `T / batches` inside each replica before pooling across replicas.
pub fn estimate_diffusion_batched(
    paths: &[CoupledPath],
    which: Walker,
    v: &[f64],
    batches: usize,
) -> Result<DiffusionReport> {
    let first = paths
        .first()
        .ok_or_else(|| Error::InsufficientData("no replicas".into()))?;
    let dim = first.torus.dim();
    if v.len() != dim || batches == 0 {
        return Err(Error::Precondition("velocity dimension or batch count is wrong".into()));
    }
    let horizon = first.horizon;
    let dt = horizon / batches as f64;
    let per_replica = paths
        .iter()
        .map(|p| {
            let log = p.walker(which);
            let mut acc = vec![0.0; dim * dim];
            for b in 0..batches {
                let (t0, t1) = (b as f64 * dt, (b + 1) as f64 * dt);
                let (x0, x1) = (log.position_at(t0), log.position_at(t1));
                let dx: Vec<f64> = (0..dim).map(|k| (x1[k] - x0[k]) as f64 - v[k] * dt).collect();
                acc.iter_mut()
                    .zip(outer(&dx, 1.0 / dt))
                    .for_each(|(a, o)| *a += o / batches as f64);
            }
            acc
        })
        .collect();
    summarize(per_replica, dim, horizon, batches)
}
