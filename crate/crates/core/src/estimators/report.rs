use serde::Serialize;

use crate::error::{Error, Result};

/// Vector-valued Monte Carlo estimate with standard errors across replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    pub label: String,
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub replicas: usize,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub exact: Option<Vec<f64>>,
}

impl MCReport {
    /// Builds a report from one sample vector per replica.
    pub fn from_samples(label: impl Into<String>, samples: &[Vec<f64>], horizon: f64) -> Result<Self> {
        let (estimate, std_error) = mean_and_se(samples)?;
        Ok(Self {
            label: label.into(),
            estimate,
            std_error,
            replicas: samples.len(),
            horizon,
            seed: None,
            exact: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_exact(mut self, exact: Vec<f64>) -> Self {
        self.exact = Some(exact);
        self
    }

    /// `|estimate - exact| / se` per coordinate; `None` without an exact value.
    pub fn z_scores(&self) -> Option<Vec<f64>> {
        let exact = self.exact.as_ref()?;
        Some(
            self.estimate
                .iter()
                .zip(&self.std_error)
                .zip(exact)
                .map(|((m, s), e)| {
                    if *s > 0.0 {
                        (m - e).abs() / s
                    } else if m == e {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .collect(),
        )
    }

    /// Every coordinate within `k` standard errors of the exact value.
    pub fn agrees(&self, k: f64) -> Option<bool> {
        self.z_scores().map(|z| z.iter().all(|&z| z <= k))
    }
}

/// Coordinate-wise sample mean and standard error of the mean.
pub fn mean_and_se(samples: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} replicas; at least 2 are needed")));
    }
    let d = samples[0].len();
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|k| samples.iter().map(|s| s[k]).sum::<f64>() / nf).collect();
    let se = (0..d)
        .map(|k| {
            let ss: f64 = samples.iter().map(|s| (s[k] - mean[k]).powi(2)).sum();
            (ss / (nf - 1.0) / nf).sqrt()
        })
        .collect();
    Ok((mean, se))
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (sxx, sxy, syy) = x.iter().zip(y).fold((0.0, 0.0, 0.0), |(a, b, c), (&xi, &yi)| {
        let (dx, dy) = (xi - mx, yi - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}
