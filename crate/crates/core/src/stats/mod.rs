//! Turning Monte Carlo samples into verdicts.

mod functional;
mod montecarlo;
mod projection;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use functional::SmoothFunctional;
pub use montecarlo::{
    four_moment_compare, functional_estimate, run_trials, FunctionalEstimate, NormalizationKind,
};
pub use projection::{
    clt_projection_experiment, coefficient_distribution, coefficient_distributions,
    orthonormal_family_clt, CltReport, CltThresholds, CoefficientReport, FamilyReport, IndexRule,
    VectorRule,
};

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: String,
    pub observable: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        Self { values, provenance }
    }

    pub fn trials(&self) -> usize {
        self.values.len()
    }
}

/// Outcome of one fixed-threshold check. `pass ⇔ statistic ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    #[serde(rename = "se")]
    pub standard_error: Option<f64>,
    pub pass: bool,
    pub trials: usize,
    pub excluded: usize,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            standard_error: None,
            pass: statistic <= threshold,
            trials: 0,
            excluded: 0,
            seed: 0,
            config_hash: String::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    pub fn with_run(
        mut self,
        trials: usize,
        excluded: usize,
        seed: u64,
        config_hash: &str,
    ) -> Self {
        self.trials = trials;
        self.excluded = excluded;
        self.seed = seed;
        self.config_hash = config_hash.to_owned();
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_owned(), value);
        self
    }

    /// One-line human verdict.
    pub fn verdict_line(&self) -> String {
        format!(
            "{} {}: statistic {} vs threshold {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            short(self.statistic),
            short(self.threshold)
        )
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

/// Short SHA-256 fingerprint of a serializable configuration.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    xs
}

/// One-sample Kolmogorov–Smirnov distance to a reference CDF.
pub fn ks_statistic(values: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs = sorted(values);
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |acc, (k, &x)| {
        let f = reference_cdf(x);
        let upper = ((k + 1) as f64 / n - f).abs();
        let lower = (k as f64 / n - f).abs();
        acc.max(upper).max(lower)
    }))
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        worst = worst.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(worst)
}

fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic one-sample KS critical value at level `alpha`.
pub fn ks_threshold(n: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

/// Raw moment estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: u32,
    pub estimate: f64,
    pub standard_error: f64,
}

/// Plug-in estimates of `E X^k` with delete-one jackknife standard errors.
pub fn moment_report(values: &[f64], orders: &[u32]) -> Result<Vec<MomentEstimate>> {
    if values.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    Ok(orders
        .iter()
        .map(|&order| {
            let powers: Vec<f64> = values.iter().map(|x| x.powi(order as i32)).collect();
            let total: f64 = powers.iter().sum();
            let estimate = total / n;
            let loo: Vec<f64> = powers.iter().map(|v| (total - v) / (n - 1.0)).collect();
            let loo_mean = loo.iter().sum::<f64>() / n;
            let ss: f64 = loo.iter().map(|t| (t - loo_mean).powi(2)).sum();
            MomentEstimate {
                order,
                estimate,
                standard_error: ((n - 1.0) / n * ss).sqrt(),
            }
        })
        .collect())
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_and_variance(a);
    let (mb, vb) = mean_and_variance(b);
    let n = a.len() as f64;
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1.0);
    cov / (va * vb).sqrt()
}

/// ECDF table rows `(value, ecdf, reference)`, sorted by value.
pub fn ecdf_table(values: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Vec<(f64, f64, f64)> {
    let xs = sorted(values);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| (x, (k + 1) as f64 / n, reference_cdf(x)))
        .collect()
}
