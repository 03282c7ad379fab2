use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_hash, mean_and_variance, SmoothFunctional, TestReport};
use crate::atom::{matches_to_order, DEFAULT_MATCH_TOL};
use crate::ensemble::{rescale, WignerSpec};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::spectral::{decompose_sample, phi_observable, Normalization, PhiConfig};

/// Phase convention chosen per experiment; random phases get a seed derived
/// from the trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    Adhoc,
    Random,
    Raw,
}

impl NormalizationKind {
    pub fn for_trial(self, trial_seed: u64) -> Normalization {
        match self {
            Self::Adhoc => Normalization::FirstNonzeroPositive,
            Self::Random => Normalization::RandomPhase {
                seed: derive_seed(trial_seed, 1),
            },
            Self::Raw => Normalization::Raw,
        }
    }
}

impl std::str::FromStr for NormalizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adhoc" => Ok(Self::Adhoc),
            "random" => Ok(Self::Random),
            "raw" => Ok(Self::Raw),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

/// Run `f(trial_index, trial_seed)` for every trial on the current rayon
/// pool. Results come back in trial order whatever the thread count.
pub fn run_trials<T, F>(trials: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, derive_seed(master_seed, t as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: usize,
    /// Trials whose requested eigenvalue was not simple.
    pub excluded: usize,
    /// Trials whose decomposition failed.
    pub failed: usize,
}

impl FunctionalEstimate {
    pub fn used(&self) -> usize {
        self.trials - self.excluded - self.failed
    }
}

enum TrialOutcome {
    Value(f64),
    Excluded,
    Failed,
}

/// Monte Carlo estimate of `E G(Φ(√n·M))`.
pub fn functional_estimate(
    spec: &WignerSpec,
    phi: &PhiConfig,
    g: &SmoothFunctional,
    trials: usize,
    master_seed: u64,
) -> Result<FunctionalEstimate> {
    if trials < 30 {
        return Err(Error::InvalidArgument(format!(
            "functional estimate needs at least 30 trials, got {trials}"
        )));
    }
    g.validate()?;
    let n = spec.n();
    for e in &phi.entries {
        for (what, x) in [
            ("eigenvalue", e.i),
            ("coordinate", e.p),
            ("coordinate", e.q),
        ] {
            if x == 0 || x > n {
                return Err(Error::IndexOutOfRange {
                    what,
                    index: x,
                    max: n,
                });
            }
        }
    }
    let outcomes = run_trials(trials, master_seed, |_, seed| -> Result<TrialOutcome> {
        let mut sample = spec.sample(seed);
        sample.matrix = rescale(&sample);
        let d = match decompose_sample(&sample, Normalization::Raw) {
            Ok(d) => d,
            Err(Error::NoConvergence { .. }) => return Ok(TrialOutcome::Failed),
            Err(e) => return Err(e),
        };
        for e in &phi.entries {
            if !d.is_simple(e.i)? {
                return Ok(TrialOutcome::Excluded);
            }
        }
        let tuple = phi_observable(&d, phi)?;
        Ok(TrialOutcome::Value(g.eval(&tuple.to_real_coordinates())?))
    });
    let mut values = Vec::with_capacity(trials);
    let (mut excluded, mut failed) = (0, 0);
    for o in outcomes {
        match o? {
            TrialOutcome::Value(v) => values.push(v),
            TrialOutcome::Excluded => excluded += 1,
            TrialOutcome::Failed => failed += 1,
        }
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} usable trials out of {trials}",
            values.len()
        )));
    }
    let (mean, var) = mean_and_variance(&values);
    Ok(FunctionalEstimate {
        mean,
        standard_error: (var / values.len() as f64).sqrt(),
        trials,
        excluded,
        failed,
    })
}

#[derive(Serialize)]
struct CompareConfig<'a> {
    a: &'a WignerSpec,
    b: &'a WignerSpec,
    phi: &'a PhiConfig,
    g: &'a SmoothFunctional,
    trials: usize,
    seed: u64,
}

/// Compare `E G(Φ)` between two ensembles. Refuses unless the off-diagonal
/// atoms match to order 4 and the diagonal atoms to order 2, unless
/// `allow_mismatch` is set, in which case the report carries
/// `hypothesis_ok = 0`.
pub fn four_moment_compare(
    a: &WignerSpec,
    b: &WignerSpec,
    phi: &PhiConfig,
    g: &SmoothFunctional,
    trials: usize,
    seed: u64,
    allow_mismatch: bool,
) -> Result<TestReport> {
    if a.n() != b.n() {
        return Err(Error::InvalidArgument(
            "ensembles differ in dimension".into(),
        ));
    }
    let off_ok = matches_to_order(a.off_diag(), b.off_diag(), 4, DEFAULT_MATCH_TOL)?;
    let diag_ok = matches_to_order(a.diag(), b.diag(), 2, DEFAULT_MATCH_TOL)?;
    let hypothesis_ok = off_ok && diag_ok;
    if !hypothesis_ok && !allow_mismatch {
        return Err(Error::HypothesisViolation(format!(
            "{} vs {}: off-diagonal order-4 match {off_ok}, diagonal order-2 match {diag_ok}",
            a.name(),
            b.name()
        )));
    }
    let ea = functional_estimate(a, phi, g, trials, derive_seed(seed, 0))?;
    let eb = functional_estimate(b, phi, g, trials, derive_seed(seed, 1))?;
    let se = ea.standard_error.hypot(eb.standard_error);
    let hash = config_hash(&CompareConfig {
        a,
        b,
        phi,
        g,
        trials,
        seed,
    });
    Ok(TestReport::new(
        format!("four-moment {} vs {}", a.name(), b.name()),
        (ea.mean - eb.mean).abs(),
        3.0 * se,
    )
    .with_se(se)
    .with_run(
        2 * trials,
        ea.excluded + eb.excluded + ea.failed + eb.failed,
        seed,
        &hash,
    )
    .detail("mean_a", ea.mean)
    .detail("mean_b", eb.mean)
    .detail("se_a", ea.standard_error)
    .detail("se_b", eb.standard_error)
    .detail("hypothesis_ok", if hypothesis_ok { 1.0 } else { 0.0 }))
}
