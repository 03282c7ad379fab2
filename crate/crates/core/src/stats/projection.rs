//! Eigenvector coefficient laws and projection central limit experiments.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    config_hash, correlation, ks_statistic, mean_and_variance, run_trials, NormalizationKind,
    TestReport,
};
use crate::ensemble::{rescale, Symmetry, WignerSpec};
use crate::error::{Error, Result};
use crate::haar::{goe_gue_reference, standard_normal_cdf, ReferenceLaw};
use crate::spectral::{decompose_sample, SpectralDecomposition};

const UNIT_TOL: f64 = 1e-10;
const MAX_FAMILY: usize = 4;

/// Which eigenvalue index to follow as `n` varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexRule {
    /// `⌊n/2⌋`
    Middle,
    Fixed(usize),
}

impl IndexRule {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let i = match self {
            Self::Middle => (n / 2).max(1),
            Self::Fixed(i) => i,
        };
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange {
                what: "eigenvalue",
                index: i,
                max: n,
            });
        }
        Ok(i)
    }
}

/// Unit test vector `a` in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorRule {
    /// `(1, …, 1)/√n`
    Flat,
    /// `(1, −1, 1, …)/√n`
    Alternating,
    /// Standard basis vector `e_k` (1-based).
    Basis(usize),
    Explicit(Vec<f64>),
}

impl VectorRule {
    pub fn resolve(&self, n: usize) -> Result<DVector<f64>> {
        let s = 1.0 / (n as f64).sqrt();
        let v = match self {
            Self::Flat => DVector::from_element(n, s),
            Self::Alternating => DVector::from_fn(n, |k, _| if k % 2 == 0 { s } else { -s }),
            Self::Basis(k) => {
                if *k == 0 || *k > n {
                    return Err(Error::IndexOutOfRange {
                        what: "basis vector",
                        index: *k,
                        max: n,
                    });
                }
                let mut v = DVector::zeros(n);
                v[k - 1] = 1.0;
                v
            }
            Self::Explicit(xs) => {
                if xs.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "vector has {} entries, dimension is {n}",
                        xs.len()
                    )));
                }
                DVector::from_column_slice(xs)
            }
        };
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnitVector { norm });
        }
        Ok(v)
    }
}

fn real_projection(d: &SpectralDecomposition, i: usize, a: &DVector<f64>) -> Result<f64> {
    let u = d.eigenvector(i)?;
    let n = u.len() as f64;
    Ok(n.sqrt() * u.iter().zip(a.iter()).map(|(x, w)| x.re * w).sum::<f64>())
}

enum Draw<T> {
    Value(T),
    Excluded,
}

/// Sample `f(decomposition of √n·M)` over trials, excluding trials where
/// eigenvalue `i` is not simple.
fn collect_draws<T: Send>(
    spec: &WignerSpec,
    i: usize,
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
    f: impl Fn(&SpectralDecomposition) -> Result<T> + Sync + Send,
) -> Result<(Vec<T>, usize)> {
    let draws = run_trials(trials, seed, |_, trial_seed| -> Result<Draw<T>> {
        let mut sample = spec.sample(trial_seed);
        sample.matrix = rescale(&sample);
        let d = decompose_sample(&sample, normalization.for_trial(trial_seed))?;
        if !d.is_simple(i)? {
            return Ok(Draw::Excluded);
        }
        Ok(Draw::Value(f(&d)?))
    });
    let mut values = Vec::with_capacity(trials);
    let mut excluded = 0;
    for d in draws {
        match d? {
            Draw::Value(v) => values.push(v),
            Draw::Excluded => excluded += 1,
        }
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} usable trials out of {trials}",
            values.len()
        )));
    }
    Ok((values, excluded))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub reference: ReferenceLaw,
    pub ks: TestReport,
    pub samples: Vec<f64>,
}

#[derive(Serialize)]
struct CoefficientConfig<'a> {
    spec: &'a WignerSpec,
    i: usize,
    p: usize,
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
}

/// Law of `Re √n·u_{i,p}` against its GOE/GUE limit.
pub fn coefficient_distribution(
    spec: &WignerSpec,
    i: IndexRule,
    p: usize,
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
    ks_threshold: f64,
) -> Result<CoefficientReport> {
    let mut reports =
        coefficient_distributions(spec, i, &[p], normalization, trials, seed, ks_threshold)?;
    Ok(reports.remove(0))
}

/// [`coefficient_distribution`] for several coordinates of the same
/// eigenvector, sharing one decomposition per trial. Each report equals the
/// one obtained for its coordinate alone with the same seed.
pub fn coefficient_distributions(
    spec: &WignerSpec,
    i: IndexRule,
    ps: &[usize],
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
    ks_threshold: f64,
) -> Result<Vec<CoefficientReport>> {
    let n = spec.n();
    let i = i.resolve(n)?;
    if ps.is_empty() {
        return Err(Error::InvalidArgument("no coordinates requested".into()));
    }
    let references = ps
        .iter()
        .map(|&p| goe_gue_reference(spec.symmetry(), n, i, p, normalization.for_trial(0)))
        .collect::<Result<Vec<_>>>()?;
    let scale = (n as f64).sqrt();
    let (rows, excluded) = collect_draws(spec, i, normalization, trials, seed, |d| {
        ps.iter()
            .map(|&p| Ok(d.coefficient(i, p)?.re * scale))
            .collect::<Result<Vec<f64>>>()
    })?;
    ps.iter()
        .zip(references)
        .enumerate()
        .map(|(k, (&p, reference))| {
            let samples: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let ks = ks_statistic(&samples, |x| reference.cdf(x))?;
            let hash = config_hash(&CoefficientConfig {
                spec,
                i,
                p,
                normalization,
                trials,
                seed,
            });
            let (mean, var) = mean_and_variance(&samples);
            let report = TestReport::new(
                format!("coefficient u[{i},{p}] of {} vs {reference:?}", spec.name()),
                ks,
                ks_threshold,
            )
            .with_run(trials, excluded, seed, &hash)
            .detail("mean", mean)
            .detail("variance", var)
            .detail("reference_mean", reference.mean());
            Ok(CoefficientReport {
                reference,
                ks: report,
                samples,
            })
        })
        .collect()
}

/// Pass thresholds for the projection CLT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltThresholds {
    pub ks: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Default for CltThresholds {
    fn default() -> Self {
        Self {
            ks: 0.06,
            mean: 0.1,
            variance: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub ks: TestReport,
    pub mean: TestReport,
    pub variance: TestReport,
    pub samples: Vec<f64>,
}

impl CltReport {
    pub fn pass(&self) -> bool {
        self.ks.pass && self.mean.pass && self.variance.pass
    }

    pub fn reports(&self) -> Vec<TestReport> {
        vec![self.ks.clone(), self.mean.clone(), self.variance.clone()]
    }
}

#[derive(Serialize)]
struct CltConfig<'a> {
    spec: &'a WignerSpec,
    i: usize,
    a: &'a VectorRule,
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
}

fn require_real(spec: &WignerSpec) -> Result<()> {
    if spec.symmetry() != Symmetry::RealSymmetric {
        return Err(Error::InvalidArgument(
            "projection CLT is stated for real symmetric ensembles".into(),
        ));
    }
    Ok(())
}

/// Law of `√n·(a · u_i)` against `N(0,1)`.
///
/// Under the first-coefficient-positive normalization the weight on the first
/// coordinate must be small, `|a·e_1| <= n^{-1/4}`; `allow_first_coordinate`
/// lifts that check.
#[allow(clippy::too_many_arguments)]
pub fn clt_projection_experiment(
    spec: &WignerSpec,
    i: IndexRule,
    a: &VectorRule,
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
    thresholds: CltThresholds,
    allow_first_coordinate: bool,
) -> Result<CltReport> {
    require_real(spec)?;
    let n = spec.n();
    let i = i.resolve(n)?;
    let vector = a.resolve(n)?;
    if normalization == NormalizationKind::Adhoc && !allow_first_coordinate {
        let limit = (n as f64).powf(-0.25);
        if vector[0].abs() > limit {
            return Err(Error::InvalidArgument(format!(
                "|a·e_1| = {} exceeds n^(-1/4) = {limit} under the first-coefficient-positive normalization",
                vector[0].abs()
            )));
        }
    }
    let (samples, excluded) = collect_draws(spec, i, normalization, trials, seed, |d| {
        real_projection(d, i, &vector)
    })?;
    let used = samples.len() as f64;
    let hash = config_hash(&CltConfig {
        spec,
        i,
        a,
        normalization,
        trials,
        seed,
    });
    let (mean, var) = mean_and_variance(&samples);
    let ks = ks_statistic(&samples, standard_normal_cdf)?;
    let fourth = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / used;
    let var_se = ((fourth - var * var).max(0.0) / used).sqrt();
    let label = format!("projection of u[{i}] ({})", spec.name());
    Ok(CltReport {
        ks: TestReport::new(format!("{label} KS vs N(0,1)"), ks, thresholds.ks)
            .with_run(trials, excluded, seed, &hash),
        mean: TestReport::new(format!("{label} |mean|"), mean.abs(), thresholds.mean)
            .with_se((var / used).sqrt())
            .with_run(trials, excluded, seed, &hash)
            .detail("mean", mean),
        variance: TestReport::new(
            format!("{label} |variance - 1|"),
            (var - 1.0).abs(),
            thresholds.variance,
        )
        .with_se(var_se)
        .with_run(trials, excluded, seed, &hash)
        .detail("variance", var),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub coordinates: Vec<TestReport>,
    pub correlations: Vec<TestReport>,
    /// `samples[j][t]`: projection on `a_j` in trial `t`.
    pub samples: Vec<Vec<f64>>,
}

impl FamilyReport {
    pub fn pass(&self) -> bool {
        self.coordinates
            .iter()
            .chain(&self.correlations)
            .all(|r| r.pass)
    }
}

#[derive(Serialize)]
struct FamilyConfig<'a> {
    spec: &'a WignerSpec,
    i: usize,
    family: &'a [VectorRule],
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
}

/// Joint law of `√n·(a_j · u_i)` for an orthonormal family of at most four
/// vectors: per-coordinate KS against `N(0,1)` and pairwise correlations
/// against 0 at 4 standard errors.
pub fn orthonormal_family_clt(
    spec: &WignerSpec,
    i: IndexRule,
    family: &[VectorRule],
    normalization: NormalizationKind,
    trials: usize,
    seed: u64,
    ks_threshold: f64,
) -> Result<FamilyReport> {
    require_real(spec)?;
    if family.is_empty() || family.len() > MAX_FAMILY {
        return Err(Error::InvalidArgument(format!(
            "family size must be in 1..={MAX_FAMILY}"
        )));
    }
    let n = spec.n();
    let i = i.resolve(n)?;
    let vectors = family
        .iter()
        .map(|a| a.resolve(n))
        .collect::<Result<Vec<_>>>()?;
    for (j, a) in vectors.iter().enumerate() {
        for (k, b) in vectors.iter().enumerate().skip(j + 1) {
            let dot = a.dot(b);
            if dot.abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "family vectors {j} and {k} are not orthogonal (dot {dot})"
                )));
            }
        }
    }
    let (rows, excluded) = collect_draws(spec, i, normalization, trials, seed, |d| {
        vectors
            .iter()
            .map(|a| real_projection(d, i, a))
            .collect::<Result<Vec<f64>>>()
    })?;
    let samples: Vec<Vec<f64>> = (0..vectors.len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let hash = config_hash(&FamilyConfig {
        spec,
        i,
        family,
        normalization,
        trials,
        seed,
    });
    let used = rows.len() as f64;
    let coordinates = samples
        .iter()
        .enumerate()
        .map(|(j, xs)| {
            let ks = ks_statistic(xs, standard_normal_cdf)?;
            Ok(TestReport::new(
                format!("family coordinate {j} KS vs N(0,1)"),
                ks,
                ks_threshold,
            )
            .with_run(trials, excluded, seed, &hash))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut correlations = Vec::new();
    for j in 0..samples.len() {
        for k in j + 1..samples.len() {
            let r = correlation(&samples[j], &samples[k]);
            let se = (1.0 - r * r) / (used - 1.0).sqrt();
            correlations.push(
                TestReport::new(format!("family correlation ({j},{k})"), r.abs(), 4.0 * se)
                    .with_se(se)
                    .with_run(trials, excluded, seed, &hash)
                    .detail("correlation", r),
            );
        }
    }
    Ok(FamilyReport {
        coordinates,
        correlations,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_vector_rules() {
        assert_eq!(IndexRule::Middle.resolve(200).unwrap(), 100);
        assert_eq!(IndexRule::Middle.resolve(1).unwrap(), 1);
        assert!(IndexRule::Fixed(0).resolve(5).is_err());
        assert!((VectorRule::Flat.resolve(7).unwrap().norm() - 1.0).abs() < 1e-14);
        assert_eq!(
            VectorRule::Basis(2).resolve(3).unwrap(),
            DVector::from_vec(vec![0.0, 1.0, 0.0])
        );
        assert!(matches!(
            VectorRule::Explicit(vec![1.0, 1.0]).resolve(2),
            Err(Error::NotUnitVector { .. })
        ));
        assert!(VectorRule::Basis(4).resolve(3).is_err());
    }

    #[test]
    fn first_coordinate_refused_under_adhoc() {
        let spec = WignerSpec::goe(50).unwrap();
        let r = clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Basis(1),
            NormalizationKind::Adhoc,
            50,
            1,
            CltThresholds::default(),
            false,
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        // the override produces the half-normal coefficient, nowhere near N(0,1)
        let r = clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Basis(1),
            NormalizationKind::Adhoc,
            300,
            1,
            CltThresholds::default(),
            true,
        )
        .unwrap();
        assert!(r.samples.iter().all(|&x| x >= 0.0));
        assert!(!r.pass());
    }

    #[test]
    fn hermitian_refused() {
        let spec = WignerSpec::gue(10).unwrap();
        assert!(clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Flat,
            NormalizationKind::Random,
            40,
            1,
            CltThresholds::default(),
            false
        )
        .is_err());
    }

    #[test]
    fn coordinate_projection_reduces_to_coefficient_law() {
        let spec = WignerSpec::goe(60).unwrap();
        let r = clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Basis(2),
            NormalizationKind::Adhoc,
            800,
            4,
            CltThresholds::default(),
            false,
        )
        .unwrap();
        assert!(r.pass(), "{:?}", r.reports());
        let c = coefficient_distribution(
            &spec,
            IndexRule::Middle,
            2,
            NormalizationKind::Adhoc,
            800,
            4,
            0.06,
        )
        .unwrap();
        assert_eq!(c.samples, r.samples);
    }

    #[test]
    fn single_member_family_matches_clt() {
        let spec = WignerSpec::goe(40).unwrap();
        let fam = orthonormal_family_clt(
            &spec,
            IndexRule::Middle,
            &[VectorRule::Flat],
            NormalizationKind::Random,
            200,
            9,
            0.1,
        )
        .unwrap();
        let clt = clt_projection_experiment(
            &spec,
            IndexRule::Middle,
            &VectorRule::Flat,
            NormalizationKind::Random,
            200,
            9,
            CltThresholds::default(),
            false,
        )
        .unwrap();
        assert_eq!(fam.samples[0], clt.samples);
        assert!(fam.correlations.is_empty());
    }

    #[test]
    fn family_validation() {
        let spec = WignerSpec::goe(10).unwrap();
        let r = orthonormal_family_clt(
            &spec,
            IndexRule::Middle,
            &[VectorRule::Flat, VectorRule::Basis(1)],
            NormalizationKind::Random,
            40,
            1,
            0.1,
        );
        assert!(r.is_err());
        let five = vec![VectorRule::Basis(1); 5];
        assert!(orthonormal_family_clt(
            &spec,
            IndexRule::Middle,
            &five,
            NormalizationKind::Random,
            40,
            1,
            0.1
        )
        .is_err());
    }

    #[test]
    fn basis_family_joint_second_moments() {
        let spec = WignerSpec::goe(80).unwrap();
        let fam = orthonormal_family_clt(
            &spec,
            IndexRule::Middle,
            &[
                VectorRule::Basis(2),
                VectorRule::Basis(3),
                VectorRule::Basis(4),
            ],
            NormalizationKind::Random,
            2000,
            21,
            0.06,
        )
        .unwrap();
        let t = fam.samples[0].len() as f64;
        let check = |vals: Vec<f64>, target: f64| {
            let (m, v) = mean_and_variance(&vals);
            assert!(
                (m - target).abs() <= 4.0 * (v / t).sqrt(),
                "{m} vs {target}"
            );
        };
        for j in 0..3 {
            check(fam.samples[j].clone(), 0.0);
            check(fam.samples[j].iter().map(|x| x * x).collect(), 1.0);
            for k in j + 1..3 {
                check(
                    fam.samples[j]
                        .iter()
                        .zip(&fam.samples[k])
                        .map(|(a, b)| a * b)
                        .collect(),
                    0.0,
                );
            }
        }
        assert!(fam.pass(), "{fam:?}");
    }

    #[test]
    fn joint_coefficients_equal_separate_runs() {
        let spec = WignerSpec::goe(12).unwrap();
        let joint = coefficient_distributions(
            &spec,
            IndexRule::Middle,
            &[2, 1],
            NormalizationKind::Adhoc,
            60,
            4,
            0.2,
        )
        .unwrap();
        for (k, p) in [2, 1].into_iter().enumerate() {
            let alone = coefficient_distribution(
                &spec,
                IndexRule::Middle,
                p,
                NormalizationKind::Adhoc,
                60,
                4,
                0.2,
            )
            .unwrap();
            assert_eq!(joint[k], alone);
        }
        assert!(coefficient_distributions(
            &spec,
            IndexRule::Middle,
            &[],
            NormalizationKind::Adhoc,
            60,
            4,
            0.2
        )
        .is_err());
    }
}
