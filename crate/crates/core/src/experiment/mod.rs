//! Declarative experiment configuration and the dispatcher that runs it.

pub mod drivers;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atom::AtomDistribution;
use crate::ensemble::{Symmetry, WignerSpec};
use crate::error::{Error, Result};
use crate::haar::{standard_normal_cdf, Group};
use crate::io::{Cell, Table};
use crate::seed::derive_seed;
use crate::spectral::{
    decompose_sample, gap, q_statistic, Normalization, PhiConfig, SpectralDecomposition,
};
use crate::stats::{
    clt_projection_experiment, coefficient_distribution, config_hash, ecdf_table,
    four_moment_compare, CltThresholds, IndexRule, NormalizationKind, SmoothFunctional, TestReport,
    VectorRule,
};
use crate::{Complex64, MatrixSample};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EigvecDist,
    Clt,
    FourMoment,
    Resolvent,
    Inverse,
    GapStats,
    Delocalization,
    HaarCompare,
    LocalLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Goe,
    Gue,
    MatchedGoe,
    MatchedGue,
    Rademacher,
    Custom,
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown ensemble {s:?}")))
    }
}

/// Ensemble selection. `custom` reads atom laws from JSON files; the
/// diagonal defaults to a centered Gaussian of variance 2 (real symmetric)
/// or 1 (Hermitian).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag_atom_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Symmetry>,
}

impl EnsembleConfig {
    pub fn of(kind: EnsembleKind) -> Self {
        Self {
            kind,
            atom_file: None,
            diag_atom_file: None,
            symmetry: None,
        }
    }

    fn read_atom(path: &Path) -> Result<AtomDistribution> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read atom file {}: {e}", path.display())))?;
        AtomDistribution::from_atom_json(&text)
    }

    pub fn build(&self, n: usize) -> Result<WignerSpec> {
        match self.kind {
            EnsembleKind::Goe => WignerSpec::goe(n),
            EnsembleKind::Gue => WignerSpec::gue(n),
            EnsembleKind::MatchedGoe => WignerSpec::matched_goe(n),
            EnsembleKind::MatchedGue => WignerSpec::matched_gue(n),
            EnsembleKind::Rademacher => WignerSpec::rademacher(n),
            EnsembleKind::Custom => {
                let path = self
                    .atom_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("custom ensemble needs atom_file".into()))?;
                let off = Self::read_atom(path)?;
                let symmetry = self.symmetry.unwrap_or(if off.is_real() {
                    Symmetry::RealSymmetric
                } else {
                    Symmetry::Hermitian
                });
                let diag = match &self.diag_atom_file {
                    Some(p) => Self::read_atom(p)?,
                    None => match symmetry {
                        Symmetry::RealSymmetric => AtomDistribution::gaussian_real(0.0, 2.0)?,
                        Symmetry::Hermitian => AtomDistribution::gaussian_real(0.0, 1.0)?,
                    },
                };
                WignerSpec::new(format!("custom:{}", path.display()), n, symmetry, off, diag)
            }
        }
    }
}

/// Overrides of the default pass thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    /// Bound on the per-trial statistic (delocalization constant, local law
    /// deviation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Required fraction of trials within the bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fraction: Option<f64>,
    /// Relative tolerance between computation routes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_one() -> usize {
    1
}

fn default_eta() -> f64 {
    0.1
}

fn default_group() -> Group {
    Group::Orthogonal
}

fn default_vector() -> VectorRule {
    VectorRule::Flat
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableParams {
    /// Eigenvalue index (1-based); `⌊n/2⌋` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default = "default_one")]
    pub p: usize,
    #[serde(default = "default_one")]
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationKind>,
    #[serde(default = "default_vector")]
    pub vector: VectorRule,
    #[serde(default)]
    pub energy: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_group")]
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<SmoothFunctional>,
    #[serde(default)]
    pub allow_hypothesis_violation: bool,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl Default for ObservableParams {
    fn default() -> Self {
        Self {
            index: None,
            p: 1,
            q: 1,
            normalization: None,
            vector: VectorRule::Flat,
            energy: 0.0,
            eta: default_eta(),
            group: Group::Orthogonal,
            phi: None,
            functional: None,
            allow_hypothesis_violation: false,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Directory receiving `report.json` and the plot table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub dump_samples: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_b: Option<EnsembleConfig>,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub observable: ObservableParams,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentKind,
        ensemble: EnsembleKind,
        n: usize,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment,
            ensemble: EnsembleConfig::of(ensemble),
            ensemble_b: None,
            n,
            trials,
            master_seed,
            observable: ObservableParams::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fingerprint of everything that determines the results; output
    /// settings are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        config_hash(&c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        for e in std::iter::once(&self.ensemble).chain(&self.ensemble_b) {
            for f in e.atom_file.iter().chain(&e.diag_atom_file) {
                if !f.is_file() {
                    return bad(format!("atom file {} does not exist", f.display()));
                }
            }
            if e.kind == EnsembleKind::Custom && e.atom_file.is_none() {
                return bad("custom ensemble needs atom_file".into());
            }
        }
        let o = &self.observable;
        for (what, x) in [("p", o.p), ("q", o.q)] {
            if x == 0 || x > self.n {
                return bad(format!("{what} = {x} is outside 1..={}", self.n));
            }
        }
        if let Some(i) = o.index {
            if i == 0 || i > self.n {
                return bad(format!("index = {i} is outside 1..={}", self.n));
            }
        }
        if !(o.eta >= 0.0) || !o.energy.is_finite() {
            return bad("energy must be finite and eta non-negative".into());
        }
        match self.experiment {
            ExperimentKind::FourMoment => {
                if self.ensemble_b.is_none() {
                    return bad("four-moment needs ensemble_b".into());
                }
                if self.trials < 30 {
                    return bad("four-moment needs at least 30 trials".into());
                }
            }
            ExperimentKind::LocalLaw if o.eta <= 0.0 => {
                return bad("local-law needs eta > 0".into())
            }
            _ => {}
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<WignerSpec> {
        self.ensemble.build(self.n)
    }

    fn index_rule(&self) -> IndexRule {
        self.observable
            .index
            .map_or(IndexRule::Middle, IndexRule::Fixed)
    }
}

/// Everything an experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub reports: Vec<TestReport>,
    /// Plot data: ECDF against the reference law, or per-trial rows.
    pub table: Table,
    /// Raw per-trial statistic, when the experiment has one.
    pub samples: Option<Vec<f64>>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

fn seeded_table(columns: &[&str], seed: u64, values: &[&[f64]]) -> Table {
    let mut t = Table::new(columns);
    let len = values.first().map_or(0, |v| v.len());
    for k in 0..len {
        let mut row = vec![Cell::from(derive_seed(seed, k as u64))];
        row.extend(values.iter().map(|v| Cell::from(v[k])));
        t.push(row);
    }
    t
}

/// Run a validated configuration on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let spec = config.spec()?;
    let (n, trials, seed) = (config.n, config.trials, config.master_seed);
    let o = &config.observable;
    let th = &o.thresholds;
    let nf = n as f64;
    let outcome = match config.experiment {
        ExperimentKind::EigvecDist => {
            let r = coefficient_distribution(
                &spec,
                config.index_rule(),
                o.p,
                o.normalization.unwrap_or(NormalizationKind::Adhoc),
                trials,
                seed,
                th.ks.unwrap_or(0.05),
            )?;
            let reference = r.reference;
            RunOutcome {
                reports: vec![r.ks],
                table: Table::ecdf(&ecdf_table(&r.samples, |x| reference.cdf(x))),
                samples: Some(r.samples),
            }
        }
        ExperimentKind::Clt => {
            let defaults = CltThresholds::default();
            let thresholds = CltThresholds {
                ks: th.ks.unwrap_or(defaults.ks),
                mean: th.mean.unwrap_or(defaults.mean),
                variance: th.variance.unwrap_or(defaults.variance),
            };
            let r = clt_projection_experiment(
                &spec,
                config.index_rule(),
                &o.vector,
                o.normalization.unwrap_or(NormalizationKind::Random),
                trials,
                seed,
                thresholds,
                false,
            )?;
            RunOutcome {
                reports: r.reports(),
                table: Table::ecdf(&ecdf_table(&r.samples, standard_normal_cdf)),
                samples: Some(r.samples),
            }
        }
        ExperimentKind::FourMoment => {
            let spec_b = config.ensemble_b.as_ref().expect("validated").build(n)?;
            let i = config.index_rule().resolve(n)?;
            let phi = o
                .phi
                .clone()
                .unwrap_or_else(|| PhiConfig::single(i, o.p, o.q));
            let g = o
                .functional
                .clone()
                .unwrap_or_else(|| SmoothFunctional::GaussianBump {
                    center: phi
                        .entries
                        .iter()
                        .map(|_| 0.0)
                        .chain(
                            phi.entries
                                .iter()
                                .flat_map(|e| [if e.p == e.q { 1.0 } else { 0.0 }, 0.0]),
                        )
                        .collect(),
                    width: 2.0,
                });
            let r = four_moment_compare(
                &spec,
                &spec_b,
                &phi,
                &g,
                trials,
                seed,
                o.allow_hypothesis_violation,
            )?;
            let mut table = Table::new(&["ensemble", "mean", "se"]);
            table.push(vec![
                0usize.into(),
                r.details["mean_a"].into(),
                r.details["se_a"].into(),
            ]);
            table.push(vec![
                1usize.into(),
                r.details["mean_b"].into(),
                r.details["se_b"].into(),
            ]);
            RunOutcome {
                reports: vec![r],
                table,
                samples: None,
            }
        }
        ExperimentKind::Resolvent | ExperimentKind::Inverse => {
            let inverse = config.experiment == ExperimentKind::Inverse || o.eta == 0.0;
            let z = Complex64::new(o.energy, if inverse { 0.0 } else { o.eta });
            let s = drivers::level_repulsion_stats(
                &spec,
                z,
                o.p,
                o.q,
                trials,
                seed,
                th.bound.unwrap_or(nf.powi(-2)),
                th.min_fraction.unwrap_or(0.95),
                th.tolerance.unwrap_or(1e-8),
            )?;
            let mut table =
                Table::new(&["seed", "re", "im", "spectral_re", "spectral_im", "margin"]);
            for r in &s.rows {
                let d = r.direct.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                let sp = r.spectral.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                table.push(vec![
                    r.seed.into(),
                    d.re.into(),
                    d.im.into(),
                    sp.re.into(),
                    sp.im.into(),
                    r.margin.into(),
                ]);
            }
            let reports = if inverse {
                vec![s.margin_report, s.agreement_report]
            } else {
                vec![s.agreement_report]
            };
            RunOutcome {
                reports,
                table,
                samples: Some(s.rows.iter().map(|r| r.margin).collect()),
            }
        }
        ExperimentKind::GapStats => {
            let g = drivers::gap_stats(
                &spec,
                trials,
                seed,
                th.bound.unwrap_or(nf.powi(-2)),
                1.0 - th.min_fraction.unwrap_or(0.98),
            )?;
            RunOutcome {
                table: seeded_table(
                    &["seed", "min_gap", "bulk_mean_gap"],
                    seed,
                    &[&g.min_gaps, &g.bulk_mean_gaps],
                ),
                samples: Some(g.min_gaps),
                reports: vec![g.report],
            }
        }
        ExperimentKind::Delocalization => {
            let d = drivers::delocalization_stats(
                &spec,
                trials,
                seed,
                th.bound.unwrap_or(7.0),
                th.min_fraction.unwrap_or(0.95),
            )?;
            RunOutcome {
                table: seeded_table(&["seed", "scaled_sup"], seed, &[&d.scaled_sups]),
                samples: Some(d.scaled_sups),
                reports: vec![d.report],
            }
        }
        ExperimentKind::HaarCompare => {
            let h = drivers::haar_entry_stats(
                o.group,
                n,
                trials,
                seed,
                o.p,
                o.q,
                th.ks.unwrap_or(0.03),
            )?;
            let reference = h.reference;
            RunOutcome {
                table: Table::ecdf(&ecdf_table(&h.samples, |x| reference.cdf(x))),
                samples: Some(h.samples),
                reports: vec![h.ks, h.second_moment],
            }
        }
        ExperimentKind::LocalLaw => {
            let l = drivers::local_law_stats(
                &spec,
                Complex64::new(o.energy, o.eta),
                trials,
                seed,
                th.bound.unwrap_or(0.15),
                th.min_fraction.unwrap_or(0.95),
            )?;
            RunOutcome {
                table: seeded_table(&["seed", "deviation"], seed, &[&l.deviations]),
                samples: Some(l.deviations),
                reports: vec![l.report],
            }
        }
    };
    Ok(outcome)
}

/// Top-level JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub trials: usize,
    pub pass: bool,
    pub reports: Vec<TestReport>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunReport {
    pub fn new(config: &ExperimentConfig, outcome: &RunOutcome) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: config.experiment,
            config_hash: config.hash(),
            master_seed: config.master_seed,
            trials: config.trials,
            pass: outcome.pass(),
            reports: outcome.reports.clone(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// What to print for a single decomposed sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumEmit {
    Eigenvalues,
    Gaps,
    Q,
    Coeffs,
}

impl std::str::FromStr for SpectrumEmit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenvalues" => Ok(Self::Eigenvalues),
            "gaps" => Ok(Self::Gaps),
            "q" => Ok(Self::Q),
            "coeffs" => Ok(Self::Coeffs),
            other => Err(Error::Config(format!("unknown spectrum output {other:?}"))),
        }
    }
}

/// Decompose `A = √n·M` of one sample under `normalization`.
pub fn decompose_rescaled(
    sample: &MatrixSample,
    normalization: Normalization,
) -> Result<SpectralDecomposition> {
    let mut a = sample.clone();
    a.matrix = crate::ensemble::rescale(sample);
    decompose_sample(&a, normalization)
}

pub fn spectrum_table(d: &SpectralDecomposition, emit: SpectrumEmit) -> Result<Table> {
    let n = d.dim();
    let mut t;
    match emit {
        SpectrumEmit::Eigenvalues => {
            t = Table::new(&["i", "lambda"]);
            for (k, &l) in d.eigenvalues().iter().enumerate() {
                t.push(vec![(k + 1).into(), l.into()]);
            }
        }
        SpectrumEmit::Gaps => {
            t = Table::new(&["i", "gap"]);
            for i in 1..n {
                t.push(vec![i.into(), gap(d, i)?.into()]);
            }
        }
        SpectrumEmit::Q => {
            t = Table::new(&["i", "q"]);
            for i in 1..=n {
                let q = match q_statistic(d, i) {
                    Ok(q) => q,
                    Err(Error::DegenerateSpectrum { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                t.push(vec![i.into(), q.into()]);
            }
        }
        SpectrumEmit::Coeffs => {
            t = Table::new(&["i", "p", "re", "im"]);
            for i in 1..=n {
                for p in 1..=n {
                    let c = d.coefficient(i, p)?;
                    t.push(vec![i.into(), p.into(), c.re.into(), c.im.into()]);
                }
            }
        }
    }
    Ok(t)
}
