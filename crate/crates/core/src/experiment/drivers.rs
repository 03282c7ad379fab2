//! Monte Carlo drivers for the spectral, resolvent and Haar checks.
//!
//! Every driver is a pure function of its arguments: per-trial seeds are
//! derived from the master seed and results are reduced in trial order.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::ensemble::{rescale, MatrixSample, WignerSpec};
use crate::error::{Error, Result};
use crate::haar::{haar_sample, minor, Group, ReferenceLaw};
use crate::resolvent::{
    classical_index, index_window, level_repulsion_margin, local_law_deviation,
    resolvent_coeff_direct, resolvent_coeff_spectral, rigidity_split,
};
use crate::seed::{derive_seed, rng_from_seed};
use crate::spectral::{
    decompose_sample, delocalization_sup, gap, min_gap, Normalization, SpectralDecomposition,
};
use crate::stats::{config_hash, ks_statistic, mean_and_variance, run_trials, TestReport};

fn decompose_rescaled(
    spec: &WignerSpec,
    seed: u64,
) -> Result<(MatrixSample, SpectralDecomposition)> {
    let sample = spec.sample(seed);
    let mut a = sample.clone();
    a.matrix = rescale(&sample);
    let d = decompose_sample(&a, Normalization::Raw)?;
    Ok((sample, d))
}

fn fraction(flags: impl Iterator<Item = bool>, total: usize) -> f64 {
    flags.filter(|&b| b).count() as f64 / total as f64
}

#[derive(Serialize)]
struct DriverConfig<'a, P: Serialize> {
    driver: &'static str,
    spec: &'a WignerSpec,
    trials: usize,
    seed: u64,
    params: P,
}

fn hash<P: Serialize>(
    driver: &'static str,
    spec: &WignerSpec,
    trials: usize,
    seed: u64,
    params: P,
) -> String {
    config_hash(&DriverConfig {
        driver,
        spec,
        trials,
        seed,
        params,
    })
}

/// Per-seed bulk gap data of `A = √n·M`. The bulk is the middle half of the
/// spectrum, gaps `λ_{i+1} − λ_i` with `⌊n/4⌋ <= i <= ⌊3n/4⌋`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    /// Smallest bulk gap per trial.
    pub min_gaps: Vec<f64>,
    /// Mean gap over the middle half of the spectrum, per trial.
    pub bulk_mean_gaps: Vec<f64>,
    /// Fraction of trials with `min_gap <= small_gap`; must not exceed
    /// `max_fraction`.
    pub report: TestReport,
}

pub fn gap_stats(
    spec: &WignerSpec,
    trials: usize,
    seed: u64,
    small_gap: f64,
    max_fraction: f64,
) -> Result<GapStats> {
    let n = spec.n();
    if n < 2 || trials == 0 {
        return Err(Error::InvalidArgument(
            "gap statistics need n >= 2 and trials >= 1".into(),
        ));
    }
    let rows = run_trials(trials, seed, |_, s| -> Result<(f64, f64)> {
        let (_, d) = decompose_rescaled(spec, s)?;
        let lo = (n / 4).max(1);
        let hi = (3 * n / 4).clamp(lo, n - 1);
        let bulk: Vec<f64> = (lo..=hi).map(|i| gap(&d, i)).collect::<Result<_>>()?;
        Ok((
            min_gap(&d, lo, hi)?,
            bulk.iter().sum::<f64>() / bulk.len() as f64,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (min_gaps, bulk_mean_gaps): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let frac = fraction(min_gaps.iter().map(|&g| g <= small_gap), trials);
    let h = hash("gap-stats", spec, trials, seed, (small_gap, max_fraction));
    let report = TestReport::new(
        format!("gap: fraction with bulk min gap <= {small_gap:e}"),
        frac,
        max_fraction,
    )
    .with_run(trials, 0, seed, &h)
    .detail("mean_bulk_gap", mean_and_variance(&bulk_mean_gaps).0);
    Ok(GapStats {
        min_gaps,
        bulk_mean_gaps,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelocalizationStats {
    /// `√n · max_{i,p} |u_{i,p}|` per trial.
    pub scaled_sups: Vec<f64>,
    /// Fraction of trials above `constant`; passes when at most
    /// `1 − min_fraction`.
    pub report: TestReport,
}

pub fn delocalization_stats(
    spec: &WignerSpec,
    trials: usize,
    seed: u64,
    constant: f64,
    min_fraction: f64,
) -> Result<DelocalizationStats> {
    let n = spec.n() as f64;
    let scaled_sups = run_trials(trials, seed, |_, s| -> Result<f64> {
        let (_, d) = decompose_rescaled(spec, s)?;
        Ok(n.sqrt() * delocalization_sup(&d))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let frac = fraction(scaled_sups.iter().map(|&x| x > constant), trials);
    let h = hash(
        "delocalization",
        spec,
        trials,
        seed,
        (constant, min_fraction),
    );
    let report = TestReport::new(
        format!("delocalization: fraction with sqrt(n)*sup|u| > {constant}"),
        frac,
        1.0 - min_fraction,
    )
    .with_run(trials, 0, seed, &h)
    .detail(
        "max_scaled_sup",
        scaled_sups.iter().copied().fold(0.0, f64::max),
    );
    Ok(DelocalizationStats {
        scaled_sups,
        report,
    })
}

/// One row of a resolvent or inverse run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventRow {
    pub seed: u64,
    pub z: Complex64,
    pub p: usize,
    pub q: usize,
    /// `None` when the direct solve was singular.
    pub direct: Option<Complex64>,
    pub spectral: Option<Complex64>,
    /// `inf_i |λ_i(√n·M) − n·z|`.
    pub margin: f64,
}

impl ResolventRow {
    /// `|direct − spectral| / |direct|`.
    pub fn relative_disagreement(&self) -> Option<f64> {
        match (self.direct, self.spectral) {
            (Some(a), Some(b)) => Some((a - b).norm() / a.norm()),
            _ => None,
        }
    }
}

fn resolvent_row(
    spec: &WignerSpec,
    seed: u64,
    z: Complex64,
    p: usize,
    q: usize,
) -> Result<ResolventRow> {
    let (sample, d) = decompose_rescaled(spec, seed)?;
    let margin = level_repulsion_margin(&d, z);
    let direct = match resolvent_coeff_direct(&sample, z, p, q) {
        Ok(v) => Some(v),
        Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    let spectral = match resolvent_coeff_spectral(&d, z, p, q) {
        Ok(v) => Some(v),
        Err(Error::Singular { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ResolventRow {
        seed,
        z,
        p,
        q,
        direct,
        spectral,
        margin,
    })
}

/// Fixed `(z, p, q)` over independent matrices.
pub fn resolvent_trials(
    spec: &WignerSpec,
    z: Complex64,
    p: usize,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<ResolventRow>> {
    run_trials(trials, seed, |_, s| resolvent_row(spec, s, z, p, q))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteComparison {
    pub rows: Vec<ResolventRow>,
    /// Largest relative disagreement between the direct solve and the
    /// spectral sum; threshold `tolerance`.
    pub report: TestReport,
}

/// Random `(matrix, z, p, q)` draws with `margin >= min_margin_factor · n`,
/// comparing the two resolvent routes.
pub fn resolvent_route_comparison(
    spec: &WignerSpec,
    pairs: usize,
    seed: u64,
    min_margin_factor: f64,
    tolerance: f64,
) -> Result<RouteComparison> {
    let n = spec.n();
    let rows = run_trials(pairs, seed, |_, s| -> Result<ResolventRow> {
        let mut rng = rng_from_seed(derive_seed(s, 2));
        for attempt in 0u64.. {
            let e: f64 = rng.random_range(-2.5..2.5);
            let eta = 10f64.powf(rng.random_range(-3.0..0.0));
            let z = Complex64::new(e, eta);
            let p = rng.random_range(1..=n);
            let q = rng.random_range(1..=n);
            let row = resolvent_row(spec, derive_seed(s, 3 + attempt), z, p, q)?;
            if row.margin >= min_margin_factor * n as f64 {
                return Ok(row);
            }
        }
        unreachable!()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst = rows
        .iter()
        .map(|r| r.relative_disagreement().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let agreeing = rows
        .iter()
        .filter(|r| r.relative_disagreement().is_some_and(|x| x <= tolerance))
        .count();
    let h = hash(
        "resolvent-routes",
        spec,
        pairs,
        seed,
        (min_margin_factor, tolerance),
    );
    let report = TestReport::new(
        "resolvent: direct vs spectral relative disagreement",
        worst,
        tolerance,
    )
    .with_run(pairs, 0, seed, &h)
    .detail("agreeing", agreeing as f64);
    Ok(RouteComparison { rows, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseStats {
    pub rows: Vec<ResolventRow>,
    /// Fraction of trials with margin `<= min_margin`.
    pub margin_report: TestReport,
    /// Worst relative disagreement of the two routes over nonsingular draws.
    pub agreement_report: TestReport,
}

/// Level repulsion at `z` and, at `z = 0`, the inverse-matrix coefficient by
/// both routes.
#[allow(clippy::too_many_arguments)]
pub fn level_repulsion_stats(
    spec: &WignerSpec,
    z: Complex64,
    p: usize,
    q: usize,
    trials: usize,
    seed: u64,
    min_margin: f64,
    min_fraction: f64,
    tolerance: f64,
) -> Result<InverseStats> {
    let rows = resolvent_trials(spec, z, p, q, trials, seed)?;
    let small = fraction(rows.iter().map(|r| r.margin <= min_margin), trials);
    let h = hash(
        "level-repulsion",
        spec,
        trials,
        seed,
        (z, p, q, min_margin, min_fraction, tolerance),
    );
    let margin_report = TestReport::new(
        format!("level repulsion: fraction with margin <= {min_margin:e}"),
        small,
        1.0 - min_fraction,
    )
    .with_run(trials, 0, seed, &h)
    .detail(
        "min_margin_seen",
        rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
    );
    let singular = rows.iter().filter(|r| r.direct.is_none()).count();
    let worst = rows
        .iter()
        .filter(|r| r.direct.is_some())
        .map(|r| r.relative_disagreement().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let label = if z.im == 0.0 { "inverse" } else { "resolvent" };
    let agreement_report = TestReport::new(
        format!("{label}: direct vs spectral relative disagreement"),
        worst,
        tolerance,
    )
    .with_run(trials, singular, seed, &h);
    Ok(InverseStats {
        rows,
        margin_report,
        agreement_report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalLawStats {
    pub deviations: Vec<f64>,
    /// Fraction of trials with deviation above `bound`.
    pub report: TestReport,
}

pub fn local_law_stats(
    spec: &WignerSpec,
    z: Complex64,
    trials: usize,
    seed: u64,
    bound: f64,
    min_fraction: f64,
) -> Result<LocalLawStats> {
    let deviations = run_trials(trials, seed, |_, s| local_law_deviation(&spec.sample(s), z))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let frac = fraction(deviations.iter().map(|&d| d > bound), trials);
    let h = hash("local-law", spec, trials, seed, (z, bound, min_fraction));
    let (mean, _) = mean_and_variance(&deviations);
    let report = TestReport::new(
        format!("local law: fraction with deviation > {bound}"),
        frac,
        1.0 - min_fraction,
    )
    .with_run(trials, 0, seed, &h)
    .detail("mean_deviation", mean)
    .detail(
        "max_deviation",
        deviations.iter().copied().fold(0.0, f64::max),
    );
    Ok(LocalLawStats { deviations, report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityStats {
    pub window: (usize, usize),
    pub far_magnitudes: Vec<f64>,
    pub near_magnitudes: Vec<f64>,
    /// Fraction of trials with `|far_sum| > bound`.
    pub report: TestReport,
}

/// Spectral truncation around the classical index of `energy`:
/// `z = E + i·n^{-1}`, `z0 = E + i·n^{-1/2}`, window half-width
/// `n^{window_exponent}`.
#[allow(clippy::too_many_arguments)]
pub fn rigidity_stats(
    spec: &WignerSpec,
    energy: f64,
    window_exponent: f64,
    p: usize,
    q: usize,
    trials: usize,
    seed: u64,
    bound: f64,
    min_fraction: f64,
) -> Result<RigidityStats> {
    let n = spec.n();
    let nf = n as f64;
    let z = Complex64::new(energy, 1.0 / nf);
    let z0 = Complex64::new(energy, nf.powf(-0.5));
    let window = index_window(n, classical_index(n, energy), nf.powf(window_exponent));
    let rows = run_trials(trials, seed, |_, s| -> Result<(f64, f64)> {
        let (_, d) = decompose_rescaled(spec, s)?;
        let split = rigidity_split(&d, Some(window), z, z0, p, q)?;
        Ok((split.far_sum.norm(), split.near_sum.norm()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (far_magnitudes, near_magnitudes): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let frac = fraction(far_magnitudes.iter().map(|&x| x > bound), trials);
    let h = hash(
        "rigidity",
        spec,
        trials,
        seed,
        (energy, window_exponent, p, q, bound, min_fraction),
    );
    let report = TestReport::new(
        format!("rigidity split: fraction with |far| > {bound}"),
        frac,
        1.0 - min_fraction,
    )
    .with_run(trials, 0, seed, &h);
    Ok(RigidityStats {
        window,
        far_magnitudes,
        near_magnitudes,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarStats {
    pub reference: ReferenceLaw,
    /// `Re √n·u_{row,col}` per draw.
    pub samples: Vec<f64>,
    pub ks: TestReport,
    /// `|mean(n·|u|²) − 1|` against three standard errors.
    pub second_moment: TestReport,
}

#[derive(Serialize)]
struct HaarConfig {
    group: Group,
    n: usize,
    draws: usize,
    seed: u64,
    row: usize,
    col: usize,
}

pub fn haar_entry_stats(
    group: Group,
    n: usize,
    draws: usize,
    seed: u64,
    row: usize,
    col: usize,
    ks_threshold: f64,
) -> Result<HaarStats> {
    let pairs = run_trials(draws, seed, |_, s| -> Result<(f64, f64)> {
        let h = haar_sample(group, n, s)?;
        let x = minor(&h, &[row], &[col])?[(0, 0)];
        Ok((x.re, x.norm_sqr()))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (samples, squares): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let reference = match group {
        Group::Orthogonal => ReferenceLaw::RealNormal,
        Group::Unitary => ReferenceLaw::ComplexNormal,
    };
    let h = config_hash(&HaarConfig {
        group,
        n,
        draws,
        seed,
        row,
        col,
    });
    let ks = ks_statistic(&samples, |x| reference.cdf(x))?;
    let (mean, var) = mean_and_variance(&squares);
    let se = (var / draws as f64).sqrt();
    Ok(HaarStats {
        reference,
        ks: TestReport::new(
            format!("haar {group:?} n={n}: KS of sqrt(n) u[{row},{col}]"),
            ks,
            ks_threshold,
        )
        .with_run(draws, 0, seed, &h),
        second_moment: TestReport::new("haar: |E[n u^2] - 1|", (mean - 1.0).abs(), 3.0 * se)
            .with_se(se)
            .with_run(draws, 0, seed, &h)
            .detail("mean", mean),
        samples,
    })
}
