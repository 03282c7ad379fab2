//! Eigendecomposition and eigenvector observables.
//!
//! Eigenvalues are sorted ascending. Each decomposition keeps the solver's raw
//! eigenvectors next to the normalized ones, so phase-invariant quantities
//! (projection coefficients, Q statistics) are computed from the same bits
//! whatever normalization was requested.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{HermitianMatrix, MatrixSample, Symmetry};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Nearest-gap tolerance below which an eigenvalue counts as repeated.
pub const SIMPLE_GAP_TOL: f64 = 1e-12;

/// Largest number of `(i, p, q)` triples in a joint observable.
pub const MAX_JOINT_K: usize = 5;

const HERMITIAN_TOL: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-12;
const ANCHOR_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 10_000;

/// Phase convention applied to each eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Normalization {
    /// First coefficient of non-negligible magnitude made positive real.
    FirstNonzeroPositive,
    /// Independent uniform phase (Hermitian) or sign (real) per eigenvector.
    RandomPhase { seed: u64 },
    /// Whatever the solver returned.
    Raw,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    raw: DMatrix<Complex64>,
    vectors: DMatrix<Complex64>,
    normalization: Normalization,
    symmetry: Symmetry,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `λ_i`, 1-based.
    pub fn eigenvalue(&self, i: usize) -> Result<f64> {
        check_index("eigenvalue", i, self.dim())?;
        Ok(self.eigenvalues[i - 1])
    }

    /// Normalized eigenvectors as columns.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn eigenvector(&self, i: usize) -> Result<DVector<Complex64>> {
        check_index("eigenvalue", i, self.dim())?;
        Ok(self.vectors.column(i - 1).into_owned())
    }

    /// `u_{i,p}` under the decomposition's normalization.
    pub fn coefficient(&self, i: usize, p: usize) -> Result<Complex64> {
        check_index("eigenvalue", i, self.dim())?;
        check_index("coordinate", p, self.dim())?;
        Ok(self.vectors[(p - 1, i - 1)])
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Same eigenbasis under another phase convention.
    pub fn renormalized(&self, normalization: Normalization) -> Result<Self> {
        let vectors = normalize_columns(&self.raw, normalization, self.symmetry)?;
        Ok(Self {
            eigenvalues: self.eigenvalues.clone(),
            raw: self.raw.clone(),
            vectors,
            normalization,
            symmetry: self.symmetry,
        })
    }

    /// `max_i ‖M u_i − λ_i u_i‖₂`.
    pub fn max_residual(&self, matrix: &HermitianMatrix) -> f64 {
        let m = matrix.to_complex();
        let mu = &m * &self.vectors;
        (0..self.dim())
            .map(|i| {
                (mu.column(i) - self.vectors.column(i) * Complex64::new(self.eigenvalues[i], 0.0))
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |U*U − I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Distance from `λ_i` to its nearest neighbour (infinite when n = 1).
    pub fn nearest_gap(&self, i: usize) -> Result<f64> {
        check_index("eigenvalue", i, self.dim())?;
        let k = i - 1;
        let lam = &self.eigenvalues;
        let below = if k > 0 {
            lam[k] - lam[k - 1]
        } else {
            f64::INFINITY
        };
        let above = if k + 1 < lam.len() {
            lam[k + 1] - lam[k]
        } else {
            f64::INFINITY
        };
        Ok(below.min(above))
    }

    pub fn is_simple(&self, i: usize) -> Result<bool> {
        Ok(self.nearest_gap(i)? > SIMPLE_GAP_TOL)
    }
}

fn check_index(what: &'static str, index: usize, max: usize) -> Result<()> {
    if index == 0 || index > max {
        Err(Error::IndexOutOfRange { what, index, max })
    } else {
        Ok(())
    }
}

/// Decompose a Hermitian matrix and apply `normalization` to each eigenvector.
pub fn decompose(
    matrix: &HermitianMatrix,
    normalization: Normalization,
) -> Result<SpectralDecomposition> {
    decompose_inner(matrix, normalization, None)
}

/// [`decompose`] with the sample's seed attached to solver failures.
pub fn decompose_sample(
    sample: &MatrixSample,
    normalization: Normalization,
) -> Result<SpectralDecomposition> {
    decompose_inner(&sample.matrix, normalization, Some(sample.seed))
}

fn decompose_inner(
    matrix: &HermitianMatrix,
    normalization: Normalization,
    seed: Option<u64>,
) -> Result<SpectralDecomposition> {
    let tolerance = HERMITIAN_TOL * matrix.frobenius_norm();
    let defect = matrix.hermitian_defect();
    if defect > tolerance {
        return Err(Error::NotHermitian { defect, tolerance });
    }
    let n = matrix.dim();
    let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = match matrix {
        HermitianMatrix::Real(m) => {
            let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
                .ok_or(Error::NoConvergence { seed })?;
            let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
            (eig.eigenvalues.iter().copied().collect(), v)
        }
        HermitianMatrix::Complex(m) => {
            let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
                .ok_or(Error::NoConvergence { seed })?;
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence { seed });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let raw = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    let symmetry = matrix.symmetry();
    let normalized = normalize_columns(&raw, normalization, symmetry)?;
    Ok(SpectralDecomposition {
        eigenvalues,
        raw,
        vectors: normalized,
        normalization,
        symmetry,
    })
}

fn normalize_columns(
    raw: &DMatrix<Complex64>,
    normalization: Normalization,
    symmetry: Symmetry,
) -> Result<DMatrix<Complex64>> {
    if normalization == Normalization::Raw {
        return Ok(raw.clone());
    }
    let seed = match normalization {
        Normalization::RandomPhase { seed } => seed,
        _ => 0,
    };
    let mut rng = rng_from_seed(seed);
    let mut out = raw.clone();
    for c in 0..raw.ncols() {
        let u = raw.column(c).into_owned();
        out.set_column(
            c,
            &normalize_eigenvector(&u, normalization, symmetry, &mut rng)?,
        );
    }
    Ok(out)
}

/// Apply one phase convention to a unit vector. `rng` is only consumed by
/// [`Normalization::RandomPhase`]: one uniform angle (Hermitian) or one sign
/// (real symmetric) per call.
pub fn normalize_eigenvector<R: Rng + ?Sized>(
    u: &DVector<Complex64>,
    normalization: Normalization,
    symmetry: Symmetry,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitVector { norm });
    }
    match normalization {
        Normalization::Raw => Ok(u.clone()),
        Normalization::FirstNonzeroPositive => {
            let threshold = ANCHOR_TOL * u.len() as f64;
            let anchor = u
                .iter()
                .position(|x| x.norm() > threshold)
                .ok_or(Error::ZeroVector)?;
            let magnitude = u[anchor].norm();
            let phase = u[anchor].conj() / magnitude;
            let mut v = u * phase;
            v[anchor] = Complex64::new(magnitude, 0.0);
            if symmetry == Symmetry::RealSymmetric {
                v.iter_mut().for_each(|x| x.im = 0.0);
            }
            Ok(v)
        }
        Normalization::RandomPhase { .. } => {
            let phase = match symmetry {
                Symmetry::RealSymmetric => {
                    if rng.random::<bool>() {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(-1.0, 0.0)
                    }
                }
                Symmetry::Hermitian => Complex64::from_polar(1.0, rng.random::<f64>() * TAU),
            };
            Ok(u * phase)
        }
    }
}

/// `P_{i,p,q} = u_{i,p} · conj(u_{i,q})`; independent of normalization.
pub fn projection_coeff(
    d: &SpectralDecomposition,
    i: usize,
    p: usize,
    q: usize,
) -> Result<Complex64> {
    let n = d.dim();
    check_index("eigenvalue", i, n)?;
    check_index("coordinate", p, n)?;
    check_index("coordinate", q, n)?;
    Ok(d.raw[(p - 1, i - 1)] * d.raw[(q - 1, i - 1)].conj())
}

/// `λ_{i+1} − λ_i` for `1 <= i < n`.
pub fn gap(d: &SpectralDecomposition, i: usize) -> Result<f64> {
    let n = d.dim();
    if i == 0 || i >= n {
        return Err(Error::IndexOutOfRange {
            what: "gap",
            index: i,
            max: n.saturating_sub(1),
        });
    }
    Ok(d.eigenvalues[i] - d.eigenvalues[i - 1])
}

/// Smallest gap `λ_{i+1} − λ_i` over `i_lo <= i <= i_hi`.
pub fn min_gap(d: &SpectralDecomposition, i_lo: usize, i_hi: usize) -> Result<f64> {
    if i_lo > i_hi {
        return Err(Error::InvalidArgument(format!(
            "empty gap window [{i_lo}, {i_hi}]"
        )));
    }
    (i_lo..=i_hi).try_fold(f64::INFINITY, |acc, i| Ok(acc.min(gap(d, i)?)))
}

/// `Q_i = Σ_{j≠i} |λ_j − λ_i|^{-2}`.
pub fn q_statistic(d: &SpectralDecomposition, i: usize) -> Result<f64> {
    let g = d.nearest_gap(i)?;
    if g <= SIMPLE_GAP_TOL {
        return Err(Error::DegenerateSpectrum { index: i, gap: g });
    }
    let li = d.eigenvalues[i - 1];
    Ok(d.eigenvalues
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i - 1)
        .map(|(_, lj)| 1.0 / (lj - li).powi(2))
        .sum())
}

/// `max_{i,p} |u_{i,p}|`.
pub fn delocalization_sup(d: &SpectralDecomposition) -> f64 {
    d.raw.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Index triple `(i, p, q)` of one component of the observable tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiIndex {
    pub i: usize,
    pub p: usize,
    pub q: usize,
}

/// Selection of eigenvalues and projection coefficients entering the tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub entries: Vec<PhiIndex>,
}

impl PhiConfig {
    pub fn new(entries: Vec<PhiIndex>) -> Result<Self> {
        if entries.is_empty() || entries.len() > MAX_JOINT_K {
            return Err(Error::InvalidArgument(format!(
                "observable needs between 1 and {MAX_JOINT_K} components, got {}",
                entries.len()
            )));
        }
        Ok(Self { entries })
    }

    pub fn single(i: usize, p: usize, q: usize) -> Self {
        Self {
            entries: vec![PhiIndex { i, p, q }],
        }
    }

    /// Number of real coordinates of the flattened tuple.
    pub fn real_len(&self) -> usize {
        3 * self.entries.len()
    }
}

/// Eigenvalues of `A = √n·M` and scaled projections `n·P_{i,p,q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableTuple {
    pub eigenvalue_part: Vec<f64>,
    pub projection_part: Vec<Complex64>,
}

impl ObservableTuple {
    /// `[λ_1.., Re(nP_1), Im(nP_1), Re(nP_2), ...]`.
    pub fn to_real_coordinates(&self) -> Vec<f64> {
        let mut out = self.eigenvalue_part.clone();
        for z in &self.projection_part {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }
}

/// Assemble the observable tuple from a decomposition of `A = √n·M`.
pub fn phi_observable(d: &SpectralDecomposition, config: &PhiConfig) -> Result<ObservableTuple> {
    if config.entries.is_empty() {
        return Err(Error::InvalidArgument("empty observable".into()));
    }
    let n = d.dim() as f64;
    let mut eigenvalue_part = Vec::with_capacity(config.entries.len());
    let mut projection_part = Vec::with_capacity(config.entries.len());
    for e in &config.entries {
        eigenvalue_part.push(d.eigenvalue(e.i)?);
        let mut p = projection_coeff(d, e.i, e.p, e.q)? * n;
        if e.p == e.q {
            p.im = 0.0;
        }
        projection_part.push(p);
    }
    Ok(ObservableTuple {
        eigenvalue_part,
        projection_part,
    })
}
