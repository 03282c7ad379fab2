//! Haar-distributed orthogonal and unitary matrices, and the limiting
//! coefficient laws of GOE/GUE eigenvectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ensemble::Symmetry;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::spectral::Normalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Orthogonal,
    Unitary,
}

impl From<Symmetry> for Group {
    fn from(s: Symmetry) -> Self {
        match s {
            Symmetry::RealSymmetric => Group::Orthogonal,
            Symmetry::Hermitian => Group::Unitary,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HaarMatrix {
    pub entries: DMatrix<Complex64>,
    pub group: Group,
}

impl HaarMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.entries.adjoint() * &self.entries;
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

    /// Rows permuted: row `k` of the result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        Self {
            entries: DMatrix::from_fn(n, n, |i, j| self.entries[(perm[i], j)]),
            group: self.group,
        }
    }
}

/// Exact Haar sample: QR of an iid Gaussian matrix with the columns of Q
/// rotated by the phases of R's diagonal.
pub fn haar_sample(group: Group, n: usize, seed: u64) -> Result<HaarMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let entries = match group {
            Group::Orthogonal => {
                let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
                let qr = g.qr();
                let r = qr.r();
                if (0..n).any(|k| r[(k, k)] == 0.0) {
                    continue;
                }
                let mut q = qr.q();
                for k in 0..n {
                    if r[(k, k)] < 0.0 {
                        q.column_mut(k).neg_mut();
                    }
                }
                q.map(|x| Complex64::new(x, 0.0))
            }
            Group::Unitary => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(s * re, s * im)
                });
                let qr = g.qr();
                let r = qr.r();
                if (0..n).any(|k| r[(k, k)].norm() == 0.0) {
                    continue;
                }
                let mut q = qr.q();
                for k in 0..n {
                    let phase = r[(k, k)] / r[(k, k)].norm();
                    for row in 0..n {
                        q[(row, k)] *= phase;
                    }
                }
                q
            }
        };
        return Ok(HaarMatrix { entries, group });
    }
}

/// `√n` times the block with the given 1-based rows and columns.
pub fn minor(h: &HaarMatrix, rows: &[usize], cols: &[usize]) -> Result<DMatrix<Complex64>> {
    let n = h.dim();
    for list in [rows, cols] {
        if list.is_empty() || list.len() > n {
            return Err(Error::InvalidArgument(format!(
                "minor index list of length {} for dimension {n}",
                list.len()
            )));
        }
        for (k, &x) in list.iter().enumerate() {
            if x == 0 || x > n {
                return Err(Error::IndexOutOfRange {
                    what: "minor",
                    index: x,
                    max: n,
                });
            }
            if list[..k].contains(&x) {
                return Err(Error::InvalidArgument(format!("repeated minor index {x}")));
            }
        }
    }
    let scale = (n as f64).sqrt();
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        h.entries[(rows[a] - 1, cols[b] - 1)] * scale
    }))
}

/// Limiting law of a rescaled eigenvector coefficient `√n·u_{i,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLaw {
    /// `N(0,1)_R`
    RealNormal,
    /// `|N(0,1)_R|`
    HalfNormal,
    /// `N(0,1)_C`
    ComplexNormal,
    /// `|N(0,1)_C|`
    ComplexModulus,
}

impl ReferenceLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let z: f64 = rng.sample(StandardNormal);
        match self {
            Self::RealNormal => Complex64::new(z, 0.0),
            Self::HalfNormal => Complex64::new(z.abs(), 0.0),
            Self::ComplexNormal | Self::ComplexModulus => {
                let w: f64 = rng.sample(StandardNormal);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let c = Complex64::new(s * z, s * w);
                if *self == Self::ComplexModulus {
                    Complex64::new(c.norm(), 0.0)
                } else {
                    c
                }
            }
        }
    }

    /// CDF of the real observable the law describes: the value itself for
    /// real laws, the real part for `N(0,1)_C`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::RealNormal => standard_normal_cdf(x),
            Self::HalfNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    2.0 * standard_normal_cdf(x) - 1.0
                }
            }
            Self::ComplexNormal => standard_normal_cdf(x * std::f64::consts::SQRT_2),
            Self::ComplexModulus => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (-x * x).exp()
                }
            }
        }
    }

    /// Mean of the real observable described by [`cdf`](Self::cdf).
    pub fn mean(&self) -> f64 {
        match self {
            Self::RealNormal | Self::ComplexNormal => 0.0,
            Self::HalfNormal => (2.0 / std::f64::consts::PI).sqrt(),
            Self::ComplexModulus => std::f64::consts::PI.sqrt() / 2.0,
        }
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Self::ComplexNormal)
    }
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Limiting law of `√n·u_{i,p}` for GOE (`RealSymmetric`) or GUE
/// (`Hermitian`). Under the first-coefficient-positive convention the first
/// coordinate carries a modulus law; otherwise the plain Gaussian.
pub fn goe_gue_reference(
    symmetry: Symmetry,
    n: usize,
    i: usize,
    p: usize,
    normalization: Normalization,
) -> Result<ReferenceLaw> {
    for (what, x) in [("eigenvalue", i), ("coordinate", p)] {
        if x == 0 || x > n {
            return Err(Error::IndexOutOfRange {
                what,
                index: x,
                max: n,
            });
        }
    }
    let first_adhoc = match normalization {
        Normalization::FirstNonzeroPositive => p == 1,
        Normalization::RandomPhase { .. } => false,
        Normalization::Raw => {
            return Err(Error::InvalidArgument(
                "raw eigenvectors have no limiting coefficient law".into(),
            ))
        }
    };
    Ok(match (symmetry, first_adhoc) {
        (Symmetry::RealSymmetric, true) => ReferenceLaw::HalfNormal,
        (Symmetry::RealSymmetric, false) => ReferenceLaw::RealNormal,
        (Symmetry::Hermitian, true) => ReferenceLaw::ComplexModulus,
        (Symmetry::Hermitian, false) => ReferenceLaw::ComplexNormal,
    })
}
