//! Wigner ensembles: specification, sampling, rescaling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atom::{symmetric_three_point, AtomDistribution};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

const SPEC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    RealSymmetric,
    Hermitian,
}

/// Full description of a Wigner ensemble of dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSpec {
    name: String,
    n: usize,
    symmetry: Symmetry,
    off_diag: AtomDistribution,
    diag: AtomDistribution,
}

impl WignerSpec {
    /// Validates the Wigner conditions: off-diagonal atom centered with
    /// `E|ξ|² = 1`, diagonal atom real, centered, with positive variance.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        symmetry: Symmetry,
        off_diag: AtomDistribution,
        diag: AtomDistribution,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        let mean = off_diag.moment(1, 0)?.hypot(off_diag.moment(0, 1)?);
        let second = off_diag.moment(2, 0)? + off_diag.moment(0, 2)?;
        if mean > SPEC_TOL || (second - 1.0).abs() > SPEC_TOL {
            return Err(Error::InvalidSpec(format!(
                "off-diagonal atom must have mean 0 and variance 1 (mean {mean}, E|ξ|² {second})"
            )));
        }
        if symmetry == Symmetry::RealSymmetric && !off_diag.is_real() {
            return Err(Error::InvalidSpec(
                "real symmetric ensemble needs a real off-diagonal atom".into(),
            ));
        }
        if !diag.is_real() {
            return Err(Error::InvalidSpec("diagonal atom must be real".into()));
        }
        if diag.moment(1, 0)?.abs() > SPEC_TOL {
            return Err(Error::InvalidSpec("diagonal atom must have mean 0".into()));
        }
        if !(diag.moment(2, 0)? > 0.0) {
            return Err(Error::InvalidSpec("diagonal variance must be > 0".into()));
        }
        Ok(Self {
            name: name.into(),
            n,
            symmetry,
            off_diag,
            diag,
        })
    }

    /// Off-diagonal `N(0,1)_R`, diagonal `N(0,2)_R`.
    pub fn goe(n: usize) -> Result<Self> {
        Self::new(
            "goe",
            n,
            Symmetry::RealSymmetric,
            AtomDistribution::standard_real(),
            AtomDistribution::gaussian_real(0.0, 2.0)?,
        )
    }

    /// Off-diagonal `N(0,1)_C`, diagonal `N(0,1)_R`.
    pub fn gue(n: usize) -> Result<Self> {
        Self::new(
            "gue",
            n,
            Symmetry::Hermitian,
            AtomDistribution::gaussian_complex(1.0)?,
            AtomDistribution::standard_real(),
        )
    }

    /// Discrete real symmetric ensemble matching GOE to order 4 off the
    /// diagonal (three-point law) and to order 2 on it (three-point law
    /// scaled by √2: `±√6` with probability 1/6 each).
    pub fn matched_goe(n: usize) -> Result<Self> {
        let off = symmetric_three_point(3.0)?;
        let diag = off.scaled(std::f64::consts::SQRT_2)?;
        Self::new("matched_goe", n, Symmetry::RealSymmetric, off, diag)
    }

    /// Hermitian discrete ensemble matching GUE to order 4 off the diagonal.
    pub fn matched_gue(n: usize) -> Result<Self> {
        Self::new(
            "matched_gue",
            n,
            Symmetry::Hermitian,
            crate::atom::complex_three_point()?,
            symmetric_three_point(3.0)?,
        )
    }

    /// Rademacher off-diagonal, `N(0,2)_R` diagonal: matches GOE to order 3
    /// only. Used as a negative control.
    pub fn rademacher(n: usize) -> Result<Self> {
        Self::new(
            "rademacher",
            n,
            Symmetry::RealSymmetric,
            AtomDistribution::rademacher(),
            AtomDistribution::gaussian_real(0.0, 2.0)?,
        )
    }

    /// Same atoms, different dimension.
    pub fn with_dim(&self, n: usize) -> Result<Self> {
        Self::new(
            self.name.clone(),
            n,
            self.symmetry,
            self.off_diag.clone(),
            self.diag.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn off_diag(&self) -> &AtomDistribution {
        &self.off_diag
    }

    pub fn diag(&self) -> &AtomDistribution {
        &self.diag
    }

    /// Draw one matrix. Entries consume a single stream in row-major order
    /// over the upper triangle including the diagonal.
    pub fn sample(&self, seed: u64) -> MatrixSample {
        let n = self.n;
        let mut rng = rng_from_seed(seed);
        let matrix = match self.symmetry {
            Symmetry::RealSymmetric => {
                let mut m = DMatrix::<f64>::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = self.diag.sample(&mut rng).re;
                    for j in i + 1..n {
                        let x = self.off_diag.sample(&mut rng).re;
                        m[(i, j)] = x;
                        m[(j, i)] = x;
                    }
                }
                HermitianMatrix::Real(m)
            }
            Symmetry::Hermitian => {
                let mut m = DMatrix::<Complex64>::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = Complex64::new(self.diag.sample(&mut rng).re, 0.0);
                    for j in i + 1..n {
                        let x = self.off_diag.sample(&mut rng);
                        m[(i, j)] = x;
                        m[(j, i)] = x.conj();
                    }
                }
                HermitianMatrix::Complex(m)
            }
        };
        MatrixSample {
            matrix,
            spec: self.clone(),
            seed,
        }
    }
}

/// Dense Hermitian matrix; real storage for the real symmetric class.
#[derive(Debug, Clone, PartialEq)]
pub enum HermitianMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl HermitianMatrix {
    pub fn dim(&self) -> usize {
        match self {
            Self::Real(m) => m.nrows(),
            Self::Complex(m) => m.nrows(),
        }
    }

    pub fn symmetry(&self) -> Symmetry {
        match self {
            Self::Real(_) => Symmetry::RealSymmetric,
            Self::Complex(_) => Symmetry::Hermitian,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            Self::Real(m) => Complex64::new(m[(i, j)], 0.0),
            Self::Complex(m) => m[(i, j)],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Real(m) => Self::Real(m * factor),
            Self::Complex(m) => Self::Complex(m.map(|x| x * factor)),
        }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match self {
            Self::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            Self::Complex(m) => m.clone(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Self::Real(m) => m.norm(),
            Self::Complex(m) => m.norm(),
        }
    }

    /// `max |M_ij − conj(M_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `P M P^T` for the permutation sending coordinate `k` to `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        match self {
            Self::Real(m) => Self::Real(DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])])),
            Self::Complex(m) => Self::Complex(DMatrix::from_fn(n, n, |i, j| m[(perm[i], perm[j])])),
        }
    }
}

/// One sampled Wigner matrix `M` together with its provenance.
#[derive(Debug, Clone)]
pub struct MatrixSample {
    pub matrix: HermitianMatrix,
    pub spec: WignerSpec,
    pub seed: u64,
}

impl MatrixSample {
    /// Wrap an explicit matrix, e.g. for hand-built test cases.
    pub fn from_matrix(matrix: HermitianMatrix, spec: WignerSpec, seed: u64) -> Result<Self> {
        if matrix.dim() != spec.n() {
            return Err(Error::InvalidArgument(format!(
                "matrix dimension {} differs from spec dimension {}",
                matrix.dim(),
                spec.n()
            )));
        }
        Ok(Self { matrix, spec, seed })
    }

    pub fn n(&self) -> usize {
        self.matrix.dim()
    }
}

/// `A = √n · M`, the scaling with unit-order bulk spacing.
pub fn rescale(sample: &MatrixSample) -> HermitianMatrix {
    sample.matrix.scaled((sample.n() as f64).sqrt())
}

/// `M/√n`, the scaling with spectrum near `[-2, 2]`.
pub fn normalized(sample: &MatrixSample) -> HermitianMatrix {
    sample.matrix.scaled(1.0 / (sample.n() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{matches_to_order, DEFAULT_MATCH_TOL};
    use crate::spectral::{decompose, Normalization};

    #[test]
    fn goe_sample_is_exactly_symmetric() {
        for seed in 0..20 {
            let s = WignerSpec::goe(2).unwrap().sample(seed);
            let HermitianMatrix::Real(m) = &s.matrix else {
                panic!()
            };
            assert_eq!(m, &m.transpose());
        }
        let s = WignerSpec::gue(6).unwrap().sample(3);
        let HermitianMatrix::Complex(m) = &s.matrix else {
            panic!()
        };
        assert_eq!(m, &m.adjoint());
        assert_eq!(s.matrix.hermitian_defect(), 0.0);
    }

    #[test]
    fn rademacher_support() {
        let s = WignerSpec::rademacher(3).unwrap().sample(11);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let x = s.matrix.entry(i, j).re;
                    assert!(x == 1.0 || x == -1.0);
                }
            }
        }
    }

    #[test]
    fn goe_diagonal_variance_is_two() {
        let spec = WignerSpec::goe(1).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|s| spec.sample(s).matrix.entry(0, 0).re)
            .collect();
        let t = xs.len() as f64;
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let mean_sq = sq.iter().sum::<f64>() / t;
        let var_sq = sq.iter().map(|v| (v - mean_sq).powi(2)).sum::<f64>() / (t - 1.0);
        let se = (var_sq / t).sqrt();
        assert!((mean_sq - 2.0).abs() <= 3.0 * se, "{mean_sq} ± {se}");
    }

    #[test]
    fn spec_constructors() {
        let m = WignerSpec::matched_goe(5).unwrap();
        assert!(matches_to_order(
            m.off_diag(),
            &AtomDistribution::standard_real(),
            4,
            DEFAULT_MATCH_TOL
        )
        .unwrap());
        assert!((m.diag().moment(2, 0).unwrap() - 2.0).abs() < 1e-14);
        let g2 = AtomDistribution::gaussian_real(0.0, 2.0).unwrap();
        assert!(matches_to_order(m.diag(), &g2, 2, DEFAULT_MATCH_TOL).unwrap());
        assert!(!matches_to_order(m.diag(), &g2, 6, DEFAULT_MATCH_TOL).unwrap());

        let g = WignerSpec::gue(5).unwrap();
        assert!((g.off_diag().moment(2, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((g.off_diag().moment(0, 2).unwrap() - 0.5).abs() < 1e-15);

        let mg = WignerSpec::matched_gue(4).unwrap();
        assert!(matches_to_order(mg.off_diag(), g.off_diag(), 4, DEFAULT_MATCH_TOL).unwrap());
    }

    #[test]
    fn spec_validation() {
        let g = AtomDistribution::standard_real();
        assert!(WignerSpec::new("x", 0, Symmetry::RealSymmetric, g.clone(), g.clone()).is_err());
        let wide = AtomDistribution::gaussian_real(0.0, 2.0).unwrap();
        assert!(WignerSpec::new("x", 3, Symmetry::RealSymmetric, wide, g.clone()).is_err());
        let c = AtomDistribution::gaussian_complex(1.0).unwrap();
        assert!(WignerSpec::new("x", 3, Symmetry::RealSymmetric, c.clone(), g.clone()).is_err());
        assert!(WignerSpec::new("x", 3, Symmetry::Hermitian, c.clone(), c).is_err());
        let shifted = AtomDistribution::gaussian_real(1.0, 1.0).unwrap();
        assert!(WignerSpec::new("x", 3, Symmetry::RealSymmetric, g, shifted).is_err());
    }

    #[test]
    fn rescale_examples() {
        let spec = WignerSpec::goe(4).unwrap();
        let s = MatrixSample::from_matrix(HermitianMatrix::Real(DMatrix::identity(4, 4)), spec, 0)
            .unwrap();
        assert_eq!(
            rescale(&s),
            HermitianMatrix::Real(DMatrix::identity(4, 4) * 2.0)
        );

        let spec1 = WignerSpec::goe(1).unwrap();
        let s1 = MatrixSample::from_matrix(
            HermitianMatrix::Real(DMatrix::from_element(1, 1, 3.0)),
            spec1,
            0,
        )
        .unwrap();
        assert_eq!(
            rescale(&s1),
            HermitianMatrix::Real(DMatrix::from_element(1, 1, 3.0))
        );
    }

    #[test]
    fn rescaled_eigenvalues() {
        let s = WignerSpec::goe(30).unwrap().sample(5);
        let dm = decompose(&s.matrix, Normalization::Raw).unwrap();
        let da = decompose(&rescale(&s), Normalization::Raw).unwrap();
        let r = (30f64).sqrt();
        for (a, m) in da.eigenvalues().iter().zip(dm.eigenvalues()) {
            assert!((a - r * m).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn distinct_entries_uncorrelated() {
        let spec = WignerSpec::goe(3).unwrap();
        let pairs: Vec<(f64, f64)> = (0..10_000)
            .map(|s| {
                let m = spec.sample(s);
                (m.matrix.entry(0, 1).re, m.matrix.entry(1, 2).re)
            })
            .collect();
        let t = pairs.len() as f64;
        let products: Vec<f64> = pairs.iter().map(|(a, b)| a * b).collect();
        let mean = products.iter().sum::<f64>() / t;
        let var = products.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
        assert!(mean.abs() <= 4.0 * (var / t).sqrt());
    }

    #[test]
    fn semicircle_fraction() {
        // ∫_{-1}^{1} √(4−x²)/(2π) dx by the midpoint rule
        let steps = 200_000;
        let h = 2.0 / steps as f64;
        let oracle: f64 = (0..steps)
            .map(|k| {
                let x = -1.0 + (k as f64 + 0.5) * h;
                (4.0 - x * x).sqrt() / (2.0 * std::f64::consts::PI) * h
            })
            .sum();
        assert!((oracle - 0.6090).abs() < 1e-4);

        let n = 400;
        let spec = WignerSpec::goe(n).unwrap();
        let mut frac = 0.0;
        let seeds = 50;
        for seed in 0..seeds {
            let a = rescale(&spec.sample(seed));
            let HermitianMatrix::Real(m) = a else {
                panic!()
            };
            let ev = m.symmetric_eigenvalues();
            frac += ev.iter().filter(|l| (*l / n as f64).abs() <= 1.0).count() as f64 / n as f64;
        }
        frac /= seeds as f64;
        assert!((frac - oracle).abs() <= 0.03, "{frac}");
    }
}
