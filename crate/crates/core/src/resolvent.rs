//! Resolvent (Green's function) coefficients and the semicircle transform.
//!
//! The resolvent is always that of `M/√n`, i.e. `G(z) = (M/√n − z)^{-1}`.
//! The spectral route expresses it through the decomposition of `A = √n·M`:
//! `G(z)_{pq} = Σ_i n·P_{i,p,q} / (λ_i(A) − n·z)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ensemble::{normalized, HermitianMatrix, MatrixSample};
use crate::error::{Error, Result};
use crate::spectral::{projection_coeff, SpectralDecomposition};

/// Distance to the spectrum below which a resolvent is treated as singular.
pub const SINGULAR_MARGIN: f64 = 1e-12;

/// Stieltjes transform of the semicircle law, `(−z + √(z²−4))/2` on the
/// branch vanishing at infinity.
///
/// The square root is taken as `√(z−2)·√(z+2)` with principal roots. Points
/// of the cut `[-2, 2]` are refused; use [`m_sc_boundary`] for the limit
/// from the upper half-plane.
pub fn m_sc(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re.abs() <= 2.0 {
        return Err(Error::BoundaryValue { re: z.re, im: z.im });
    }
    Ok(m_sc_unchecked(z))
}

/// `lim_{η↓0} m_sc(E + iη)`.
pub fn m_sc_boundary(energy: f64) -> Complex64 {
    if energy.abs() <= 2.0 {
        Complex64::new(-energy / 2.0, (4.0 - energy * energy).sqrt() / 2.0)
    } else {
        m_sc_unchecked(Complex64::new(energy, 0.0))
    }
}

fn m_sc_unchecked(z: Complex64) -> Complex64 {
    let two = Complex64::new(2.0, 0.0);
    (-z + (z - two).sqrt() * (z + two).sqrt()) / 2.0
}

/// Semicircle distribution function on `[-2, 2]`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
    }
}

/// 1-based index `i` whose classical location `γ_i` (semicircle quantile
/// `i/n`) is closest to `energy`.
pub fn classical_index(n: usize, energy: f64) -> usize {
    ((n as f64 * semicircle_cdf(energy)).round() as usize).clamp(1, n)
}

/// Index window `[center − half_width, center + half_width] ∩ [1, n]`.
pub fn index_window(n: usize, center: usize, half_width: f64) -> (usize, usize) {
    let w = half_width.max(0.0).floor() as usize;
    (center.saturating_sub(w).max(1), (center + w).min(n))
}

fn check_coord(p: usize, n: usize) -> Result<()> {
    if p == 0 || p > n {
        Err(Error::IndexOutOfRange {
            what: "coordinate",
            index: p,
            max: n,
        })
    } else {
        Ok(())
    }
}

fn shifted(sample: &MatrixSample, z: Complex64) -> DMatrix<Complex64> {
    let n = sample.n();
    let mut m = normalized(sample).to_complex();
    for k in 0..n {
        m[(k, k)] -= z;
    }
    m
}

/// `min_i |λ_i(M/√n) − z|`, computed from eigenvalues only.
fn spectral_margin(sample: &MatrixSample, z: Complex64) -> f64 {
    let values: Vec<f64> = match normalized(sample) {
        HermitianMatrix::Real(m) => m.symmetric_eigenvalues().iter().copied().collect(),
        HermitianMatrix::Complex(m) => m.symmetric_eigenvalues().iter().copied().collect(),
    };
    values
        .iter()
        .map(|&l| (Complex64::new(l, 0.0) - z).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Away from the real axis the margin is at least `|Im z|`; closer in, it is
/// measured.
fn check_margin(sample: &MatrixSample, z: Complex64) -> Result<()> {
    if z.im.abs() > SINGULAR_MARGIN {
        return Ok(());
    }
    let margin = spectral_margin(sample, z);
    if margin <= SINGULAR_MARGIN {
        Err(Error::Singular { margin })
    } else {
        Ok(())
    }
}

/// `G(z)_{pq}` by solving `(M/√n − z) x = e_q`.
pub fn resolvent_coeff_direct(
    sample: &MatrixSample,
    z: Complex64,
    p: usize,
    q: usize,
) -> Result<Complex64> {
    let n = sample.n();
    check_coord(p, n)?;
    check_coord(q, n)?;
    check_margin(sample, z)?;
    let mut rhs = DVector::<Complex64>::zeros(n);
    rhs[q - 1] = Complex64::new(1.0, 0.0);
    let x = shifted(sample, z)
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular {
            margin: spectral_margin(sample, z),
        })?;
    let value = x[p - 1];
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Singular {
            margin: spectral_margin(sample, z),
        });
    }
    Ok(value)
}

/// `G(z)_{pq} = Σ_i n·P_{i,p,q} / (λ_i(A) − n·z)` from a decomposition of
/// `A = √n·M`.
pub fn resolvent_coeff_spectral(
    d: &SpectralDecomposition,
    z: Complex64,
    p: usize,
    q: usize,
) -> Result<Complex64> {
    let n = d.dim();
    check_coord(p, n)?;
    check_coord(q, n)?;
    let nz = z * n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &lam) in d.eigenvalues().iter().enumerate() {
        let denom = Complex64::new(lam, 0.0) - nz;
        if denom.norm() == 0.0 {
            return Err(Error::Singular { margin: 0.0 });
        }
        acc += projection_coeff(d, k + 1, p, q)? * n as f64 / denom;
    }
    Ok(acc)
}

/// `inf_i |λ_i(A) − n·z|` for a decomposition of `A = √n·M`.
pub fn level_repulsion_margin(d: &SpectralDecomposition, z: Complex64) -> f64 {
    let nz = z * d.dim() as f64;
    d.eigenvalues()
        .iter()
        .map(|&l| (Complex64::new(l, 0.0) - nz).norm())
        .fold(f64::INFINITY, f64::min)
}

/// In-window and out-of-window parts of
/// `G(z)_{pq} − G(z0)_{pq} = Σ_i F(λ_i(A))·n·P_{i,p,q}` with
/// `F(x) = 1/(x − nz) − 1/(x − nz0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigiditySplit {
    pub near_sum: Complex64,
    pub far_sum: Complex64,
}

impl RigiditySplit {
    pub fn total(&self) -> Complex64 {
        self.near_sum + self.far_sum
    }
}

/// Split the comparison sum over a 1-based index window `[lo, hi]`; `None`
/// is the empty window.
pub fn rigidity_split(
    d: &SpectralDecomposition,
    window: Option<(usize, usize)>,
    z: Complex64,
    z0: Complex64,
    p: usize,
    q: usize,
) -> Result<RigiditySplit> {
    let n = d.dim();
    check_coord(p, n)?;
    check_coord(q, n)?;
    if let Some((lo, hi)) = window {
        if lo == 0 || lo > hi || hi > n {
            return Err(Error::InvalidArgument(format!(
                "window [{lo}, {hi}] not inside [1, {n}]"
            )));
        }
    }
    let scale = n as f64;
    let (nz, nz0) = (z * scale, z0 * scale);
    let mut near = Complex64::new(0.0, 0.0);
    let mut far = Complex64::new(0.0, 0.0);
    for (k, &lam) in d.eigenvalues().iter().enumerate() {
        let x = Complex64::new(lam, 0.0);
        let (a, b) = (x - nz, x - nz0);
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return Err(Error::Singular { margin: 0.0 });
        }
        let term = (a.inv() - b.inv()) * projection_coeff(d, k + 1, p, q)? * scale;
        let i = k + 1;
        match window {
            Some((lo, hi)) if (lo..=hi).contains(&i) => near += term,
            _ => far += term,
        }
    }
    Ok(RigiditySplit {
        near_sum: near,
        far_sum: far,
    })
}

/// Full resolvent `(M/√n − z)^{-1}`.
pub fn resolvent_matrix(sample: &MatrixSample, z: Complex64) -> Result<DMatrix<Complex64>> {
    check_margin(sample, z)?;
    shifted(sample, z)
        .try_inverse()
        .ok_or_else(|| Error::Singular {
            margin: spectral_margin(sample, z),
        })
}

/// `max_{p,q} |G(z)_{pq} − m_sc(z)·δ_{pq}|`.
pub fn local_law_deviation(sample: &MatrixSample, z: Complex64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "local law needs Im z > 0, got {}",
            z.im
        )));
    }
    let m = m_sc(z)?;
    let g = resolvent_matrix(sample, z)?;
    let n = sample.n();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            let target = if r == c { m } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((g[(r, c)] - target).norm());
        }
    }
    Ok(worst)
}

/// `(M/√n)^{-1}_{pq}`.
pub fn inverse_coeff(sample: &MatrixSample, p: usize, q: usize) -> Result<Complex64> {
    resolvent_coeff_direct(sample, Complex64::new(0.0, 0.0), p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{rescale, WignerSpec};
    use crate::spectral::{decompose, Normalization};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn explicit(rows: &[&[f64]], spec: WignerSpec) -> MatrixSample {
        let n = rows.len();
        MatrixSample::from_matrix(
            HermitianMatrix::Real(DMatrix::from_fn(n, n, |i, j| rows[i][j])),
            spec,
            0,
        )
        .unwrap()
    }

    #[test]
    fn m_sc_point_values() {
        let m = m_sc(c(0.0, 2.0)).unwrap();
        assert!((m - c(0.0, 2f64.sqrt() - 1.0)).norm() <= 1e-12);
        let m = m_sc(c(0.0, 1.0)).unwrap();
        assert!((m - c(0.0, (5f64.sqrt() - 1.0) / 2.0)).norm() <= 1e-12);
        assert!(matches!(
            m_sc(c(1.0, 0.0)),
            Err(Error::BoundaryValue { .. })
        ));
        assert!(m_sc(c(3.0, 0.0)).unwrap().im.abs() < 1e-15);
        assert!(m_sc(c(3.0, 0.0)).unwrap().re < 0.0);
        assert!(m_sc(c(-3.0, 0.0)).unwrap().re > 0.0);
    }

    #[test]
    fn m_sc_quadratic_identity_and_branch() {
        for a in 0..10 {
            for b in 0..10 {
                let e = -3.0 + 6.0 * a as f64 / 9.0;
                let eta = 1e-3 * (1e4f64).powf(b as f64 / 9.0);
                let z = c(e, eta);
                let m = m_sc(z).unwrap();
                assert!((m * m + z * m + 1.0).norm() <= 1e-12, "z = {z}");
                assert!(m.im > 0.0);
            }
        }
    }

    #[test]
    fn m_sc_laurent_tail() {
        for k in 0..64 {
            let theta = 2.0 * PI * k as f64 / 64.0;
            for r in [10.0, 30.0, 1e3] {
                let z = Complex64::from_polar(r, theta);
                if z.im == 0.0 && z.re.abs() <= 2.0 {
                    continue;
                }
                let m = m_sc(z).unwrap();
                assert!((m + z.inv()).norm() <= 2.0 / r.powi(3), "z = {z}");
            }
        }
    }

    #[test]
    fn m_sc_boundary_limit() {
        for e in [-1.5, 0.0, 0.7, 1.99] {
            let limit = m_sc_boundary(e);
            let near = m_sc(c(e, 1e-10)).unwrap();
            assert!((limit - near).norm() < 1e-6);
        }
    }

    #[test]
    fn direct_route_small_examples() {
        let s = explicit(&[&[2.0]], WignerSpec::goe(1).unwrap());
        assert!(
            (resolvent_coeff_direct(&s, c(0.0, 0.0), 1, 1).unwrap() - c(0.5, 0.0)).norm() < 1e-15
        );
        assert!((inverse_coeff(&s, 1, 1).unwrap() - c(0.5, 0.0)).norm() < 1e-15);

        let zero = explicit(&[&[0.0, 0.0], &[0.0, 0.0]], WignerSpec::goe(2).unwrap());
        assert!(
            (resolvent_coeff_direct(&zero, c(0.0, 1.0), 1, 1).unwrap() - c(0.0, 1.0)).norm()
                < 1e-15
        );
        assert_eq!(
            resolvent_coeff_direct(&zero, c(0.0, 1.0), 1, 2)
                .unwrap()
                .norm(),
            0.0
        );
        assert!(matches!(
            resolvent_coeff_direct(&zero, c(0.0, 0.0), 1, 1),
            Err(Error::Singular { .. })
        ));

        // M/√2 = [[0,1],[1,0]] is an involution
        let r2 = 2f64.sqrt();
        let inv = explicit(&[&[0.0, r2], &[r2, 0.0]], WignerSpec::goe(2).unwrap());
        assert!((inverse_coeff(&inv, 1, 2).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        assert!(inverse_coeff(&inv, 1, 1).unwrap().norm() < 1e-14);
    }

    #[test]
    fn spectral_route_small_examples() {
        let s = explicit(&[&[2.0]], WignerSpec::goe(1).unwrap());
        let d = decompose(&rescale(&s), Normalization::Raw).unwrap();
        assert!(
            (resolvent_coeff_spectral(&d, c(0.0, 0.0), 1, 1).unwrap() - c(0.5, 0.0)).norm() < 1e-15
        );

        let zero = explicit(&[&[0.0, 0.0], &[0.0, 0.0]], WignerSpec::goe(2).unwrap());
        let d = decompose(&rescale(&zero), Normalization::Raw).unwrap();
        assert!(
            (resolvent_coeff_spectral(&d, c(0.0, 1.0), 1, 1).unwrap() - c(0.0, 1.0)).norm() < 1e-15
        );
        assert!(
            resolvent_coeff_spectral(&d, c(0.0, 1.0), 1, 2)
                .unwrap()
                .norm()
                < 1e-15
        );
        assert!(resolvent_coeff_spectral(&d, c(0.0, 0.0), 1, 1).is_err());
    }

    #[test]
    fn routes_agree_on_goe() {
        let s = WignerSpec::goe(50).unwrap().sample(99);
        let d = decompose(&rescale(&s), Normalization::FirstNonzeroPositive).unwrap();
        let z = c(0.3, 0.5);
        for (p, q) in [(1, 1), (3, 17), (50, 2)] {
            let a = resolvent_coeff_direct(&s, z, p, q).unwrap();
            let b = resolvent_coeff_spectral(&d, z, p, q).unwrap();
            assert!((a - b).norm() <= 1e-8 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn real_energy_outside_spectrum_gives_real_values() {
        let s = WignerSpec::goe(40).unwrap().sample(7);
        let d = decompose(&rescale(&s), Normalization::Raw).unwrap();
        let z = c(3.5, 0.0);
        for (p, q) in [(1, 1), (2, 9)] {
            assert!(resolvent_coeff_spectral(&d, z, p, q).unwrap().im.abs() <= 1e-10);
        }
    }

    #[test]
    fn diagonal_resolvent_in_upper_half_plane() {
        let s = WignerSpec::goe(30).unwrap().sample(8);
        let d = decompose(&rescale(&s), Normalization::Raw).unwrap();
        for p in 1..=30 {
            assert!(resolvent_coeff_spectral(&d, c(0.1, 0.01), p, p).unwrap().im >= -1e-12);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let s = WignerSpec::goe(20).unwrap().sample(12);
        let z = c(-0.4, 0.3);
        for (p, q) in [(1, 4), (5, 5), (20, 3)] {
            let a = resolvent_coeff_direct(&s, z.conj(), p, q).unwrap();
            let b = resolvent_coeff_direct(&s, z, q, p).unwrap().conj();
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn margins() {
        let s = explicit(&[&[1.0, 0.0], &[0.0, 3.0]], WignerSpec::goe(2).unwrap());
        // A = √2·M has eigenvalues √2, 3√2; pick n·z = 2√2
        let d = decompose(&rescale(&s), Normalization::Raw).unwrap();
        let z = c(2f64.sqrt(), 0.0);
        assert!((level_repulsion_margin(&d, z) - 2f64.sqrt()).abs() < 1e-12);

        let g = WignerSpec::goe(10).unwrap().sample(1);
        let dg = decompose(&rescale(&g), Normalization::Raw).unwrap();
        assert!(level_repulsion_margin(&dg, c(0.2, 5.0)) >= 10.0 * 5.0);
    }

    #[test]
    fn rigidity_split_windows() {
        let s = WignerSpec::goe(40).unwrap().sample(3);
        let d = decompose(&rescale(&s), Normalization::Raw).unwrap();
        let (z, z0) = (c(0.0, 1.0 / 40.0), c(0.0, 40f64.powf(-0.5)));
        let full = rigidity_split(&d, Some((1, 40)), z, z0, 1, 1).unwrap();
        assert_eq!(full.far_sum, c(0.0, 0.0));
        let empty = rigidity_split(&d, None, z, z0, 1, 1).unwrap();
        assert_eq!(empty.near_sum, c(0.0, 0.0));
        let part = rigidity_split(&d, Some((15, 25)), z, z0, 2, 5).unwrap();
        let expected = resolvent_coeff_spectral(&d, z, 2, 5).unwrap()
            - resolvent_coeff_spectral(&d, z0, 2, 5).unwrap();
        assert!((part.total() - expected).norm() <= 1e-10);
        assert!(rigidity_split(&d, Some((5, 41)), z, z0, 1, 1).is_err());
    }

    #[test]
    fn local_law_on_zero_matrix() {
        let zero = explicit(&[&[0.0, 0.0], &[0.0, 0.0]], WignerSpec::goe(2).unwrap());
        let z = c(0.0, 10.0);
        // G = i/10·I, m_sc(10i) = i(√104 − 10)/2
        let expected = (0.1 - (104f64.sqrt() - 10.0) / 2.0).abs();
        let dev = local_law_deviation(&zero, z).unwrap();
        assert!((dev - expected).abs() < 1e-15);
        assert!(dev > 9e-4 && dev < 1.1e-3);
        assert!(local_law_deviation(&zero, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn local_law_permutation_invariance() {
        let s = WignerSpec::goe(15).unwrap().sample(4);
        let perm: Vec<usize> = (0..15).map(|k| (k * 4 + 3) % 15).collect();
        let permuted =
            MatrixSample::from_matrix(s.matrix.permuted(&perm), s.spec.clone(), s.seed).unwrap();
        let z = c(0.1, 0.1);
        let a = local_law_deviation(&s, z).unwrap();
        let b = local_law_deviation(&permuted, z).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn classical_locations() {
        assert_eq!(classical_index(200, 0.0), 100);
        assert_eq!(classical_index(10, -5.0), 1);
        assert_eq!(classical_index(10, 5.0), 10);
        assert!((semicircle_cdf(1.0) - semicircle_cdf(-1.0) - 0.609).abs() < 1e-3);
        assert_eq!(index_window(200, 100, 200f64.powf(0.3)), (96, 104));
        assert_eq!(index_window(10, 2, 5.0), (1, 7));
    }
}
