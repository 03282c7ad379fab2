//! Scalar entry laws ("atoms") of Wigner ensembles.
//!
//! Moments are always computed exactly (finite sums or the Gaussian moment
//! formula); sampling is only used by Monte Carlo code.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest supported total moment order `a + b`.
pub const MAX_MOMENT_ORDER: u32 = 12;

/// Default tolerance for moment matching checks.
pub const DEFAULT_MATCH_TOL: f64 = 1e-10;

const PROB_SUM_TOL: f64 = 1e-12;

/// One support point of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAtom {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub prob: f64,
}

impl DiscreteAtom {
    pub fn real(value: f64, prob: f64) -> Self {
        Self {
            re: value,
            im: 0.0,
            prob,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscrete", into = "RawDiscrete")]
pub struct DiscreteLaw {
    atoms: Vec<DiscreteAtom>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDiscrete {
    atoms: Vec<DiscreteAtom>,
}

impl TryFrom<RawDiscrete> for DiscreteLaw {
    type Error = Error;

    fn try_from(raw: RawDiscrete) -> Result<Self> {
        DiscreteLaw::new(raw.atoms)
    }
}

impl From<DiscreteLaw> for RawDiscrete {
    fn from(law: DiscreteLaw) -> Self {
        RawDiscrete { atoms: law.atoms }
    }
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<DiscreteAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        for a in &atoms {
            if !(a.prob > 0.0) || !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom {}+{}i has probability {} (must be > 0, finite values)",
                    a.re, a.im, a.prob
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        for (k, a) in atoms.iter().enumerate() {
            if atoms[..k].iter().any(|b| b.re == a.re && b.im == a.im) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate atom {}+{}i",
                    a.re, a.im
                )));
            }
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = atoms
            .iter()
            .map(|a| {
                acc += a.prob;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { atoms, cumulative })
    }

    pub fn atoms(&self) -> &[DiscreteAtom] {
        &self.atoms
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[k.min(self.atoms.len() - 1)].value()
    }
}

/// Law of a single matrix entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomDistribution {
    GaussianReal {
        mean: f64,
        variance: f64,
    },
    /// Real and imaginary parts iid `N(0, variance/2)`.
    GaussianComplex {
        variance: f64,
    },
    Discrete(DiscreteLaw),
}

impl AtomDistribution {
    pub fn gaussian_real(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "gaussian variance {variance} must be finite and >= 0"
            )));
        }
        Ok(Self::GaussianReal { mean, variance })
    }

    pub fn gaussian_complex(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "gaussian variance {variance} must be finite and >= 0"
            )));
        }
        Ok(Self::GaussianComplex { variance })
    }

    pub fn discrete(atoms: Vec<DiscreteAtom>) -> Result<Self> {
        DiscreteLaw::new(atoms).map(Self::Discrete)
    }

    /// `N(0,1)` on the reals.
    pub fn standard_real() -> Self {
        Self::GaussianReal {
            mean: 0.0,
            variance: 1.0,
        }
    }

    /// Symmetric ±1 coin.
    pub fn rademacher() -> Self {
        Self::discrete(vec![
            DiscreteAtom::real(-1.0, 0.5),
            DiscreteAtom::real(1.0, 0.5),
        ])
        .expect("valid law")
    }

    /// Parse the `{"atoms": [{"re", "im", "prob"}, ...]}` format.
    pub fn from_atom_json(text: &str) -> Result<Self> {
        let law: DiscreteLaw = serde_json::from_str(text)?;
        Ok(Self::Discrete(law))
    }

    pub fn to_atom_json(&self) -> Result<String> {
        match self {
            Self::Discrete(law) => Ok(serde_json::to_string_pretty(law)?),
            _ => Err(Error::InvalidArgument(
                "only discrete laws have an atom-file representation".into(),
            )),
        }
    }

    /// True when every draw is real.
    pub fn is_real(&self) -> bool {
        match self {
            Self::GaussianReal { .. } => true,
            Self::GaussianComplex { variance } => *variance == 0.0,
            Self::Discrete(law) => law.atoms.iter().all(|a| a.im == 0.0),
        }
    }

    /// Law of `factor · ξ`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::GaussianReal { mean, variance } => {
                Self::gaussian_real(mean * factor, variance * factor * factor)
            }
            Self::GaussianComplex { variance } => {
                Self::gaussian_complex(variance * factor * factor)
            }
            Self::Discrete(law) => Self::discrete(
                law.atoms
                    .iter()
                    .map(|a| DiscreteAtom {
                        re: a.re * factor,
                        im: a.im * factor,
                        prob: a.prob,
                    })
                    .collect(),
            ),
        }
    }

    /// `E[|ξ|²] - |E ξ|²`.
    pub fn variance(&self) -> f64 {
        let m = |a, b| self.moment(a, b).expect("order within ceiling");
        m(2, 0) + m(0, 2) - m(1, 0).powi(2) - m(0, 1).powi(2)
    }

    /// Exact mixed moment `E[Re(ξ)^a Im(ξ)^b]`.
    pub fn moment(&self, a: u32, b: u32) -> Result<f64> {
        if a + b > MAX_MOMENT_ORDER {
            return Err(Error::UnsupportedOrder {
                order: a + b,
                ceiling: MAX_MOMENT_ORDER,
            });
        }
        Ok(match self {
            Self::GaussianReal { mean, variance } => {
                if b > 0 {
                    0.0
                } else {
                    shifted_gaussian_moment(*mean, variance.sqrt(), a)
                }
            }
            Self::GaussianComplex { variance } => {
                let sd = (variance / 2.0).sqrt();
                shifted_gaussian_moment(0.0, sd, a) * shifted_gaussian_moment(0.0, sd, b)
            }
            Self::Discrete(law) => law
                .atoms
                .iter()
                .map(|x| x.prob * x.re.powi(a as i32) * x.im.powi(b as i32))
                .sum(),
        })
    }

    /// All mixed moments of total order at most `order`.
    pub fn moment_table(&self, order: u32) -> Result<MomentTable> {
        let mut entries = BTreeMap::new();
        for total in 0..=order {
            for a in 0..=total {
                entries.insert((a, total - a), self.moment(a, total - a)?);
            }
        }
        Ok(MomentTable { order, entries })
    }

    /// `E|ξ|^c0`, the quantity bounded by the finite-moment condition.
    pub fn absolute_moment(&self, c0: f64) -> Result<f64> {
        if !(c0 > 0.0) {
            return Err(Error::InvalidArgument(format!("exponent {c0} must be > 0")));
        }
        Ok(match self {
            Self::Discrete(law) => law
                .atoms
                .iter()
                .map(|a| a.prob * a.value().norm().powf(c0))
                .sum(),
            Self::GaussianComplex { variance } => {
                // |ξ|² is exponential with mean `variance`
                variance.powf(c0 / 2.0) * statrs::function::gamma::gamma(1.0 + c0 / 2.0)
            }
            Self::GaussianReal { mean, variance } => {
                let sd = variance.sqrt();
                if sd == 0.0 {
                    mean.abs().powf(c0)
                } else if *mean == 0.0 {
                    sd.powf(c0)
                        * 2f64.powf(c0 / 2.0)
                        * statrs::function::gamma::gamma((c0 + 1.0) / 2.0)
                        / PI.sqrt()
                } else {
                    gaussian_expectation(*mean, sd, |x| x.abs().powf(c0))
                }
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            Self::GaussianReal { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                Complex64::new(mean + variance.sqrt() * z, 0.0)
            }
            Self::GaussianComplex { variance } => {
                let sd = (variance / 2.0).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(sd * re, sd * im)
            }
            Self::Discrete(law) => law.sample(rng),
        }
    }
}

/// Mixed moments `E[Re^a Im^b]` up to a total order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub order: u32,
    pub entries: BTreeMap<(u32, u32), f64>,
}

impl MomentTable {
    pub fn get(&self, a: u32, b: u32) -> Option<f64> {
        self.entries.get(&(a, b)).copied()
    }
}

/// True iff every mixed moment of order `<= k` agrees within `tol`.
pub fn matches_to_order(
    d1: &AtomDistribution,
    d2: &AtomDistribution,
    k: u32,
    tol: f64,
) -> Result<bool> {
    for total in 0..=k {
        for a in 0..=total {
            let b = total - a;
            if (d1.moment(a, b)? - d2.moment(a, b)?).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Symmetric law on `{-√m4, 0, √m4}` with mean 0, variance 1 and fourth
/// moment `m4`. At `m4 = 1` the zero atom vanishes and this is Rademacher.
pub fn symmetric_three_point(m4: f64) -> Result<AtomDistribution> {
    if !(m4 >= 1.0) || !m4.is_finite() {
        return Err(Error::Infeasible(format!(
            "fourth moment {m4} < 1 violates E X^4 >= (E X^2)^2"
        )));
    }
    let a = m4.sqrt();
    let p = 1.0 / (2.0 * m4);
    let zero_mass = 1.0 - 2.0 * p;
    let mut atoms = vec![DiscreteAtom::real(-a, p)];
    if zero_mass > 0.0 {
        atoms.push(DiscreteAtom::real(0.0, zero_mass));
    }
    atoms.push(DiscreteAtom::real(a, p));
    AtomDistribution::discrete(atoms)
}

/// Complex atom with independent real and imaginary parts, each the
/// three-point law scaled to variance 1/2. Matches `N(0,1)_C` to order 4.
pub fn complex_three_point() -> Result<AtomDistribution> {
    let part = symmetric_three_point(3.0)?.scaled(std::f64::consts::FRAC_1_SQRT_2)?;
    let AtomDistribution::Discrete(law) = part else {
        unreachable!()
    };
    let mut atoms = Vec::new();
    for x in law.atoms() {
        for y in law.atoms() {
            atoms.push(DiscreteAtom {
                re: x.re,
                im: y.re,
                prob: x.prob * y.prob,
            });
        }
    }
    AtomDistribution::discrete(atoms)
}

/// `E|ξ|^c0` for the finite-moment condition.
pub fn condition_c1_bound(dist: &AtomDistribution, c0: f64) -> Result<f64> {
    dist.absolute_moment(c0)
}

fn double_factorial_odd(k: u32) -> f64 {
    // (k-1)!! for even k
    (1..k).step_by(2).map(|j| j as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `E[(mean + sd·Z)^a]` for standard normal `Z`.
fn shifted_gaussian_moment(mean: f64, sd: f64, a: u32) -> f64 {
    (0..=a)
        .step_by(1)
        .filter(|k| k % 2 == 0)
        .map(|k| {
            binomial(a, k) * mean.powi((a - k) as i32) * sd.powi(k as i32) * double_factorial_odd(k)
        })
        .sum()
}

/// Composite Simpson rule for `E f(mean + sd·Z)` over ±12 standard deviations.
fn gaussian_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    let intervals = 24_000usize;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / intervals as f64;
    let density = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    let g = |t: f64| f(mean + sd * t) * density(t);
    let mut acc = g(lo) + g(hi);
    for j in 1..intervals {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + j as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    /// Independent oracle: Simpson quadrature of `x^k φ(x)`.
    fn quadrature_moment(k: i32) -> f64 {
        let n = 200_000;
        let (lo, hi) = (-15.0f64, 15.0f64);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| x.powi(k) * (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let mut s = f(lo) + f(hi);
        for j in 1..n {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * f(lo + j as f64 * h);
        }
        s * h / 3.0
    }

    fn three_point() -> AtomDistribution {
        symmetric_three_point(3.0).unwrap()
    }

    #[test]
    fn gaussian_fourth_moment_against_quadrature() {
        let oracle = quadrature_moment(4);
        assert!((oracle - 3.0).abs() < 1e-9);
        let g = AtomDistribution::standard_real();
        assert!((g.moment(4, 0).unwrap() - oracle).abs() < 1e-9);
        for k in 0..=8 {
            let exact = g.moment(k as u32, 0).unwrap();
            assert!(
                (exact - quadrature_moment(k)).abs() < 1e-7 * (1.0 + exact),
                "order {k}"
            );
        }
    }

    #[test]
    fn discrete_moments() {
        let d = three_point();
        assert!((d.moment(2, 0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(d.moment(3, 0).unwrap(), 0.0);
        assert!((d.moment(4, 0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(d.moment(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn order_ceiling() {
        let g = AtomDistribution::standard_real();
        assert!(g.moment(12, 0).is_ok());
        assert!(matches!(
            g.moment(7, 6),
            Err(Error::UnsupportedOrder { order: 13, .. })
        ));
    }

    #[test]
    fn matching() {
        let g = AtomDistribution::standard_real();
        assert!(matches_to_order(&g, &three_point(), 4, DEFAULT_MATCH_TOL).unwrap());
        let coin = AtomDistribution::rademacher();
        assert!(!matches_to_order(&g, &coin, 4, DEFAULT_MATCH_TOL).unwrap());
        assert!(matches_to_order(&g, &coin, 3, DEFAULT_MATCH_TOL).unwrap());
        assert!(matches_to_order(&coin, &coin, 12, 0.0).unwrap());
    }

    #[test]
    fn three_point_construction() {
        let AtomDistribution::Discrete(law) = three_point() else {
            panic!()
        };
        let s3 = 3f64.sqrt();
        assert_eq!(law.atoms().len(), 3);
        assert!((law.atoms()[0].re + s3).abs() < 1e-15);
        assert!((law.atoms()[0].prob - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(law.atoms()[1].re, 0.0);
        assert!((law.atoms()[1].prob - 2.0 / 3.0).abs() < 1e-15);

        let AtomDistribution::Discrete(coin) = symmetric_three_point(1.0).unwrap() else {
            panic!()
        };
        assert_eq!(
            coin.atoms(),
            &[DiscreteAtom::real(-1.0, 0.5), DiscreteAtom::real(1.0, 0.5)]
        );

        assert!(matches!(
            symmetric_three_point(0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn three_point_matches_gaussian_only_at_three() {
        let g = AtomDistribution::standard_real();
        for m4 in [1.0, 1.5, 2.0, 2.999, 3.0, 3.001, 4.0, 10.0] {
            let d = symmetric_three_point(m4).unwrap();
            assert_eq!(
                matches_to_order(&d, &g, 4, 1e-12).unwrap(),
                m4 == 3.0,
                "m4 = {m4}"
            );
        }
    }

    #[test]
    fn c1_bounds() {
        let coin = AtomDistribution::rademacher();
        assert!((condition_c1_bound(&coin, 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((condition_c1_bound(&three_point(), 4.0).unwrap() - 3.0).abs() < 1e-14);
        let g = AtomDistribution::standard_real();
        assert!((condition_c1_bound(&g, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((condition_c1_bound(&g, 4.0).unwrap() - 3.0).abs() < 1e-12);
        // shifted gaussian goes through quadrature: E|1 + Z|^2 = 2
        let shifted = AtomDistribution::gaussian_real(1.0, 1.0).unwrap();
        assert!((condition_c1_bound(&shifted, 2.0).unwrap() - 2.0).abs() < 1e-9);
        // |ξ|² ~ Exp(1) for N(0,1)_C
        let c = AtomDistribution::gaussian_complex(1.0).unwrap();
        assert!((condition_c1_bound(&c, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((condition_c1_bound(&c, 4.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_three_point_matches_complex_gaussian() {
        let d = complex_three_point().unwrap();
        let g = AtomDistribution::gaussian_complex(1.0).unwrap();
        assert!(!d.is_real());
        assert!(matches_to_order(&d, &g, 4, 1e-12).unwrap());
        assert!((d.moment(2, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_discrete_laws() {
        assert!(AtomDistribution::discrete(vec![]).is_err());
        assert!(AtomDistribution::discrete(vec![DiscreteAtom::real(1.0, 0.7)]).is_err());
        assert!(AtomDistribution::discrete(vec![
            DiscreteAtom::real(1.0, 0.5),
            DiscreteAtom::real(1.0, 0.5)
        ])
        .is_err());
        assert!(AtomDistribution::discrete(vec![
            DiscreteAtom::real(1.0, 1.0),
            DiscreteAtom::real(2.0, 0.0)
        ])
        .is_err());
        assert!(AtomDistribution::gaussian_real(0.0, -1.0).is_err());
    }

    #[test]
    fn atom_json_roundtrip() {
        let text = r#"{"atoms": [{"re": -1.0, "prob": 0.5}, {"re": 1.0, "im": 0.0, "prob": 0.5}]}"#;
        let d = AtomDistribution::from_atom_json(text).unwrap();
        assert_eq!(d, AtomDistribution::rademacher());
        let back = AtomDistribution::from_atom_json(&d.to_atom_json().unwrap()).unwrap();
        assert_eq!(back, d);
        assert!(
            AtomDistribution::from_atom_json(r#"{"atoms": [{"re": 1.0, "prob": 0.9}]}"#).is_err()
        );
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        for d in [
            AtomDistribution::standard_real(),
            AtomDistribution::gaussian_complex(1.0).unwrap(),
            three_point(),
        ] {
            let a: Vec<_> = {
                let mut r = rng_from_seed(9);
                (0..50).map(|_| d.sample(&mut r)).collect()
            };
            let b: Vec<_> = {
                let mut r = rng_from_seed(9);
                (0..50).map(|_| d.sample(&mut r)).collect()
            };
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empirical_moments_within_four_se() {
        let laws = [
            AtomDistribution::standard_real(),
            AtomDistribution::gaussian_real(0.0, 2.0).unwrap(),
            AtomDistribution::gaussian_complex(1.0).unwrap(),
            three_point(),
            AtomDistribution::rademacher(),
            complex_three_point().unwrap(),
        ];
        let draws = 100_000;
        for (k, d) in laws.iter().enumerate() {
            let mut rng = rng_from_seed(1000 + k as u64);
            let xs: Vec<Complex64> = (0..draws).map(|_| d.sample(&mut rng)).collect();
            for (a, b) in [
                (1u32, 0u32),
                (0, 1),
                (2, 0),
                (0, 2),
                (1, 1),
                (3, 0),
                (4, 0),
                (0, 4),
            ] {
                let vals: Vec<f64> = xs
                    .iter()
                    .map(|x| x.re.powi(a as i32) * x.im.powi(b as i32))
                    .collect();
                let mean = vals.iter().sum::<f64>() / draws as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
                let se = (var / draws as f64).sqrt();
                let exact = d.moment(a, b).unwrap();
                assert!(
                    (mean - exact).abs() <= 4.0 * se + 1e-15,
                    "law {k} moment ({a},{b}): {mean} vs {exact} (se {se})"
                );
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn constructed_laws_are_centered_with_prescribed_variance(m4 in 1.0f64..50.0, scale in 0.1f64..5.0) {
            let d = symmetric_three_point(m4).unwrap().scaled(scale).unwrap();
            proptest::prop_assert!(d.moment(1, 0).unwrap().abs() < 1e-12);
            proptest::prop_assert!(d.moment(0, 1).unwrap().abs() < 1e-12);
            let v = d.moment(2, 0).unwrap() + d.moment(0, 2).unwrap();
            proptest::prop_assert!((v - scale * scale).abs() < 1e-12 * (1.0 + scale * scale));
            let m4_scaled = d.moment(4, 0).unwrap();
            proptest::prop_assert!((m4_scaled - m4 * scale.powi(4)).abs() < 1e-10 * m4_scaled);
        }
    }
}
