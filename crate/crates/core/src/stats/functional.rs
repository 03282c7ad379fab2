//! Closed catalog of smooth test functionals `G` applied to the flattened
//! observable tuple. Each variant declares bounds on `|G|` and on its first
//! five derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order with a declared bound.
pub const MAX_DERIVATIVE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothFunctional {
    /// Smooth plateau on one coordinate: 1 on `[lower, upper]`, 0 outside
    /// `[lower − ramp, upper + ramp]`, with C⁵ polynomial ramps. Infinite
    /// bounds are allowed (`lower = upper = ±∞` pairs give `G ≡ 1`).
    BoundedPolynomialWindow {
        coordinate: usize,
        lower: f64,
        upper: f64,
        ramp: f64,
    },
    /// `exp(−|x − center|² / (2·width²))` over all coordinates.
    GaussianBump { center: Vec<f64>, width: f64 },
    /// `x[coordinate]`.
    Coordinate { coordinate: usize },
    /// `sin(frequency·x[coordinate] + phase)`.
    Sine {
        coordinate: usize,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

/// C⁵ smoothstep `S(t) = t⁶ Σ_{k=0}^{5} C(5+k,k) C(11,5−k) (−t)^k` on [0, 1].
fn smoothstep5(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    smoothstep_coefficients()
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * t + c)
}

/// Power-basis coefficients of the smoothstep polynomial, degree 0..=11.
fn smoothstep_coefficients() -> [f64; 12] {
    let binom = |n: i64, k: i64| -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    };
    let mut c = [0.0; 12];
    for k in 0..=5i64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c[(6 + k) as usize] = sign * binom(5 + k, k) * binom(11, 5 - k);
    }
    c
}

/// `max_{t∈[0,1]} |S^{(j)}(t)|` on a fine grid, padded by 1%.
fn smoothstep_derivative_sup(j: usize) -> f64 {
    let mut coeffs: Vec<f64> = smoothstep_coefficients().to_vec();
    for _ in 0..j {
        coeffs = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
    }
    let steps = 20_000;
    (0..=steps)
        .map(|s| {
            let t = s as f64 / steps as f64;
            coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c).abs()
        })
        .fold(0.0, f64::max)
        * 1.01
}

/// `sup_s |d^j/ds^j e^{−s²/2}|` via probabilists' Hermite polynomials.
fn gaussian_derivative_sup(j: usize) -> f64 {
    let steps = 40_000;
    (0..=steps)
        .map(|k| {
            let s = -10.0 + 20.0 * k as f64 / steps as f64;
            let (mut h0, mut h1) = (1.0, s);
            let he = match j {
                0 => 1.0,
                _ => {
                    for m in 1..j {
                        let h2 = s * h1 - m as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                }
            };
            (he * (-0.5 * s * s).exp()).abs()
        })
        .fold(0.0, f64::max)
        * 1.01
}

impl SmoothFunctional {
    fn coordinate_of(x: &[f64], c: usize) -> Result<f64> {
        x.get(c).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "functional reads coordinate {c} of a {}-vector",
                x.len()
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_owned()));
        match self {
            Self::BoundedPolynomialWindow {
                lower, upper, ramp, ..
            } => {
                if !(ramp > &0.0) || !ramp.is_finite() {
                    return bad("window ramp must be positive and finite");
                }
                if !(lower <= upper) {
                    return bad("window lower bound exceeds upper bound");
                }
            }
            Self::GaussianBump { center, width } => {
                if !(width > &0.0) || center.is_empty() {
                    return bad("gaussian bump needs a center and a positive width");
                }
            }
            Self::Sine { frequency, .. } => {
                if !frequency.is_finite() {
                    return bad("sine frequency must be finite");
                }
            }
            Self::Coordinate { .. } => {}
        }
        Ok(())
    }

    /// `G(x)` for a flattened observable tuple.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            Self::BoundedPolynomialWindow {
                coordinate,
                lower,
                upper,
                ramp,
            } => {
                let v = Self::coordinate_of(x, *coordinate)?;
                smoothstep5((v - lower) / ramp + 1.0) * smoothstep5((upper - v) / ramp + 1.0)
            }
            Self::GaussianBump { center, width } => {
                if center.len() != x.len() {
                    return Err(Error::InvalidArgument(format!(
                        "bump center has {} coordinates, observable has {}",
                        center.len(),
                        x.len()
                    )));
                }
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            Self::Coordinate { coordinate } => Self::coordinate_of(x, *coordinate)?,
            Self::Sine {
                coordinate,
                frequency,
                phase,
            } => (frequency * Self::coordinate_of(x, *coordinate)? + phase).sin(),
        })
    }

    /// Declared `sup |G|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            Self::Coordinate { .. } => f64::INFINITY,
            _ => 1.0,
        }
    }

    /// Declared bound on the operator norm of `∇^j G`, `1 <= j <= 5`.
    pub fn derivative_bound(&self, j: usize) -> Result<f64> {
        if j == 0 {
            return Ok(self.sup_bound());
        }
        if j > MAX_DERIVATIVE {
            return Err(Error::InvalidArgument(format!(
                "derivative bounds are declared up to order {MAX_DERIVATIVE}"
            )));
        }
        Ok(match self {
            Self::BoundedPolynomialWindow { ramp, .. } => {
                // Leibniz over the two ramps
                let sups: Vec<f64> = (0..=j).map(smoothstep_derivative_sup).collect();
                let mut binom = 1.0;
                let mut total = 0.0;
                for k in 0..=j {
                    total += binom * sups[k] * sups[j - k];
                    binom = binom * (j - k) as f64 / (k + 1) as f64;
                }
                total / ramp.powi(j as i32)
            }
            Self::GaussianBump { width, .. } => gaussian_derivative_sup(j) / width.powi(j as i32),
            Self::Coordinate { .. } => {
                if j == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Sine { frequency, .. } => frequency.abs().powi(j as i32),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_endpoints_and_symmetry() {
        assert_eq!(smoothstep5(0.0), 0.0);
        assert_eq!(smoothstep5(1.0), 1.0);
        assert!((smoothstep5(0.5) - 0.5).abs() < 1e-12);
        for k in 1..100 {
            let t = k as f64 / 100.0;
            assert!((smoothstep5(t) + smoothstep5(1.0 - t) - 1.0).abs() < 1e-9);
            assert!(smoothstep5(t) >= smoothstep5(t - 0.01));
        }
    }

    #[test]
    fn smoothstep_is_flat_at_the_ends() {
        // derivatives 1..=5 vanish at t = 0 and t = 1
        let mut coeffs: Vec<f64> = smoothstep_coefficients().to_vec();
        for _ in 1..=5 {
            coeffs = coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect();
            let at = |t: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c);
            assert!(at(0.0).abs() < 1e-9);
            assert!(at(1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn window_values() {
        let g = SmoothFunctional::BoundedPolynomialWindow {
            coordinate: 0,
            lower: -1.0,
            upper: 1.0,
            ramp: 0.5,
        };
        assert_eq!(g.eval(&[0.0]).unwrap(), 1.0);
        assert_eq!(g.eval(&[3.0]).unwrap(), 0.0);
        assert!((g.eval(&[1.25]).unwrap() - 0.5).abs() < 1e-12);
        let one = SmoothFunctional::BoundedPolynomialWindow {
            coordinate: 0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            ramp: 1.0,
        };
        assert_eq!(one.eval(&[123.0]).unwrap(), 1.0);
    }

    #[test]
    fn evaluations_respect_sup_bound() {
        let catalog = [
            SmoothFunctional::GaussianBump {
                center: vec![0.0, 1.0, 0.0],
                width: 2.0,
            },
            SmoothFunctional::Sine {
                coordinate: 1,
                frequency: 3.0,
                phase: 0.2,
            },
            SmoothFunctional::BoundedPolynomialWindow {
                coordinate: 2,
                lower: 0.0,
                upper: 1.0,
                ramp: 0.3,
            },
        ];
        for g in &catalog {
            for k in 0..500 {
                let t = -20.0 + 40.0 * k as f64 / 499.0;
                let x = [t, -t / 2.0, t * t / 10.0];
                assert!(g.eval(&x).unwrap().abs() <= g.sup_bound());
            }
        }
    }

    #[test]
    fn declared_derivative_bounds_dominate_finite_differences() {
        let g = SmoothFunctional::GaussianBump {
            center: vec![0.3],
            width: 0.7,
        };
        let h = 1e-3;
        for k in 0..400 {
            let x = -3.0 + 6.0 * k as f64 / 399.0;
            let d1 = (g.eval(&[x + h]).unwrap() - g.eval(&[x - h]).unwrap()) / (2.0 * h);
            let d2 = (g.eval(&[x + h]).unwrap() - 2.0 * g.eval(&[x]).unwrap()
                + g.eval(&[x - h]).unwrap())
                / (h * h);
            assert!(d1.abs() <= g.derivative_bound(1).unwrap());
            assert!(d2.abs() <= g.derivative_bound(2).unwrap() * 1.001);
        }
        assert!((gaussian_derivative_sup(1) / 1.01 - (-0.5f64).exp()).abs() < 1e-6);
        assert!((gaussian_derivative_sup(4) / 1.01 - 3.0).abs() < 1e-9);
        assert!(g.derivative_bound(6).is_err());
    }

    #[test]
    fn dimension_mismatch_and_validation() {
        let g = SmoothFunctional::GaussianBump {
            center: vec![0.0; 3],
            width: 1.0,
        };
        assert!(g.eval(&[0.0; 2]).is_err());
        assert!(SmoothFunctional::Coordinate { coordinate: 4 }
            .eval(&[0.0; 3])
            .is_err());
        let bad = SmoothFunctional::GaussianBump {
            center: vec![0.0],
            width: 0.0,
        };
        assert!(bad.eval(&[0.0]).is_err());
    }
}
