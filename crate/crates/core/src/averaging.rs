//! Averages of a potential along a closed straight-line orbit.
//!
//! For the orbit class `(a, b)` with period `T`,
//!
//! ```text
//! F(λ) = (1/T) ∫₀ᵀ f(pt, qt + λ) dt = Σ_j f̂(−jb, ja) e^{2πi j a λ},
//! ```
//!
//! since a mode `(m, n)` survives the time average iff `ma + nb = 0`, and for
//! coprime `(a, b)` those are exactly the multiples of `(−b, a)`. `F` is then
//! `1/|a|`-periodic and its mean is `f̂(0, 0)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::torus::{FourierPotential, RationalOrbit};

/// Grid points per period of the highest active mode in [`derivative_sup`].
pub const POINTS_PER_PERIOD: usize = 64;

/// `F` in its exact one-dimensional Fourier basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitAverage {
    pub orbit: RationalOrbit,
    /// `j ↦` coefficient of `e^{2πi j a λ}`.
    pub coeffs: BTreeMap<i32, Complex64>,
}

fn resonance_index(m: i32, n: i32, a: i64, b: i64) -> Option<i32> {
    let (m, n) = (m as i64, n as i64);
    if m * a + n * b != 0 {
        return None;
    }
    // (m, n) = j (−b, a)
    let j = if a != 0 { n / a } else { -m / b };
    Some(j as i32)
}

pub fn orbit_average_fourier(f: &FourierPotential, orbit: &RationalOrbit) -> OrbitAverage {
    let coeffs = f
        .modes()
        .filter_map(|((m, n), c)| resonance_index(m, n, orbit.a, orbit.b).map(|j| (j, c)))
        .collect();
    OrbitAverage { orbit: *orbit, coeffs }
}

impl OrbitAverage {
    pub fn coefficient(&self, j: i32) -> Complex64 {
        self.coeffs.get(&j).copied().unwrap_or_default()
    }

    /// `|a|`: `F` is `1/|a|`-periodic.
    pub fn frequency(&self) -> u64 {
        self.orbit.a.unsigned_abs()
    }

    pub fn max_index(&self) -> u32 {
        self.coeffs.keys().map(|j| j.unsigned_abs()).max().unwrap_or(0)
    }

    /// Mean of `F` over a period. For `a = 0` the shift runs along the orbit
    /// and `F` is constant.
    pub fn mean(&self) -> f64 {
        if self.orbit.a == 0 {
            return self.coeffs.values().map(|c| c.re).fold(0.0, |s, t| s + t);
        }
        self.coefficient(0).re
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.eval_derivative(0, lambda)
    }

    /// `F^{(k)}(λ)`.
    pub fn eval_derivative(&self, k: u32, lambda: f64) -> f64 {
        let a = self.orbit.a as f64;
        let lambda = lambda.rem_euclid(1.0);
        let mut acc = 0.0;
        for (&j, &c) in &self.coeffs {
            let w = TAU * j as f64 * a;
            let c = if k == 0 {
                c
            } else {
                c * Complex64::new(0.0, w).powu(k)
            };
            let phase = (j as f64 * a * lambda).rem_euclid(1.0);
            let (s, co) = (TAU * phase).sin_cos();
            acc += c.re * co - c.im * s;
        }
        acc
    }
}

/// Trapezoid value of `(1/T) ∫₀ᵀ f(pt, qt + λ) dt`.
///
/// With `N` samples the rule is exact for every mode whose time frequency
/// `|ma + nb|` is not a nonzero multiple of `N`; requiring
/// `N ≥ 4 M max(|a|, |b|)` guarantees that.
pub fn orbit_average_quadrature(
    f: &FourierPotential,
    orbit: &RationalOrbit,
    lambda: f64,
    samples: usize,
) -> Result<f64> {
    let need = 4 * f.max_mode().max(0) as usize * orbit.a.unsigned_abs().max(orbit.b.unsigned_abs()) as usize;
    if samples < need.max(1) {
        return invalid(format!(
            "{samples} samples undersample a mode-{} potential on orbit ({},{}); need at least {need}",
            f.max_mode(),
            orbit.a,
            orbit.b
        ));
    }
    let n = samples as i64;
    let mut acc = 0.0;
    for k in 0..n {
        // t_k = kT/N, so (p t_k, q t_k) = (ak/N, bk/N)
        let x = (orbit.a * k).rem_euclid(n) as f64 / n as f64;
        let y = (orbit.b * k).rem_euclid(n) as f64 / n as f64;
        acc += f.eval(x, y + lambda);
    }
    Ok(acc / n as f64)
}

/// `|∫₀¹ F − f̂(0,0)|`, with the integral taken by an exact trapezoid rule on
/// the Fourier representation.
pub fn mean_identity_check(avg: &OrbitAverage, f: &FourierPotential) -> f64 {
    let top = avg.max_index() as u64 * avg.frequency();
    let n = 2 * top + 1;
    let integral: f64 = (0..n).map(|i| avg.eval(i as f64 / n as f64)).sum::<f64>() / n as f64;
    (integral - f.mean()).abs()
}

/// `∫₀¹ F − F(0)`.
pub fn average_gap(avg: &OrbitAverage) -> f64 {
    let at_zero: f64 = avg.coeffs.values().map(|c| c.re).fold(0.0, |s, t| s + t);
    avg.mean() - at_zero
}

/// Two-sided estimate of `sup_λ |F^{(k)}(λ)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSup {
    pub k: u32,
    /// Largest sampled value (lower estimate).
    pub grid_sup: f64,
    /// `Σ_j |c_j| (2π|j a|)^k` (upper bound).
    pub coefficient_bound: f64,
    pub samples: usize,
}

/// `sup |F^{(k)}|` sampled on one `1/|a|` period, meant for `k ≤ 8`.
pub fn derivative_sup(avg: &OrbitAverage, k: u32) -> DerivativeSup {
    let a = avg.frequency() as f64;
    let coefficient_bound = avg
        .coeffs
        .iter()
        .map(|(&j, c)| c.norm() * (TAU * (j as f64 * a).abs()).powi(k as i32))
        .fold(0.0, |s, t| s + t);
    let samples = POINTS_PER_PERIOD * avg.max_index().max(1) as usize;
    let period = if a > 0.0 { 1.0 / a } else { 1.0 };
    let grid_sup = (0..samples)
        .map(|i| avg.eval_derivative(k, period * i as f64 / samples as f64).abs())
        .fold(0.0, f64::max);
    DerivativeSup { k, grid_sup, coefficient_bound, samples }
}

/// `max(0, gap) · aᵏ`: a lower bound on `sup |F^{(k)}|` for a `1/a`-periodic
/// `F` whose mean exceeds `F(0)` by `gap`.
pub fn cascade_lower_bound(gap: f64, a: i64, k: u32) -> f64 {
    gap.max(0.0) * (a.unsigned_abs() as f64).powi(k as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn orbit(a: i64, b: i64) -> RationalOrbit {
        RationalOrbit::new(a, b, 1.0).unwrap()
    }

    #[test]
    fn constant_potential_averages_to_itself() {
        let avg = orbit_average_fourier(&FourierPotential::constant(2.5), &orbit(3, 2));
        assert_eq!(avg.coeffs.len(), 1);
        assert_eq!(avg.coefficient(0).re, 2.5);
        assert_eq!(average_gap(&avg), 0.0);
        assert_eq!(derivative_sup(&avg, 3).grid_sup, 0.0);
    }

    #[test]
    fn resonant_cosine_becomes_cosine_in_lambda() {
        let (a, b) = (3, 2);
        let f = FourierPotential::cosine(b, -a, 1.0);
        let avg = orbit_average_fourier(&f, &orbit(a as i64, b as i64));
        for i in 0..1000 {
            let l = i as f64 / 1000.0;
            let want = (TAU * a as f64 * l).cos();
            assert!((avg.eval(l) - want).abs() < 1e-12);
            let quad = orbit_average_quadrature(&f, &orbit(3, 2), l, 64).unwrap();
            assert!((quad - want).abs() < 1e-10);
        }
    }

    #[test]
    fn non_resonant_mode_averages_out() {
        let f = FourierPotential::cosine(1, 0, 1.0);
        let avg = orbit_average_fourier(&f, &orbit(3, 2));
        assert!(avg.coeffs.is_empty());
        for l in [0.0, 0.1, 0.37] {
            assert!(orbit_average_quadrature(&f, &orbit(3, 2), l, 16).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn undersampling_is_refused() {
        let f = FourierPotential::cosine(2, 1, 1.0);
        assert!(orbit_average_quadrature(&f, &orbit(3, 2), 0.0, 23).is_err());
        assert!(orbit_average_quadrature(&f, &orbit(3, 2), 0.0, 24).is_ok());
    }

    #[test]
    fn gap_of_negative_cosine() {
        let eps = 0.01;
        let f = FourierPotential::cosine(2, -3, -eps);
        let avg = orbit_average_fourier(&f, &orbit(3, 2));
        assert_relative_eq!(average_gap(&avg), eps, max_relative = 1e-14);
        assert!(mean_identity_check(&avg, &f) < 1e-16);
        let d4 = derivative_sup(&avg, 4);
        let want = eps * (TAU * 3.0).powi(4);
        assert_relative_eq!(d4.grid_sup, want, max_relative = 1e-12);
        assert_relative_eq!(d4.coefficient_bound, want, max_relative = 1e-12);
    }

    #[test]
    fn cascade_values() {
        let c = 0.05;
        assert_relative_eq!(cascade_lower_bound(c / 81.0, 3, 4), c, max_relative = 1e-14);
        assert_relative_eq!(cascade_lower_bound(c / 81.0, 3, 1), c / 27.0, max_relative = 1e-14);
        assert_eq!(cascade_lower_bound(-1.0, 3, 4), 0.0);
        assert_eq!(cascade_lower_bound(0.0, 7, 2), 0.0);
    }

    #[test]
    fn horizontal_class_gives_constant_average() {
        // (a, b) = (0, 1): resonant modes are (−j, 0), and F is constant.
        let f = &FourierPotential::cosine(1, 0, 0.3) + &FourierPotential::cosine(0, 1, 0.2);
        let avg = orbit_average_fourier(&f, &orbit(0, 1));
        let v0 = avg.eval(0.0);
        assert_relative_eq!(avg.eval(0.3), v0, epsilon = 1e-15);
        assert_relative_eq!(orbit_average_quadrature(&f, &orbit(0, 1), 0.3, 8).unwrap(), v0, epsilon = 1e-12);
    }
}
