//! Continued fractions and irrationality constants of quadratic irrationals.
//!
//! For a root `r` of `P(t) = A t² + B t + C`, `b² P(a/b)` is a nonzero integer,
//! so `|P(a/b)| ≥ 1/b²`. Writing `P(t) = A (t − r)(t − r')` and restricting to
//! `|r − a/b| ≤ 1` gives `|r − a/b| ≥ C₀/b²` with
//! `C₀ = 1 / (|A| (|r − r'| + 1))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::torus::{isqrt, DirectionSpec, QuadraticIrrational, RationalOrbit};

/// Default largest denominator of the brute-force scan.
pub const DEFAULT_BMAX: i64 = 200;

fn floor_div(n: i128, d: i128) -> i128 {
    let q = n / d;
    if (n % d != 0) && ((n < 0) != (d < 0)) {
        q - 1
    } else {
        q
    }
}

fn overflow() -> Error {
    Error::InvalidInput("continued fraction convergent overflows 64-bit integers".into())
}

/// Partial quotients `[a₀; a₁, a₂, …]` computed exactly in integer arithmetic.
pub fn partial_quotients(r: &QuadraticIrrational, count: usize) -> Vec<i128> {
    let (mut p, mut q, d) = r.surd_form();
    let s = isqrt(d);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        // √D is irrational, so floor((P + √D)/Q) only depends on ⌊√D⌋.
        let a = if q > 0 { floor_div(p + s, q) } else { floor_div(p + s + 1, q) };
        out.push(a);
        p = a * q - p;
        q = (d - p * p) / q;
    }
    out
}

/// The first `count` continued-fraction convergents `a/b` of `r`, `b > 0`.
pub fn convergents(r: &QuadraticIrrational, count: usize) -> Result<Vec<(i64, i64)>> {
    if count == 0 {
        return invalid("at least one convergent must be requested");
    }
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut out = Vec::with_capacity(count);
    for a in partial_quotients(r, count) {
        let h_next = a.checked_mul(h).and_then(|x| x.checked_add(h_prev)).ok_or_else(overflow)?;
        let k_next = a.checked_mul(k).and_then(|x| x.checked_add(k_prev)).ok_or_else(overflow)?;
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
        out.push((
            i64::try_from(h).map_err(|_| overflow())?,
            i64::try_from(k).map_err(|_| overflow())?,
        ));
    }
    Ok(out)
}

/// Convergents with denominator at most `bmax`.
pub fn convergents_up_to(r: &QuadraticIrrational, bmax: i64) -> Result<Vec<(i64, i64)>> {
    let mut count = 1;
    loop {
        let all = convergents(r, count)?;
        if all.last().map_or(false, |&(_, b)| b > bmax) || count > 90 {
            return Ok(all.into_iter().filter(|&(_, b)| b <= bmax).collect());
        }
        count += 1;
    }
}

/// `b² |r − a/b|` evaluated through the exact integer `b² P(a/b)`.
pub fn scaled_distance(r: &QuadraticIrrational, a: i64, b: i64) -> f64 {
    let (lead, _, _) = r.coefficients();
    let n = r.homogeneous_value(a, b).unsigned_abs() as f64;
    let other = (a as f64 / b as f64 - r.conjugate().value()).abs();
    n / (lead.unsigned_abs() as f64 * other)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineCertificate {
    pub r: QuadraticIrrational,
    pub r_value: f64,
    /// Certified: `|r − a/b| ≥ c0 / b²` for all integers `a` and `b ≥ 1`.
    pub c0: f64,
    /// `min_{b ≤ bmax} b² |r − a*/b|` with `a*` the nearest numerator.
    pub c0_empirical: f64,
    /// Where the empirical minimum is attained.
    pub c0_empirical_at: (i64, i64),
    pub bmax_scanned: i64,
}

pub fn certified_c0(r: &QuadraticIrrational) -> DiophantineCertificate {
    certified_c0_with_bmax(r, DEFAULT_BMAX)
}

pub fn certified_c0_with_bmax(r: &QuadraticIrrational, bmax: i64) -> DiophantineCertificate {
    let (lead, _, _) = r.coefficients();
    let rv = r.value();
    let spread = (rv - r.conjugate().value()).abs();
    // shaved by a few ulps so rounding cannot push it above the true constant
    let c0 = (1.0 / (lead.unsigned_abs() as f64 * (spread + 1.0))).min(1.0) * (1.0 - 1e-12);

    let mut best = (f64::INFINITY, (0, 1));
    for b in 1..=bmax.max(1) {
        let a = (rv * b as f64).round() as i64;
        let v = scaled_distance(r, a, b);
        if v < best.0 {
            best = (v, (a, b));
        }
    }
    DiophantineCertificate {
        r: *r,
        r_value: rv,
        c0,
        c0_empirical: best.0,
        c0_empirical_at: best.1,
        bmax_scanned: bmax.max(1),
    }
}

/// Lower bounds on `½ |(p, q) − (p₀, q₀)|²` over all periods of an orbit class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBound {
    /// `inf_{T>0} ½ |(a, b)/T − (p₀, q₀)|²`, the squared point-to-ray distance.
    pub exact: f64,
    /// Minimizing period, `None` when the class points against the drift.
    pub optimal_period: Option<f64>,
    /// `q₀² C₀² / (2 b² (a² + b²))`: what the certified `C₀` actually implies.
    pub geometric_lower_bound: f64,
    /// `C / max(|a|, |b|)⁴` with `C = C₀²/2` and the certified `C₀`.
    pub quartic_form: f64,
    /// Same with the empirical `C₀`.
    pub quartic_form_empirical: f64,
    /// `C₀²/2` with the certified `C₀`.
    pub constant_c: f64,
}

impl GapBound {
    /// True when the `C/a⁴` form claims more than the sharp value.
    pub fn quartic_form_exceeds_exact(&self) -> bool {
        self.quartic_form_empirical > self.exact
    }
}

pub fn velocity_gap_bound(
    direction: &DirectionSpec,
    orbit: &RationalOrbit,
    cert: &DiophantineCertificate,
) -> Result<GapBound> {
    gap_bound_for_class(direction, orbit.a, orbit.b, cert)
}

pub fn gap_bound_for_class(
    direction: &DirectionSpec,
    a: i64,
    b: i64,
    cert: &DiophantineCertificate,
) -> Result<GapBound> {
    let (af, bf) = (a as f64, b as f64);
    let (p0, q0) = (direction.p0, direction.q0);
    let cross = bf * p0 - af * q0;
    if cross == 0.0 || (a, b) == (0, 0) {
        return invalid(format!("orbit class ({a},{b}) is parallel to the drift"));
    }
    let norm2 = af * af + bf * bf;
    let along = p0 * af + q0 * bf;
    let (exact, optimal_period) = if along > 0.0 {
        (0.5 * cross * cross / norm2, Some(norm2 / along))
    } else {
        // ray points away from (p₀, q₀): the infimum is approached as T → ∞
        (0.5, None)
    };
    let geometric_lower_bound = if b == 0 {
        0.5 * q0 * q0
    } else {
        q0 * q0 * cert.c0 * cert.c0 / (2.0 * bf * bf * norm2)
    };
    let height = a.unsigned_abs().max(b.unsigned_abs()) as f64;
    let constant_c = cert.c0 * cert.c0 / 2.0;
    Ok(GapBound {
        exact,
        optimal_period,
        geometric_lower_bound,
        quartic_form: constant_c / height.powi(4),
        quartic_form_empirical: cert.c0_empirical * cert.c0_empirical / 2.0 / height.powi(4),
        constant_c,
    })
}
