//! Actions of measures on the tangent bundle of T², the necessary condition
//! for a closed straight-line orbit to be minimizing, and a discretized linear
//! program over closed probability measures.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::averaging::{
    average_gap, cascade_lower_bound, derivative_sup, orbit_average_fourier, OrbitAverage,
};
use crate::diophantine::{certified_c0, gap_bound_for_class, GapBound};
use crate::error::{invalid, Result};
use crate::lp::LinearProgram;
use crate::torus::{gcd, DirectionSpec, LagrangianSpec, RationalOrbit};

/// The probability measure equidistributed along a closed orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitMeasure {
    pub orbit: RationalOrbit,
}

impl OrbitMeasure {
    pub fn action(&self, spec: &LagrangianSpec) -> f64 {
        orbit_action(spec, &self.orbit)
    }
}

/// Lebesgue in position, Dirac at a fixed velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformVelocityMeasure {
    pub velocity: [f64; 2],
}

impl UniformVelocityMeasure {
    pub fn action(&self, spec: &LagrangianSpec) -> f64 {
        spec.kinetic(self.velocity[0], self.velocity[1])
            + spec.potential.mean()
            + spec.extra_constant
    }
}

/// `∫ L dμ` for the orbit measure: `(p² + q²)/2 − (p₀p + q₀q) + F(0) + c`.
pub fn orbit_action(spec: &LagrangianSpec, orbit: &RationalOrbit) -> f64 {
    let avg = orbit_average_fourier(&spec.potential, orbit);
    let f_at_zero: f64 = avg.coeffs.values().map(|c| c.re).fold(0.0, |s, t| s + t);
    spec.kinetic(orbit.p(), orbit.q()) + f_at_zero + spec.extra_constant
}

/// Time average of `L` along the orbit by an `samples`-point trapezoid rule.
pub fn orbit_action_quadrature(spec: &LagrangianSpec, orbit: &RationalOrbit, samples: usize) -> f64 {
    let [p, q] = orbit.velocity();
    let n = samples.max(1);
    (0..n)
        .map(|k| {
            let t = orbit.period * k as f64 / n as f64;
            spec.eval(p * t, q * t, p, q)
        })
        .sum::<f64>()
        / n as f64
}

/// `∫ L dμ₀` for the uniform measure at velocity `(p₀, q₀)`.
pub fn mu0_action(spec: &LagrangianSpec) -> f64 {
    UniformVelocityMeasure { velocity: spec.direction.drift() }.action(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPeriod {
    pub period: f64,
    /// Set when `(a, b)` points against the drift and the class was traversed
    /// as `(−a, −b)`.
    pub reversed: bool,
}

/// `T* = (a² + b²)/(p₀a + q₀b)`, the minimizer of `½|(a,b)/T|² − ⟨(p₀,q₀),(a,b)/T⟩`.
pub fn optimal_period(direction: &DirectionSpec, a: i64, b: i64) -> Result<OptimalPeriod> {
    if (a, b) == (0, 0) || gcd(a, b) != 1 {
        return invalid(format!("orbit class ({a},{b}) is not a coprime pair"));
    }
    let along = direction.p0 * a as f64 + direction.q0 * b as f64;
    if along == 0.0 {
        return invalid(format!("orbit class ({a},{b}) is orthogonal to the drift"));
    }
    let norm2 = (a * a + b * b) as f64;
    Ok(OptimalPeriod { period: norm2 / along.abs(), reversed: along < 0.0 })
}

/// Orbit of class `(a, b)` at its optimal period.
pub fn optimal_orbit(direction: &DirectionSpec, a: i64, b: i64) -> Result<RationalOrbit> {
    let opt = optimal_period(direction, a, b)?;
    let (a, b) = if opt.reversed { (-a, -b) } else { (a, b) };
    RationalOrbit::new(a, b, opt.period)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// `∫F − F(0)` is below the action gap: the orbit cannot be minimizing.
    Violated,
    /// The necessary condition holds; the C⁴ lower bound applies.
    Compatible,
}

/// The full comparison between an orbit measure and the uniform measure `μ₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub a: i64,
    pub b: i64,
    /// Period carried by the orbit that was passed in.
    pub period: f64,
    /// Period minimizing the kinetic-minus-drift action, if the class points
    /// along the drift.
    pub optimal_period: Option<f64>,
    /// `∫₀¹ F − F(0)`.
    pub gap: f64,
    /// `inf_T ½ |(p, q) − (p₀, q₀)|²`.
    pub required_gap: f64,
    /// `½ |(p, q) − (p₀, q₀)|²` at the supplied period.
    pub required_at_period: f64,
    /// `gap − required_gap`.
    pub margin: f64,
    pub verdict: Verdict,
    /// `gap · |a|⁴` when compatible, else 0.
    pub c4_bound: f64,
    /// `max(0, gap) |a|^k` for `k = 1..4`.
    pub cascade: [f64; 4],
    /// Sampled `sup |F⁗|`, the quantity the cascade bounds from below.
    pub f4_sup: f64,
    pub c0: f64,
    pub c0_empirical: f64,
    /// `C₀²/2` with the certified `C₀`.
    pub constant_c: f64,
    /// `C / max(|a|,|b|)⁴`.
    pub quartic_form_gap: f64,
    /// `q₀² C₀² / (2 b² (a² + b²))`, the rigorous version of the same bound.
    pub geometric_lower_bound: f64,
    pub orbit_action: f64,
    pub mu0_action: f64,
}

impl ObstructionCertificate {
    pub fn is_compatible(&self) -> bool {
        self.verdict == Verdict::Compatible
    }
}

/// Pieces of the certificate that only depend on the orbit class and drift.
pub fn class_gap(direction: &DirectionSpec, a: i64, b: i64) -> Result<GapBound> {
    gap_bound_for_class(direction, a, b, &certified_c0(&direction.r))
}

pub fn necessary_condition(spec: &LagrangianSpec, orbit: &RationalOrbit) -> Result<ObstructionCertificate> {
    let avg: OrbitAverage = orbit_average_fourier(&spec.potential, orbit);
    let gap = average_gap(&avg);
    let cert = certified_c0(&spec.direction.r);
    let bound = gap_bound_for_class(&spec.direction, orbit.a, orbit.b, &cert)?;
    let [p, q] = orbit.velocity();
    let (p0, q0) = (spec.direction.p0, spec.direction.q0);
    let required_at_period = 0.5 * ((p - p0).powi(2) + (q - q0).powi(2));
    let required_gap = bound.exact;
    let verdict = if gap < required_gap { Verdict::Violated } else { Verdict::Compatible };
    let cascade = [1, 2, 3, 4].map(|k| cascade_lower_bound(gap, orbit.a, k));
    Ok(ObstructionCertificate {
        a: orbit.a,
        b: orbit.b,
        period: orbit.period,
        optimal_period: bound.optimal_period,
        gap,
        required_gap,
        required_at_period,
        margin: gap - required_gap,
        verdict,
        c4_bound: if verdict == Verdict::Compatible { cascade[3] } else { 0.0 },
        cascade,
        f4_sup: derivative_sup(&avg, 4).grid_sup,
        c0: cert.c0,
        c0_empirical: cert.c0_empirical,
        constant_c: bound.constant_c,
        quartic_form_gap: bound.quartic_form,
        geometric_lower_bound: bound.geometric_lower_bound,
        orbit_action: orbit_action(spec, orbit),
        mu0_action: mu0_action(spec),
    })
}

/// Position × velocity grid for [`mather_lp`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpGrid {
    pub nx: usize,
    pub ny: usize,
    /// Velocity samples per axis over `[−v_max, v_max]`.
    pub nv: usize,
    pub v_max: f64,
}

impl Default for LpGrid {
    fn default() -> Self {
        Self { nx: 16, ny: 16, nv: 17, v_max: 2.0 }
    }
}

impl LpGrid {
    pub fn velocity(&self, k: usize) -> f64 {
        -self.v_max + 2.0 * self.v_max * k as f64 / (self.nv - 1) as f64
    }

    pub fn velocity_spacing(&self) -> f64 {
        2.0 * self.v_max / (self.nv - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nv * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(x, y, u, v)` of variable `idx`; velocities vary fastest.
    pub fn point(&self, idx: usize) -> [f64; 4] {
        let nv2 = self.nv * self.nv;
        let (pos, vel) = (idx / nv2, idx % nv2);
        let (ix, iy) = (pos % self.nx, pos / self.nx);
        let (iu, iv) = (vel % self.nv, vel / self.nv);
        [
            ix as f64 / self.nx as f64,
            iy as f64 / self.ny as f64,
            self.velocity(iu),
            self.velocity(iv),
        ]
    }
}

/// Test modes `(m, n) ≠ 0`, `|m|, |n| ≤ bound`, one from each `±` pair.
pub fn half_test_modes(bound: i32) -> Vec<(i32, i32)> {
    let mut out = vec![];
    for m in 0..=bound {
        for n in -bound..=bound {
            if m > 0 || n > 0 {
                out.push((m, n));
            }
        }
    }
    out
}

/// Weights on an [`LpGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub grid: LpGrid,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nonzero atoms as `(x, y, u, v, weight)`.
    pub fn support(&self, threshold: f64) -> impl Iterator<Item = [f64; 5]> + '_ {
        self.weights.iter().enumerate().filter(move |(_, &w)| w > threshold).map(|(i, &w)| {
            let [x, y, u, v] = self.grid.point(i);
            [x, y, u, v, w]
        })
    }

    /// `∫ (u, v) dμ`.
    pub fn rotation(&self) -> [f64; 2] {
        self.support(0.0).fold([0.0, 0.0], |acc, [_, _, u, v, w]| [acc[0] + w * u, acc[1] + w * v])
    }

    pub fn action(&self, cost: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
        self.support(0.0).map(|[x, y, u, v, w]| w * cost(x, y, u, v)).sum()
    }

    /// `max |∫ (u, v)·∇φ dμ|` over `φ = e^{2πi(mx+ny)}`, `|m|, |n| ≤ bound`,
    /// with the gradient scaled by `1/2π`.
    pub fn closedness_residual(&self, bound: i32) -> f64 {
        half_test_modes(bound)
            .into_iter()
            .map(|(m, n)| {
                let (mut re, mut im) = (0.0, 0.0);
                for [x, y, u, v, w] in self.support(0.0) {
                    let (s, c) = (TAU * (m as f64 * x + n as f64 * y)).sin_cos();
                    let flux = m as f64 * u + n as f64 * v;
                    re += w * flux * c;
                    im += w * flux * s;
                }
                re.hypot(im)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatherLpResult {
    pub action: f64,
    pub rotation: [f64; 2],
    pub measure: DiscreteMeasure,
    pub iterations: usize,
}

pub const LP_MAX_ITERATIONS: usize = 200_000;

/// Minimizes `∫ L dμ` over probability measures on the grid that are closed
/// against the trigonometric test functions of degree ≤ `test_mode_bound`.
pub fn mather_lp(spec: &LagrangianSpec, grid: LpGrid, test_mode_bound: i32) -> Result<MatherLpResult> {
    let speed = spec.direction.p0.hypot(spec.direction.q0);
    if !(grid.v_max > speed) {
        return invalid(format!("velocity box {} does not contain the drift (speed {speed})", grid.v_max));
    }
    let potential = spec.potential.sample_grid(0, 0, grid.nx, grid.ny);
    let cost = |ix: usize, iy: usize, u: f64, v: f64| {
        spec.kinetic(u, v) + potential[iy * grid.nx + ix] + spec.extra_constant
    };
    solve_closed_measure_lp(grid, test_mode_bound, cost)
}

/// [`mather_lp`] for an arbitrary cost `(x, y, u, v) ↦ L`.
pub fn mather_lp_with_cost(
    grid: LpGrid,
    test_mode_bound: i32,
    cost: impl Fn(f64, f64, f64, f64) -> f64,
) -> Result<MatherLpResult> {
    solve_closed_measure_lp(grid, test_mode_bound, |ix, iy, u, v| {
        cost(ix as f64 / grid.nx as f64, iy as f64 / grid.ny as f64, u, v)
    })
}

fn solve_closed_measure_lp(
    grid: LpGrid,
    test_mode_bound: i32,
    cost: impl Fn(usize, usize, f64, f64) -> f64,
) -> Result<MatherLpResult> {
    if grid.nx < 8 || grid.ny < 8 {
        return invalid("position grid must be at least 8×8");
    }
    if grid.nv < 2 || !(grid.v_max > 0.0) {
        return invalid("velocity grid needs at least 2 samples on a positive box");
    }
    if test_mode_bound < 0 || 2 * test_mode_bound as usize >= grid.nx.min(grid.ny) {
        return invalid(format!(
            "test mode bound {test_mode_bound} aliases on a {}×{} grid",
            grid.nx, grid.ny
        ));
    }
    let modes = half_test_modes(test_mode_bound);
    let rows = 1 + 2 * modes.len();
    let n = grid.len();
    let nv2 = grid.nv * grid.nv;

    // per-position trig values, per-velocity fluxes
    let trig: Vec<Vec<(f64, f64)>> = (0..grid.nx * grid.ny)
        .map(|pos| {
            let (x, y) = ((pos % grid.nx) as f64 / grid.nx as f64, (pos / grid.nx) as f64 / grid.ny as f64);
            modes.iter().map(|&(m, nn)| (TAU * (m as f64 * x + nn as f64 * y)).sin_cos()).collect()
        })
        .collect();

    let mut a = vec![0.0; rows * n];
    let mut c = vec![0.0; n];
    for idx in 0..n {
        let (pos, vel) = (idx / nv2, idx % nv2);
        let (u, v) = (grid.velocity(vel % grid.nv), grid.velocity(vel / grid.nv));
        c[idx] = cost(pos % grid.nx, pos / grid.nx, u, v);
        let col = &mut a[idx * rows..(idx + 1) * rows];
        col[0] = 1.0;
        for (k, (&(m, nn), &(s, co))) in modes.iter().zip(&trig[pos]).enumerate() {
            let flux = m as f64 * u + nn as f64 * v;
            col[1 + 2 * k] = flux * co;
            col[2 + 2 * k] = flux * s;
        }
    }
    let mut b = vec![0.0; rows];
    b[0] = 1.0;
    let lp = LinearProgram::from_column_major(rows, a, b, c)?;
    let sol = lp.solve(LP_MAX_ITERATIONS)?;
    let measure = DiscreteMeasure { grid, weights: sol.x };
    Ok(MatherLpResult {
        action: sol.objective,
        rotation: measure.rotation(),
        measure,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::FourierPotential;
    use approx::assert_relative_eq;

    fn spec0() -> LagrangianSpec {
        LagrangianSpec::unperturbed(DirectionSpec::sqrt2())
    }

    #[test]
    fn optimal_period_closed_forms() {
        let d = DirectionSpec::sqrt2();
        let t = optimal_period(&d, 3, 2).unwrap();
        assert!(!t.reversed);
        assert_relative_eq!(t.period, 13.0 / (3.0 * d.p0 + 2.0 * d.q0), max_relative = 1e-15);
        let r = optimal_period(&d, -3, -2).unwrap();
        assert!(r.reversed);
        assert_relative_eq!(r.period, t.period, max_relative = 1e-15);
        assert!(optimal_period(&d, 0, 0).is_err());
        assert!(optimal_period(&d, 6, 4).is_err());
    }

    /// Brute-force scan of `T ↦ ½|(a,b)/T|² − ⟨(p₀,q₀),(a,b)/T⟩`.
    fn scan_period(d: &DirectionSpec, a: i64, b: i64, lo: f64, hi: f64, n: usize) -> f64 {
        let mut best = (f64::INFINITY, lo);
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            let (p, q) = (a as f64 / t, b as f64 / t);
            let val = 0.5 * (p * p + q * q) - d.p0 * p - d.q0 * q;
            if val < best.0 {
                best = (val, t);
            }
        }
        best.1
    }

    #[test]
    fn optimal_period_matches_scan() {
        let d = DirectionSpec::sqrt2();
        for (a, b) in [(3, 2), (7, 5)] {
            let t = optimal_period(&d, a, b).unwrap().period;
            // two-stage scan: coarse then 1e6 points on a narrow window
            let coarse = scan_period(&d, a, b, 0.1, 10.0 * ((a * a + b * b) as f64).sqrt(), 100_000);
            let fine = scan_period(&d, a, b, coarse - 1e-2, coarse + 1e-2, 1_000_000);
            assert!((fine - t).abs() < 1e-7, "{a},{b}: {fine} vs {t}");
        }
        let t75 = optimal_period(&d, 7, 5).unwrap().period;
        assert!((t75 - 8.6024).abs() < 1e-4);
    }

    #[test]
    fn orbit_action_at_optimal_period() {
        let spec = spec0();
        let orbit = optimal_orbit(&spec.direction, 3, 2).unwrap();
        let act = orbit_action(&spec, &orbit);
        let gap = class_gap(&spec.direction, 3, 2).unwrap().exact;
        assert_relative_eq!(act, -0.5 + gap, epsilon = 1e-15);
        assert!((act + 0.49962).abs() < 1e-5);
        let c = spec.with_potential(FourierPotential::constant(0.7));
        assert_relative_eq!(orbit_action(&c, &orbit), act + 0.7, epsilon = 1e-14);
    }

    #[test]
    fn orbit_action_matches_quadrature() {
        let spec = spec0().with_potential(
            &FourierPotential::cosine(2, -3, 0.3) + &FourierPotential::sine(1, 2, 0.1),
        );
        let orbit = optimal_orbit(&spec.direction, 3, 2).unwrap();
        let quad = orbit_action_quadrature(&spec, &orbit, 64);
        assert!((orbit_action(&spec, &orbit) - quad).abs() < 1e-10);
    }

    #[test]
    fn mu0_values() {
        assert_relative_eq!(mu0_action(&spec0()), -0.5, epsilon = 1e-15);
        let shifted = spec0().with_potential(FourierPotential::constant(0.2));
        assert_relative_eq!(mu0_action(&shifted), -0.3, epsilon = 1e-15);
    }

    #[test]
    fn zero_potential_violates() {
        let spec = spec0();
        let orbit = optimal_orbit(&spec.direction, 3, 2).unwrap();
        let cert = necessary_condition(&spec, &orbit).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        assert_eq!(cert.gap, 0.0);
        assert!((cert.required_gap - 3.774e-4).abs() < 5e-8);
        assert_eq!(cert.c4_bound, 0.0);
    }

    #[test]
    fn resonant_cosine_verdicts() {
        let spec = spec0();
        let orbit = optimal_orbit(&spec.direction, 3, 2).unwrap();
        let strong = spec.with_potential(FourierPotential::cosine(2, -3, -1e-3));
        let cert = necessary_condition(&strong, &orbit).unwrap();
        assert_eq!(cert.verdict, Verdict::Compatible);
        assert_relative_eq!(cert.gap, 1e-3, max_relative = 1e-12);
        assert_relative_eq!(cert.c4_bound, 0.081, max_relative = 1e-12);
        assert!(cert.f4_sup >= cert.c4_bound);

        let weak = spec.with_potential(FourierPotential::cosine(2, -3, -1e-4));
        assert_eq!(necessary_condition(&weak, &orbit).unwrap().verdict, Verdict::Violated);
    }

    #[test]
    fn small_lp_unconstrained_picks_best_velocity() {
        let spec = spec0();
        let grid = LpGrid { nx: 8, ny: 8, nv: 9, v_max: 2.0 };
        let res = mather_lp(&spec, grid, 0).unwrap();
        let best = (0..grid.nv)
            .flat_map(|i| (0..grid.nv).map(move |j| (i, j)))
            .map(|(i, j)| spec.kinetic(grid.velocity(i), grid.velocity(j)))
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(res.action, best, epsilon = 1e-12);
        assert!((res.measure.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_rejects_bad_grids() {
        let spec = spec0();
        assert!(mather_lp(&spec, LpGrid { nx: 4, ny: 8, nv: 5, v_max: 2.0 }, 1).is_err());
        assert!(mather_lp(&spec, LpGrid { nx: 8, ny: 8, nv: 5, v_max: 0.5 }, 1).is_err());
        assert!(mather_lp(&spec, LpGrid { nx: 8, ny: 8, nv: 5, v_max: 2.0 }, 4).is_err());
    }

    #[test]
    fn lp_without_drift_rests() {
        let grid = LpGrid { nx: 8, ny: 8, nv: 5, v_max: 1.0 };
        let res = mather_lp_with_cost(grid, 2, |_, _, u, v| 0.5 * (u * u + v * v)).unwrap();
        assert!(res.action.abs() < 1e-12);
        assert!(res.rotation[0].abs() < 1e-12 && res.rotation[1].abs() < 1e-12);
    }
}
