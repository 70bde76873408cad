//! Value types on the two-torus `T² = R²/Z²`: trigonometric potentials,
//! quadratic-irrational directions, closed straight-line orbits and the
//! mechanical Lagrangian built from them.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Neg};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative tolerance used when checking Hermitian symmetry of coefficients.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default number of samples per axis for the grid estimate of the C⁴ norm.
pub const C4_GRID: usize = 256;

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Multiplier of mode `(m, n)` under `∂x^jx ∂y^jy`: `(2πim)^jx (2πin)^jy`.
fn derivative_factor(m: i32, n: i32, jx: u32, jy: u32) -> Complex64 {
    let real = TAU.powi((jx + jy) as i32) * (m as f64).powi(jx as i32) * (n as f64).powi(jy as i32);
    i_pow(jx + jy) * real
}

/// A real trigonometric polynomial `f(x, y) = Σ c_{mn} e^{2πi(mx + ny)}` on T².
///
/// Coefficients are Hermitian: `c_{−m,−n} = conj(c_{mn})`. Zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FourierPotential {
    coefficients: BTreeMap<(i32, i32), Complex64>,
    max_mode: i32,
}

impl FourierPotential {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coefficients([((0, 0), Complex64::new(c, 0.0))])
    }

    /// `amplitude · cos(2π(mx + ny))`.
    pub fn cosine(m: i32, n: i32, amplitude: f64) -> Self {
        if (m, n) == (0, 0) {
            return Self::constant(amplitude);
        }
        let half = Complex64::new(amplitude / 2.0, 0.0);
        Self::from_coefficients([((m, n), half), ((-m, -n), half)])
    }

    /// `amplitude · sin(2π(mx + ny))`.
    pub fn sine(m: i32, n: i32, amplitude: f64) -> Self {
        if (m, n) == (0, 0) {
            return Self::zero();
        }
        let half = Complex64::new(0.0, -amplitude / 2.0);
        Self::from_coefficients([((m, n), half), ((-m, -n), half.conj())])
    }

    fn from_coefficients(modes: impl IntoIterator<Item = ((i32, i32), Complex64)>) -> Self {
        let mut coefficients = BTreeMap::new();
        for (mode, c) in modes {
            *coefficients.entry(mode).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coefficients.retain(|_, c: &mut Complex64| c.re != 0.0 || c.im != 0.0);
        let max_mode = coefficients
            .keys()
            .map(|&(m, n)| m.abs().max(n.abs()))
            .max()
            .unwrap_or(0);
        Self { coefficients, max_mode }
    }

    /// Builds a potential from explicit modes, rejecting coefficients that are
    /// not Hermitian-symmetric. Repeated modes are summed.
    pub fn from_modes(modes: impl IntoIterator<Item = ((i32, i32), Complex64)>) -> Result<Self> {
        let f = Self::from_coefficients(modes);
        if let Some((m, n)) = f.hermitian_defect() {
            return invalid(format!(
                "coefficients are not Hermitian: c({m},{n}) != conj(c({},{}))",
                -m, -n
            ));
        }
        Ok(f)
    }

    /// Builds a potential from explicit modes, replacing it by its real part
    /// `(f + conj f)/2` when the coefficients are not Hermitian. The flag is set
    /// when anything had to change.
    pub fn from_modes_symmetrized(
        modes: impl IntoIterator<Item = ((i32, i32), Complex64)>,
    ) -> (Self, bool) {
        let raw = Self::from_coefficients(modes);
        if raw.hermitian_defect().is_none() {
            return (raw, false);
        }
        let sym = raw.coefficients.keys().flat_map(|&(m, n)| {
            let c = raw.coefficient(m, n);
            let partner = raw.coefficient(-m, -n).conj();
            let avg = (c + partner) / 2.0;
            [((m, n), avg), ((-m, -n), avg.conj())]
        });
        // each pair is produced twice (once from each side) unless one side was missing
        let mut map: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        for (mode, c) in sym {
            map.insert(mode, c);
        }
        (Self::from_coefficients(map), true)
    }

    /// A real trigonometric polynomial with modes `|m|, |n| ≤ max_mode`, each
    /// independent coefficient drawn uniformly from the disk of the given
    /// radius (the mean from the real interval).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_mode: i32, radius: f64) -> Self {
        let mut map = BTreeMap::new();
        for m in -max_mode..=max_mode {
            for n in -max_mode..=max_mode {
                if (m, n) <= (0, 0) {
                    continue;
                }
                let r = radius * rng.gen::<f64>().sqrt();
                let t = TAU * rng.gen::<f64>();
                let c = Complex64::from_polar(r, t);
                map.insert((m, n), c);
                map.insert((-m, -n), c.conj());
            }
        }
        map.insert((0, 0), Complex64::new(radius * (2.0 * rng.gen::<f64>() - 1.0), 0.0));
        Self::from_coefficients(map)
    }

    fn hermitian_defect(&self) -> Option<(i32, i32)> {
        self.coefficients.keys().copied().find(|&(m, n)| {
            let c = self.coefficient(m, n);
            let partner = self.coefficient(-m, -n).conj();
            (c - partner).norm() > HERMITIAN_TOL * c.norm().max(1.0)
        })
    }

    pub fn coefficient(&self, m: i32, n: i32) -> Complex64 {
        self.coefficients.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn modes(&self) -> impl Iterator<Item = ((i32, i32), Complex64)> + '_ {
        self.coefficients.iter().map(|(&k, &c)| (k, c))
    }

    pub fn num_modes(&self) -> usize {
        self.coefficients.len()
    }

    /// Bound `M` with `|m|, |n| ≤ M` over the support.
    pub fn max_mode(&self) -> i32 {
        self.max_mode
    }

    /// Lebesgue mean of `f`, i.e. the `(0, 0)` coefficient.
    pub fn mean(&self) -> f64 {
        self.coefficient(0, 0).re
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `f(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_derivative(0, 0, x, y)
    }

    /// Complex sum `Σ c e^{2πi(mx+ny)}`; its imaginary part is round-off only.
    pub fn eval_complex(&self, x: f64, y: f64) -> Complex64 {
        let (x, y) = (x.rem_euclid(1.0), y.rem_euclid(1.0));
        self.modes()
            .map(|((m, n), c)| {
                let phase = (m as f64 * x + n as f64 * y).rem_euclid(1.0);
                c * Complex64::from_polar(1.0, TAU * phase)
            })
            .sum()
    }

    /// `∂x^jx ∂y^jy f (x, y)` without materializing the derivative.
    pub fn eval_derivative(&self, jx: u32, jy: u32, x: f64, y: f64) -> f64 {
        let (x, y) = (x.rem_euclid(1.0), y.rem_euclid(1.0));
        let mut acc = 0.0;
        for ((m, n), c) in self.modes() {
            let c = if jx + jy == 0 { c } else { c * derivative_factor(m, n, jx, jy) };
            let phase = (m as f64 * x + n as f64 * y).rem_euclid(1.0);
            let (s, co) = (TAU * phase).sin_cos();
            acc += c.re * co - c.im * s;
        }
        acc
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [self.eval_derivative(1, 0, x, y), self.eval_derivative(0, 1, x, y)]
    }

    pub fn hessian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let fxy = self.eval_derivative(1, 1, x, y);
        [
            [self.eval_derivative(2, 0, x, y), fxy],
            [fxy, self.eval_derivative(0, 2, x, y)],
        ]
    }

    /// `∂x^jx ∂y^jy f` as a new potential.
    pub fn partial_derivative(&self, jx: u32, jy: u32) -> Self {
        Self::from_coefficients(
            self.modes()
                .map(|((m, n), c)| ((m, n), c * derivative_factor(m, n, jx, jy))),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_coefficients(self.modes().map(|(k, c)| (k, c * s)))
    }

    /// `(x, y) ↦ f(x + u, y + v)`.
    pub fn translated(&self, u: f64, v: f64) -> Self {
        Self::from_coefficients(self.modes().map(|((m, n), c)| {
            let phase = (m as f64 * u + n as f64 * v).rem_euclid(1.0);
            ((m, n), c * Complex64::from_polar(1.0, TAU * phase))
        }))
    }

    /// Samples `∂x^jx ∂y^jy f` on the regular grid `(i/nx, j/ny)`.
    /// Output is row-major with `x` fastest: index `j * nx + i`.
    pub fn sample_grid(&self, jx: u32, jy: u32, nx: usize, ny: usize) -> Vec<f64> {
        let mut out = vec![0.0; nx * ny];
        if nx == 0 || ny == 0 {
            return out;
        }
        let roots = |n: usize| -> Vec<Complex64> {
            (0..n).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / n as f64)).collect()
        };
        let (rx, ry) = (roots(nx), roots(ny));
        let mut by_m: BTreeMap<i32, Vec<(i32, Complex64)>> = BTreeMap::new();
        for ((m, n), c) in self.modes() {
            by_m.entry(m).or_default().push((n, c * derivative_factor(m, n, jx, jy)));
        }
        let mut column = vec![Complex64::default(); ny];
        for (m, terms) in by_m {
            for (j, slot) in column.iter_mut().enumerate() {
                *slot = terms
                    .iter()
                    .map(|&(n, c)| c * ry[(n as i64 * j as i64).rem_euclid(ny as i64) as usize])
                    .sum();
            }
            for i in 0..nx {
                let ex = rx[(m as i64 * i as i64).rem_euclid(nx as i64) as usize];
                for (j, g) in column.iter().enumerate() {
                    let z = ex * g;
                    out[j * nx + i] += z.re;
                }
            }
        }
        out
    }
}

impl Add for &FourierPotential {
    type Output = FourierPotential;

    fn add(self, rhs: &FourierPotential) -> FourierPotential {
        FourierPotential::from_coefficients(self.modes().chain(rhs.modes()))
    }
}

impl Neg for &FourierPotential {
    type Output = FourierPotential;

    fn neg(self) -> FourierPotential {
        self.scaled(-1.0)
    }
}

/// Two-sided estimate of `‖f‖_{C⁴} = max_{jx+jy≤4} sup |∂^{(jx,jy)} f|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C4Estimate {
    /// Largest sampled value; a lower bound on the norm.
    pub grid_sup: f64,
    /// `max_{jx+jy≤4} Σ |c| |2πm|^jx |2πn|^jy`; an upper bound on the norm.
    pub coefficient_bound: f64,
    /// Samples per axis used for `grid_sup`.
    pub resolution: usize,
}

/// Multi-indices `(jx, jy)` with `jx + jy ≤ 4`.
pub fn c4_multi_indices() -> impl Iterator<Item = (u32, u32)> {
    (0..=4u32).flat_map(|total| (0..=total).map(move |jx| (jx, total - jx)))
}

pub fn coefficient_bound(f: &FourierPotential, jx: u32, jy: u32) -> f64 {
    f.modes()
        .map(|((m, n), c)| {
            c.norm()
                * (TAU * m.abs() as f64).powi(jx as i32)
                * (TAU * n.abs() as f64).powi(jy as i32)
        })
        .fold(0.0, |s, t| s + t)
}

/// C⁴ norm estimate on the default 256² grid.
pub fn c4_norm(f: &FourierPotential) -> C4Estimate {
    c4_norm_at(f, C4_GRID)
}

/// C⁴ norm estimate with `resolution²` samples; raise `resolution` to refine
/// the lower side.
pub fn c4_norm_at(f: &FourierPotential, resolution: usize) -> C4Estimate {
    let mut grid_sup: f64 = 0.0;
    let mut coefficient_bound_max: f64 = 0.0;
    for (jx, jy) in c4_multi_indices() {
        coefficient_bound_max = coefficient_bound_max.max(coefficient_bound(f, jx, jy));
        if f.is_zero() {
            continue;
        }
        let sup = f
            .sample_grid(jx, jy, resolution, resolution)
            .into_iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        grid_sup = grid_sup.max(sup);
    }
    C4Estimate { grid_sup, coefficient_bound: coefficient_bound_max, resolution }
}

/// Which root of the minimal polynomial a [`QuadraticIrrational`] denotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Root {
    Larger,
    Smaller,
}

/// A real root of `A t² + B t + C` with integer coefficients and non-square
/// positive discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticIrrational {
    a: i64,
    b: i64,
    c: i64,
    root: Root,
}

pub(crate) fn isqrt(n: i128) -> i128 {
    if n < 2 {
        return n.max(0);
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

impl QuadraticIrrational {
    pub fn new(a: i64, b: i64, c: i64, root: Root) -> Result<Self> {
        if a == 0 {
            return invalid("leading coefficient must be nonzero (degree 2 required)");
        }
        let d = b as i128 * b as i128 - 4 * a as i128 * c as i128;
        if d <= 0 {
            return invalid(format!("discriminant {d} is not positive: no two real roots"));
        }
        let s = isqrt(d);
        if s * s == d {
            return invalid(format!("discriminant {d} is a perfect square: roots are rational"));
        }
        let (a, b, c) = if a < 0 { (-a, -b, -c) } else { (a, b, c) };
        Ok(Self { a, b, c, root })
    }

    /// The positive root of `t² − n`.
    pub fn sqrt(n: i64) -> Result<Self> {
        Self::new(1, 0, -n, Root::Larger)
    }

    /// `(1 + √5)/2`.
    pub fn golden() -> Self {
        Self { a: 1, b: -1, c: -1, root: Root::Larger }
    }

    /// Accepts `sqrtN`, `golden`, or `A,B,C` (larger root) / `A,B,C,smaller`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "golden" || s == "phi" {
            return Ok(Self::golden());
        }
        if let Some(rest) = s.strip_prefix("sqrt") {
            let n: i64 = rest
                .trim_matches(|c| c == '(' || c == ')')
                .parse()
                .map_err(|_| crate::Error::InvalidInput(format!("cannot parse '{s}'")))?;
            return Self::sqrt(n);
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() == 3 || parts.len() == 4 {
            let num = |p: &str| {
                p.parse::<i64>()
                    .map_err(|_| crate::Error::InvalidInput(format!("cannot parse '{s}'")))
            };
            let root = match parts.get(3) {
                None | Some(&"larger") => Root::Larger,
                Some(&"smaller") => Root::Smaller,
                Some(other) => return invalid(format!("unknown root selector '{other}'")),
            };
            return Self::new(num(parts[0])?, num(parts[1])?, num(parts[2])?, root);
        }
        invalid(format!("cannot parse quadratic irrational '{s}'"))
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn root(&self) -> Root {
        self.root
    }

    pub fn discriminant(&self) -> i128 {
        self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128
    }

    /// `(P, Q, D)` with value `(P + √D)/Q` and `Q | D − P²`.
    pub(crate) fn surd_form(&self) -> (i128, i128, i128) {
        let d = self.discriminant();
        match self.root {
            Root::Larger => (-(self.b as i128), 2 * self.a as i128, d),
            Root::Smaller => (self.b as i128, -2 * self.a as i128, d),
        }
    }

    pub fn value(&self) -> f64 {
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        let sd = (self.discriminant() as f64).sqrt();
        // avoid cancellation in −b ± √D
        match (self.root, b >= 0.0) {
            (Root::Larger, true) => 2.0 * c / (-b - sd),
            (Root::Larger, false) => (-b + sd) / (2.0 * a),
            (Root::Smaller, true) => (-b - sd) / (2.0 * a),
            (Root::Smaller, false) => 2.0 * c / (-b + sd),
        }
    }

    /// The other root of the minimal polynomial.
    pub fn conjugate(&self) -> Self {
        let root = match self.root {
            Root::Larger => Root::Smaller,
            Root::Smaller => Root::Larger,
        };
        Self { root, ..*self }
    }

    /// `A t² + B t + C` evaluated exactly at `t = num/den`, times `den²`.
    pub fn homogeneous_value(&self, num: i64, den: i64) -> i128 {
        let (n, d) = (num as i128, den as i128);
        self.a as i128 * n * n + self.b as i128 * n * d + self.c as i128 * d * d
    }
}

impl fmt::Display for QuadraticIrrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let which = match self.root {
            Root::Larger => "larger",
            Root::Smaller => "smaller",
        };
        write!(f, "{which} root of ")?;
        let mut first = true;
        for (k, power) in [(self.a, "t^2"), (self.b, "t"), (self.c, "")] {
            if k == 0 {
                continue;
            }
            let sign = match (first, k < 0) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            let mag = k.unsigned_abs();
            if mag == 1 && !power.is_empty() {
                write!(f, "{sign}{power}")?;
            } else {
                write!(f, "{sign}{mag}{power}")?;
            }
            first = false;
        }
        Ok(())
    }
}

/// The unit drift `(p₀, q₀)` with slope `p₀/q₀ = r` and `q₀ > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSpec {
    pub r: QuadraticIrrational,
    pub p0: f64,
    pub q0: f64,
}

impl DirectionSpec {
    pub fn new(r: QuadraticIrrational) -> Self {
        let rv = r.value();
        let norm = rv.hypot(1.0);
        Self { r, p0: rv / norm, q0: 1.0 / norm }
    }

    pub fn sqrt2() -> Self {
        Self::new(QuadraticIrrational::sqrt(2).expect("2 is not a square"))
    }

    pub fn drift(&self) -> [f64; 2] {
        [self.p0, self.q0]
    }
}

/// The closed curve `t ↦ (pt, qt)` with `(pT, qT) = (a, b)` coprime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalOrbit {
    pub a: i64,
    pub b: i64,
    pub period: f64,
}

impl RationalOrbit {
    pub fn new(a: i64, b: i64, period: f64) -> Result<Self> {
        if gcd(a, b) != 1 {
            return invalid(format!("orbit class ({a},{b}) is not a coprime pair"));
        }
        if !(period.is_finite() && period > 0.0) {
            return invalid(format!("period must be positive and finite, got {period}"));
        }
        Ok(Self { a, b, period })
    }

    pub fn p(&self) -> f64 {
        self.a as f64 / self.period
    }

    pub fn q(&self) -> f64 {
        self.b as f64 / self.period
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.p(), self.q()]
    }

    /// Point of the orbit at time `t`, reduced mod 1.
    pub fn point(&self, t: f64) -> [f64; 2] {
        [(self.p() * t).rem_euclid(1.0), (self.q() * t).rem_euclid(1.0)]
    }
}

/// `L(x, y, u, v) = (u² + v²)/2 − (p₀u + q₀v) + f(x, y) + extra_constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSpec {
    pub direction: DirectionSpec,
    pub potential: FourierPotential,
    pub extra_constant: f64,
}

impl LagrangianSpec {
    pub fn new(direction: DirectionSpec, potential: FourierPotential) -> Self {
        Self { direction, potential, extra_constant: 0.0 }
    }

    pub fn unperturbed(direction: DirectionSpec) -> Self {
        Self::new(direction, FourierPotential::zero())
    }

    pub fn with_potential(&self, potential: FourierPotential) -> Self {
        Self { potential, ..self.clone() }
    }

    /// Velocity-dependent part `|w|²/2 − ⟨(p₀, q₀), w⟩`.
    pub fn kinetic(&self, u: f64, v: f64) -> f64 {
        0.5 * (u * u + v * v) - (self.direction.p0 * u + self.direction.q0 * v)
    }

    pub fn eval(&self, x: f64, y: f64, u: f64, v: f64) -> f64 {
        self.kinetic(u, v) + self.potential.eval(x, y) + self.extra_constant
    }
}

/// `L(x, y, u, v)` for `spec`.
pub fn eval_lagrangian(spec: &LagrangianSpec, x: f64, y: f64, u: f64, v: f64) -> f64 {
    spec.eval(x, y, u, v)
}
