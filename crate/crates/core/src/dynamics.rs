//! Euler–Lagrange flow of `L = |v|²/2 − ⟨(p₀,q₀), v⟩ + f(x)`.
//!
//! The drift term is a closed one-form and drops out of the equations, leaving
//! `ẍ = ∇f(x)` with conserved energy `E = |v|²/2 − f(x)`.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::torus::{gcd, FourierPotential, LagrangianSpec, RationalOrbit};

/// A point of the tangent bundle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, u: f64, v: f64) -> Self {
        Self { x, y, u, v }
    }

    pub fn reduced(self) -> Self {
        Self { x: self.x.rem_euclid(1.0), y: self.y.rem_euclid(1.0), ..self }
    }
}

/// Samples of an extremal at a fixed time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// States with positions reduced mod 1.
    pub states: Vec<PhaseState>,
    /// Positions in the universal cover.
    pub lifted: Vec<[f64; 2]>,
    /// `E = |v|²/2 − f(x)` per sample.
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.dt * (self.states.len().saturating_sub(1)) as f64
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0, |m, e| m.max((e - e0).abs()))
    }

    /// `K` with `|E_t − E_0| ≤ K dt²` over the run.
    pub fn energy_constant(&self) -> f64 {
        self.max_energy_drift() / (self.dt * self.dt)
    }

    /// `∫ (L + shift) dt` between sample indices by the trapezoid rule.
    pub fn action_between(&self, spec: &LagrangianSpec, shift: f64, from: usize, to: usize) -> f64 {
        let l = |s: &PhaseState| spec.eval(s.x, s.y, s.u, s.v) + shift;
        self.states[from..=to]
            .windows(2)
            .map(|w| 0.5 * self.dt * (l(&w[0]) + l(&w[1])))
            .sum()
    }

    pub fn action(&self, spec: &LagrangianSpec, shift: f64) -> f64 {
        self.action_between(spec, shift, 0, self.states.len() - 1)
    }
}

/// Störmer–Verlet integration of the Euler–Lagrange flow. The step is shrunk
/// so that a whole number of steps covers `horizon`.
pub fn integrate_el(spec: &LagrangianSpec, s0: PhaseState, horizon: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && horizon >= dt) {
        return invalid(format!("need 0 < dt ≤ horizon, got dt={dt}, horizon={horizon}"));
    }
    let steps = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let f = &spec.potential;
    let energy = |x: f64, y: f64, u: f64, v: f64| 0.5 * (u * u + v * v) - f.eval(x, y);

    let (mut x, mut y, mut u, mut v) = (s0.x, s0.y, s0.u, s0.v);
    let mut states = Vec::with_capacity(steps + 1);
    let mut lifted = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    states.push(s0.reduced());
    lifted.push([x, y]);
    energies.push(energy(x, y, u, v));
    let mut acc = f.gradient(x, y);
    for _ in 0..steps {
        let uh = u + 0.5 * h * acc[0];
        let vh = v + 0.5 * h * acc[1];
        x += h * uh;
        y += h * vh;
        acc = f.gradient(x, y);
        u = uh + 0.5 * h * acc[0];
        v = vh + 0.5 * h * acc[1];
        states.push(PhaseState::new(x, y, u, v).reduced());
        lifted.push([x, y]);
        energies.push(energy(x, y, u, v));
    }
    Ok(Trajectory { dt: h, states, lifted, energy: energies })
}

/// The potential `κ (1 − cos 2π(bx − ay))` vanishing on the orbit lines of
/// class `(a, b)` and scaled by `strength` when added to a Lagrangian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub a: i64,
    pub b: i64,
    pub strength: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Penalty {
    pub config: PenaltyConfig,
    /// `g` itself, without the strength factor.
    pub g: FourierPotential,
    /// Amplitude actually used, `max(requested, kappa_min)`.
    pub kappa: f64,
    /// Smallest amplitude with `g ≥ d(·, orbit)²` everywhere.
    pub kappa_min: f64,
    pub raised: bool,
}

impl Penalty {
    /// `strength · g`.
    pub fn scaled(&self) -> FourierPotential {
        self.g.scaled(self.config.strength)
    }
}

/// Euclidean distance from `(x, y)` to the projection of the orbit class
/// through the origin, i.e. the lines `bx − ay ∈ Z`.
pub fn distance_to_orbit(a: i64, b: i64, x: f64, y: f64) -> f64 {
    let s = (b as f64 * x - a as f64 * y).rem_euclid(1.0);
    s.min(1.0 - s) / ((a * a + b * b) as f64).sqrt()
}

/// `sup_{0<s≤1/2} s² / (1 − cos 2πs)` by a grid scan that includes `s = 1/2`.
fn transverse_ratio_sup() -> f64 {
    const N: usize = 20_000;
    (1..=N)
        .map(|i| {
            let s = 0.5 * i as f64 / N as f64;
            s * s / (1.0 - (std::f64::consts::TAU * s).cos())
        })
        .fold(0.0, f64::max)
}

pub fn penalty_potential(cfg: PenaltyConfig) -> Result<Penalty> {
    if gcd(cfg.a, cfg.b) != 1 {
        return invalid(format!("orbit class ({},{}) is not a coprime pair", cfg.a, cfg.b));
    }
    if !(cfg.strength >= 0.0 && cfg.kappa >= 0.0) {
        return invalid("penalty strength and amplitude must be nonnegative");
    }
    // g ≥ d² reduces to κ(1 − cos 2πs) ≥ dist(s, Z)² / (a² + b²)
    let norm2 = (cfg.a * cfg.a + cfg.b * cfg.b) as f64;
    let kappa_min = transverse_ratio_sup() / norm2 * (1.0 + 1e-9);
    let kappa = cfg.kappa.max(kappa_min);
    let g = &FourierPotential::constant(kappa)
        + &FourierPotential::cosine(cfg.b as i32, -cfg.a as i32, -kappa);
    Ok(Penalty { config: cfg, g, kappa, kappa_min, raised: kappa > cfg.kappa })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monodromy {
    pub matrix: Matrix4<f64>,
    /// Eigenvalues sorted by increasing modulus.
    pub multipliers: Vec<Complex64>,
    pub reduced: ReducedMonodromy,
    /// Product of the determinants of the one-step maps.
    pub determinant: f64,
    /// `|(x, v)(T) − (x, v)(0) − ((a, b), 0)|`.
    pub closure_error: f64,
}

impl Monodromy {
    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    /// Multiplier of largest modulus.
    pub fn leading(&self) -> Complex64 {
        *self.multipliers.last().expect("four multipliers")
    }

    /// Hyperbolic when some multiplier is off the unit circle by more than `tol`.
    pub fn is_hyperbolic(&self, tol: f64) -> bool {
        self.multipliers.iter().any(|m| (m.norm() - 1.0).abs() > tol)
    }
}

/// The monodromy in a symplectic frame adapted to the flow direction `X`:
/// with `Y` satisfying `ω(X, Y) = 1` and `(e₃, e₄)` spanning the symplectic
/// complement of `{X, Y}`, the matrix in the frame `(X, e₃, e₄, Y)` is block
/// upper triangular for a periodic orbit of an autonomous flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedMonodromy {
    /// Diagonal entry on `X`.
    pub along: f64,
    /// Diagonal entry on `Y`.
    pub energy: f64,
    /// Block on `(e₃, e₄)`: the linearized Poincaré map.
    pub transverse: [[f64; 2]; 2],
    /// Largest entry below the block diagonal, zero up to round-off.
    pub lower_defect: f64,
}

fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, -1.0, 0.0, 0.0,
    )
}

fn reduce(phi: &Matrix4<f64>, flow: &Vector4<f64>) -> Result<ReducedMonodromy> {
    let j = symplectic_form();
    let x = *flow;
    let y = -(j * x) / x.norm_squared();
    // e₃, e₄ orthogonal to Jᵀx and Jᵀy
    let mut frame: Vec<Vector4<f64>> = vec![j.transpose() * x, j.transpose() * y];
    for k in 0..4 {
        let mut e = Vector4::zeros();
        e[k] = 1.0;
        for b in &frame {
            e -= b * b.dot(&e) / b.norm_squared();
        }
        if e.norm() > 1e-6 && frame.len() < 4 {
            let e = e / e.norm();
            frame.push(e);
        }
    }
    let basis = Matrix4::from_columns(&[x, frame[2], frame[3], y]);
    let inv = basis
        .try_inverse()
        .ok_or_else(|| Error::Internal("degenerate symplectic frame".into()))?;
    let c = inv * phi * basis;
    let lower_defect = [c[(1, 0)], c[(2, 0)], c[(3, 0)], c[(3, 1)], c[(3, 2)]]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ReducedMonodromy {
        along: c[(0, 0)],
        energy: c[(3, 3)],
        transverse: [[c[(1, 1)], c[(1, 2)]], [c[(2, 1)], c[(2, 2)]]],
        lower_defect,
    })
}

/// Eigenvalues of a 2×2 matrix with known determinant.
fn eigen2(m: &[[f64; 2]; 2], det: f64) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let half = Complex64::new(tr / 2.0, 0.0);
    // the larger root first, the smaller by Vieta to avoid cancellation
    let big = if tr >= 0.0 { half + disc } else { half - disc };
    let small = if big.norm() > 0.0 { Complex64::new(det, 0.0) / big } else { half - disc };
    [big, small]
}

/// Steps per unit time for the variational integration.
const MONODROMY_STEPS_PER_UNIT: f64 = 2000.0;

fn variational_rhs(f: &FourierPotential, z: &Vector4<f64>, phi: &Matrix4<f64>) -> (Vector4<f64>, Matrix4<f64>) {
    let g = f.gradient(z[0], z[1]);
    let h = f.hessian(z[0], z[1]);
    let a = Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        h[0][0], h[0][1], 0.0, 0.0, //
        h[1][0], h[1][1], 0.0, 0.0,
    );
    (Vector4::new(z[2], z[3], g[0], g[1]), a * phi)
}

/// Monodromy of the orbit `t ↦ (pt, qt)` through the origin, from the
/// linearization `δẍ = Hess f · δx` integrated with classical RK4.
pub fn monodromy(spec: &LagrangianSpec, orbit: &RationalOrbit) -> Result<Monodromy> {
    let f = &spec.potential;
    let period = orbit.period;
    let steps = (period * MONODROMY_STEPS_PER_UNIT).ceil().max(100.0) as usize;
    let h = period / steps as f64;
    let [p, q] = orbit.velocity();
    let mut z = Vector4::new(0.0, 0.0, p, q);
    let mut phi = Matrix4::<f64>::identity();
    // Φ(T) is a product of one-step maps, each close to the identity, so
    // its determinant is accumulated factor by factor without cancellation.
    let mut log_det = 0.0;
    let id = Matrix4::<f64>::identity();
    for _ in 0..steps {
        let (k1z, k1p) = variational_rhs(f, &z, &id);
        let (k2z, k2p) = variational_rhs(f, &(z + k1z * (h / 2.0)), &(id + k1p * (h / 2.0)));
        let (k3z, k3p) = variational_rhs(f, &(z + k2z * (h / 2.0)), &(id + k2p * (h / 2.0)));
        let (k4z, k4p) = variational_rhs(f, &(z + k3z * h), &(id + k3p * h));
        z += (k1z + k2z * 2.0 + k3z * 2.0 + k4z) * (h / 6.0);
        let step = id + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
        log_det += step.determinant().ln();
        phi = step * phi;
    }
    let closure_error = Vector4::new(
        z[0] - orbit.a as f64,
        z[1] - orbit.b as f64,
        z[2] - p,
        z[3] - q,
    )
    .norm();
    if closure_error > 1e-8 {
        return invalid(format!(
            "orbit ({},{}) with period {period} is not invariant under this flow (closure error {closure_error:.3e})",
            orbit.a, orbit.b
        ));
    }
    let flow = Vector4::new(p, q, 0.0, 0.0) + {
        let g = f.gradient(0.0, 0.0);
        Vector4::new(0.0, 0.0, g[0], g[1])
    };
    let reduced = reduce(&phi, &flow)?;
    let determinant = log_det.exp();
    let mut multipliers = vec![Complex64::new(reduced.along, 0.0), Complex64::new(reduced.energy, 0.0)];
    multipliers.extend(eigen2(&reduced.transverse, determinant / (reduced.along * reduced.energy)));
    multipliers.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    Ok(Monodromy { matrix: phi, multipliers, reduced, determinant, closure_error })
}
