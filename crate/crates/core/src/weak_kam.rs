//! Discrete weak KAM solutions by Lax–Oleinik iteration.
//!
//! The backward operator on an `nx × ny` grid is
//!
//! ```text
//! (T u)(x) = min_y [ u(y) + h L(y, (x − y)/h) ]
//! ```
//!
//! with the straight-chord cost. The minimum is taken over grid displacements
//! whose kinetic cost can still compete, then refined over the half-cell
//! neighbours of the best displacement using bilinear interpolation of `u`.
//! `T` is monotone and commutes with constants, so `min (Tu − u)` and
//! `max (Tu − u)` bracket `−h α`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{distance_to_orbit, integrate_el, PhaseState, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::torus::{LagrangianSpec, RationalOrbit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn square(n: usize) -> Self {
        Self { nx: n, ny: n }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of grid index `k = j·nx + i`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        [(k % self.nx) as f64 / self.nx as f64, (k / self.nx) as f64 / self.ny as f64]
    }

    /// The larger of the two spacings.
    pub fn spacing(&self) -> f64 {
        (1.0 / self.nx as f64).max(1.0 / self.ny as f64)
    }

    fn wrap(&self, i: i64, j: i64) -> usize {
        let i = i.rem_euclid(self.nx as i64) as usize;
        let j = j.rem_euclid(self.ny as i64) as usize;
        j * self.nx + i
    }

    /// Periodic bilinear interpolation of grid data at `(x, y)`.
    pub fn interpolate(&self, data: &[f64], x: f64, y: f64) -> f64 {
        let gx = x.rem_euclid(1.0) * self.nx as f64;
        let gy = y.rem_euclid(1.0) * self.ny as f64;
        let (i0, j0) = (gx.floor(), gy.floor());
        let (tx, ty) = (gx - i0, gy - j0);
        let (i0, j0) = (i0 as i64, j0 as i64);
        let v00 = data[self.wrap(i0, j0)];
        let v10 = data[self.wrap(i0 + 1, j0)];
        let v01 = data[self.wrap(i0, j0 + 1)];
        let v11 = data[self.wrap(i0 + 1, j0 + 1)];
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaxOleinikConfig {
    pub grid: Grid,
    pub step: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl LaxOleinikConfig {
    pub fn new(n: usize, step: f64, tol: f64, max_iters: usize) -> Self {
        Self { grid: Grid::square(n), step, tol, max_iters }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakKamSolution {
    pub config: LaxOleinikConfig,
    /// Values at grid index `j·nx + i`, normalized so that `min u = 0`.
    pub u: Vec<f64>,
    pub alpha: f64,
    /// `max (Tu − u) − min (Tu − u)` at the last iteration.
    pub residual: f64,
    /// `[−max(Tu − u)/h, −min(Tu − u)/h]` at the last iteration.
    pub alpha_bracket: [f64; 2],
    pub iterations: usize,
    /// `(max + min)/2` of `Tu − u` per iteration.
    pub drift_history: Vec<f64>,
    pub residual_history: Vec<f64>,
}

impl WeakKamSolution {
    pub fn grid(&self) -> Grid {
        self.config.grid
    }

    pub fn step(&self) -> f64 {
        self.config.step
    }

    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = min_max(&self.u);
        hi - lo
    }

    /// Bilinear value of `u` off the grid.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.config.grid.interpolate(&self.u, x, y)
    }

    /// `∫ (L + α) − [u(end) − u(start)]` along a trajectory. Nonnegative up
    /// to discretization error for a weak KAM solution.
    pub fn calibration_gap(&self, spec: &LagrangianSpec, tr: &Trajectory, from: usize, to: usize) -> f64 {
        let (s, e) = (tr.states[from], tr.states[to]);
        tr.action_between(spec, self.alpha, from, to) - (self.value(e.x, e.y) - self.value(s.x, s.y))
    }

    /// Slack `5 (h + spacing)` allowed in the calibration audit.
    pub fn audit_slack(&self) -> f64 {
        5.0 * (self.config.step + self.config.grid.spacing())
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    /// Source `x − d`, potential charged at the source.
    Backward,
    /// Source `x + d`, potential charged at the target. Acting on `−u` this
    /// is the forward semigroup.
    Forward,
}

/// One application of the discrete operator, shared by both directions.
struct Stepper<'a> {
    spec: &'a LagrangianSpec,
    grid: Grid,
    h: f64,
    /// `h (f + c)` on the grid.
    hf: Vec<f64>,
    drift: [f64; 2],
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a LagrangianSpec, grid: Grid, h: f64) -> Self {
        let hf = (0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                h * spec.eval(x, y, 0.0, 0.0)
            })
            .collect();
        Self { spec, grid, h, hf, drift: spec.direction.drift() }
    }

    /// `h · kinetic(d/h)`.
    fn cost(&self, dx: f64, dy: f64) -> f64 {
        (dx * dx + dy * dy) / (2.0 * self.h) - (self.drift[0] * dx + self.drift[1] * dy)
    }

    /// Grid displacements whose cost is within `slack` of the best one.
    fn stencil(&self, slack: f64) -> Vec<(i64, i64, f64)> {
        let (nx, ny) = (self.grid.nx as f64, self.grid.ny as f64);
        let [cx, cy] = [self.h * self.drift[0], self.h * self.drift[1]];
        // cost(d) = |d − h v₀|²/(2h) − h|v₀|²/2
        let floor = -0.5 * self.h * (self.drift[0].powi(2) + self.drift[1].powi(2));
        let nearest = [(cx * nx).round(), (cy * ny).round()];
        let best = self.cost(nearest[0] / nx, nearest[1] / ny);
        let radius = (2.0 * self.h * (best - floor + slack)).max(0.0).sqrt();
        let (i_lo, i_hi) = (((cx - radius) * nx).floor() as i64, ((cx + radius) * nx).ceil() as i64);
        let (j_lo, j_hi) = (((cy - radius) * ny).floor() as i64, ((cy + radius) * ny).ceil() as i64);
        let mut out = Vec::new();
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let c = self.cost(i as f64 / nx, j as f64 / ny);
                if c <= best + slack {
                    out.push((i, j, c));
                }
            }
        }
        out
    }

    fn apply(&self, u: &[f64], dir: Direction) -> Vec<f64> {
        let grid = self.grid;
        let (nx, ny) = (grid.nx as f64, grid.ny as f64);
        let charged: Vec<f64> = match dir {
            Direction::Backward => u.iter().zip(&self.hf).map(|(a, b)| a + b).collect(),
            Direction::Forward => u.to_vec(),
        };
        let (lo, hi) = min_max(&charged);
        let stencil = self.stencil(hi - lo + 1e-12);
        let sign: i64 = match dir {
            Direction::Backward => -1,
            Direction::Forward => 1,
        };
        let mut out = vec![0.0; grid.len()];
        for (k, slot) in out.iter_mut().enumerate() {
            let (i, j) = ((k % grid.nx) as i64, (k / grid.nx) as i64);
            let mut best = f64::INFINITY;
            let mut arg = (0, 0);
            for &(di, dj, c) in &stencil {
                let v = charged[grid.wrap(i + sign * di, j + sign * dj)] + c;
                if v < best {
                    best = v;
                    arg = (di, dj);
                }
            }
            // half-cell refinement around the best grid displacement
            let [x, y] = grid.point(k);
            for si in -1..=1 {
                for sj in -1..=1 {
                    if si == 0 && sj == 0 {
                        continue;
                    }
                    let dx = (arg.0 as f64 + 0.5 * si as f64) / nx;
                    let dy = (arg.1 as f64 + 0.5 * sj as f64) / ny;
                    let (sx, sy) = (x + sign as f64 * dx, y + sign as f64 * dy);
                    let mut v = grid.interpolate(u, sx, sy) + self.cost(dx, dy);
                    if dir == Direction::Backward {
                        v += self.h * self.spec.eval(sx, sy, 0.0, 0.0);
                    }
                    best = best.min(v);
                }
            }
            *slot = match dir {
                Direction::Backward => best,
                Direction::Forward => best + self.hf[k],
            };
        }
        out
    }
}

struct Iteration {
    u: Vec<f64>,
    iterations: usize,
    drifts: Vec<f64>,
    residuals: Vec<f64>,
    bracket: [f64; 2],
}

fn iterate(stepper: &Stepper, mut u: Vec<f64>, dir: Direction, tol: f64, max_iters: usize) -> Result<Iteration> {
    let mut drifts: Vec<f64> = Vec::new();
    let mut residuals = Vec::new();
    for it in 1..=max_iters {
        let next = stepper.apply(&u, dir);
        let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let (dmin, dmax) = min_max(&diff);
        let drift = 0.5 * (dmin + dmax);
        let residual = dmax - dmin;
        let (lo, _) = min_max(&next);
        u = next.into_iter().map(|v| v - lo).collect();
        let settled = drifts.last().is_some_and(|&d| (drift - d).abs() <= tol) && residual <= tol;
        drifts.push(drift);
        residuals.push(residual);
        if settled {
            return Ok(Iteration { u, iterations: it, drifts, residuals, bracket: [dmin, dmax] });
        }
    }
    Err(Error::Solver {
        message: format!(
            "Lax–Oleinik drift not settled to {tol:e}; last residual {:.3e}",
            residuals.last().copied().unwrap_or(f64::NAN)
        ),
        iterations: max_iters,
        history: residuals,
    })
}

fn check_config(cfg: &LaxOleinikConfig) -> Result<()> {
    if cfg.grid.nx < 16 || cfg.grid.ny < 16 {
        return invalid(format!("grid {}x{} is smaller than 16x16", cfg.grid.nx, cfg.grid.ny));
    }
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return invalid(format!("step must be positive, got {}", cfg.step));
    }
    if !(cfg.tol > 0.0) || cfg.max_iters == 0 {
        return invalid("need a positive tolerance and at least one iteration");
    }
    Ok(())
}

/// Backward Lax–Oleinik iteration from `u = 0`. Stops when successive drifts
/// differ by at most `tol` and the fixed-point residual is at most `tol`.
pub fn lax_oleinik_solve(spec: &LagrangianSpec, config: LaxOleinikConfig) -> Result<WeakKamSolution> {
    check_config(&config)?;
    let stepper = Stepper::new(spec, config.grid, config.step);
    let run = iterate(&stepper, vec![0.0; config.grid.len()], Direction::Backward, config.tol, config.max_iters)?;
    let h = config.step;
    let drift = *run.drifts.last().expect("at least one iteration");
    Ok(WeakKamSolution {
        config,
        u: run.u,
        alpha: -drift / h,
        residual: *run.residuals.last().expect("at least one iteration"),
        alpha_bracket: [-run.bracket[1] / h, -run.bracket[0] / h],
        iterations: run.iterations,
        drift_history: run.drifts,
        residual_history: run.residuals,
    })
}

/// Estimated projected Aubry set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AubryEstimate {
    pub grid: Grid,
    pub tol: f64,
    /// `u⁻ − u⁺ − min(u⁻ − u⁺)` per grid point.
    pub defect: Vec<f64>,
    pub mask: Vec<bool>,
}

impl AubryEstimate {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| self.grid.point(k))
    }

    /// Same defect field, different threshold.
    pub fn with_tol(&self, tol: f64) -> Self {
        Self {
            grid: self.grid,
            tol,
            defect: self.defect.clone(),
            mask: self.defect.iter().map(|&d| d <= tol).collect(),
        }
    }
}

/// Grid points where the backward solution `u⁻ = sol.u` meets its conjugate
/// forward solution `u⁺`, i.e. where `u⁻ − u⁺` is within `tol` of its minimum.
pub fn aubry_estimate(spec: &LagrangianSpec, sol: &WeakKamSolution, tol: f64) -> Result<AubryEstimate> {
    if !(tol >= 0.0) {
        return invalid("tolerance must be nonnegative");
    }
    let cfg = sol.config;
    let stepper = Stepper::new(spec, cfg.grid, cfg.step);
    let w0: Vec<f64> = sol.u.iter().map(|v| -v).collect();
    let run = iterate(&stepper, w0, Direction::Forward, cfg.tol, cfg.max_iters)?;
    // u⁺ = −w up to a constant, absorbed by the normalization below
    let raw: Vec<f64> = sol.u.iter().zip(&run.u).map(|(um, w)| um + w).collect();
    let (lo, _) = min_max(&raw);
    let defect: Vec<f64> = raw.into_iter().map(|d| d - lo).collect();
    let mask = defect.iter().map(|&d| d <= tol).collect();
    Ok(AubryEstimate { grid: cfg.grid, tol, defect, mask })
}

/// Transverse offsets of the shooting fan, in grid cells.
pub const FAN_OFFSETS: [f64; 6] = [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0];
/// Transverse speeds of the shooting fan.
pub const FAN_SPEEDS: [f64; 4] = [-0.2, -0.1, 0.1, 0.2];
pub const FAN_HORIZON: f64 = 50.0;
pub const FAN_DT: f64 = 0.01;
/// Neighbourhood radius of the orbit, in grid cells.
pub const NEIGHBOURHOOD_CELLS: f64 = 4.5;

/// One shot of the fan that left the neighbourhood and came back.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub offset_cells: f64,
    pub speed: f64,
    pub return_time: f64,
    /// Closest approach to the orbit lines on return.
    pub return_distance: f64,
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExclusionMargin {
    Margin(f64),
    /// No shot returned within the horizon; nothing to exclude.
    NoCandidate,
}

impl ExclusionMargin {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Margin(m) => Some(*m),
            Self::NoCandidate => None,
        }
    }

    /// Ordering value with `NoCandidate` as `+∞`.
    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicReport {
    pub margin: ExclusionMargin,
    pub excursions: Vec<Excursion>,
    pub shots: usize,
}

/// Index range of the first return to the neighbourhood after leaving it,
/// ending at the closest approach of that visit.
fn first_return(dist: &[f64], radius: f64) -> Option<usize> {
    let left = dist.iter().position(|&d| d > radius)?;
    let back = left + dist[left..].iter().position(|&d| d <= radius)?;
    let mut best = back;
    for k in back + 1..dist.len() {
        if dist[k] > radius {
            break;
        }
        if dist[k] < dist[best] {
            best = k;
        }
    }
    Some(best)
}

/// Shoots a fan of extremals off the orbit through the origin and, for each
/// that returns near the orbit, measures how far it is from calibrating `sol`.
pub fn homoclinic_exclusion_check(
    spec_plus_g: &LagrangianSpec,
    orbit: &RationalOrbit,
    sol: &WeakKamSolution,
) -> Result<HomoclinicReport> {
    let (a, b) = (orbit.a, orbit.b);
    let len = ((a * a + b * b) as f64).sqrt();
    let normal = [b as f64 / len, -a as f64 / len];
    let [p, q] = orbit.velocity();
    let cell = sol.grid().spacing();
    let radius = NEIGHBOURHOOD_CELLS * cell;
    let mut excursions = Vec::new();
    let mut shots = 0;
    for &k in &FAN_OFFSETS {
        for &s in &FAN_SPEEDS {
            shots += 1;
            let s0 = PhaseState::new(
                k * cell * normal[0],
                k * cell * normal[1],
                p + s * normal[0],
                q + s * normal[1],
            );
            let tr = integrate_el(spec_plus_g, s0, FAN_HORIZON, FAN_DT)?;
            let dist: Vec<f64> = tr.states.iter().map(|st| distance_to_orbit(a, b, st.x, st.y)).collect();
            if let Some(end) = first_return(&dist, radius) {
                excursions.push(Excursion {
                    offset_cells: k,
                    speed: s,
                    return_time: end as f64 * tr.dt,
                    return_distance: dist[end],
                    margin: sol.calibration_gap(spec_plus_g, &tr, 0, end),
                });
            }
        }
    }
    let margin = excursions
        .iter()
        .map(|e| e.margin)
        .min_by(f64::total_cmp)
        .map_or(ExclusionMargin::NoCandidate, ExclusionMargin::Margin);
    Ok(HomoclinicReport { margin, excursions, shots })
}
