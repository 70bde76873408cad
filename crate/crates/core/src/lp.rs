//! Dense revised simplex for `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
//!
//! Two phases with one artificial per row. The explicit basis inverse is
//! updated by elementary row operations and rebuilt from scratch every
//! [`REFACTOR_EVERY`] pivots. Entering variables are priced by most negative
//! reduced cost; after a run of degenerate pivots the solver switches to
//! Bland's rule until it makes progress again, which rules out cycling.

use crate::error::{Error, Result};

pub const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 32;
const PRICE_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

/// An equality-form linear program with a dense, column-major constraint matrix.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    rows: usize,
    cols: usize,
    /// column `j` occupies `a[j * rows .. (j + 1) * rows]`
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Simplex multipliers `y` with `cᵀ − yᵀA ≥ 0` at optimality.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// `columns[j]` is column `j` of `A` (length `b.len()`).
    pub fn new(columns: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let rows = b.len();
        let cols = c.len();
        if columns.len() != cols || columns.iter().any(|col| col.len() != rows) {
            return Err(Error::InvalidInput("constraint matrix has inconsistent shape".into()));
        }
        let a = columns.into_iter().flatten().collect();
        Ok(Self { rows, cols, a, b, c })
    }

    /// Builds from a column-major buffer.
    pub fn from_column_major(rows: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != rows || a.len() != rows * c.len() {
            return Err(Error::InvalidInput("constraint matrix has inconsistent shape".into()));
        }
        Ok(Self { rows, cols: c.len(), a, b, c })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `max_i |(Ax − b)_i|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.b.iter().map(|b| -b).collect();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (ri, aij) in r.iter_mut().zip(self.column(j)) {
                    *ri += aij * xj;
                }
            }
        }
        r.into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn solve(&self, max_iterations: usize) -> Result<LpSolution> {
        Simplex::new(self).run(max_iterations)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    /// row sign flips making `b ≥ 0`
    sign: Vec<f64>,
    b: Vec<f64>,
    /// basic variable per row; indices `≥ cols` are artificials
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// row-major `m × m`
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.rows;
        let sign: Vec<f64> = lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = lp.b.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; lp.cols + m];
        for flag in &mut is_basic[lp.cols..] {
            *flag = true;
        }
        Self {
            lp,
            xb: b.clone(),
            sign,
            b,
            basis: (lp.cols..lp.cols + m).collect(),
            is_basic,
            binv,
            iterations: 0,
        }
    }

    fn m(&self) -> usize {
        self.lp.rows
    }

    /// Column of the sign-adjusted matrix `[A | I]`.
    fn column_into(&self, j: usize, out: &mut [f64]) {
        if j < self.lp.cols {
            for ((o, a), s) in out.iter_mut().zip(self.lp.column(j)).zip(&self.sign) {
                *o = a * s;
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[j - self.lp.cols] = 1.0;
        }
    }

    fn cost(&self, j: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.lp.cols {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.lp.cols {
                    0.0
                } else {
                    self.lp.c[j]
                }
            }
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (r, &bv) in self.basis.iter().enumerate() {
            let cb = self.cost(bv, phase);
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, v) in y.iter_mut().zip(row) {
                    *yi += cb * v;
                }
            }
        }
        y
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m();
        // Gauss–Jordan on [B | I]
        let mut bmat = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.column_into(j, &mut col);
            for i in 0..m {
                bmat[i * m + r] = col[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&i, &j| bmat[i * m + k].abs().total_cmp(&bmat[j * m + k].abs()))
                .expect("nonempty range");
            if bmat[p * m + k].abs() < 1e-13 {
                return Err(Error::Internal("basis became singular".into()));
            }
            if p != k {
                for c in 0..m {
                    bmat.swap(p * m + c, k * m + c);
                    inv.swap(p * m + c, k * m + c);
                }
            }
            let piv = bmat[k * m + k];
            for c in 0..m {
                bmat[k * m + c] /= piv;
                inv[k * m + c] /= piv;
            }
            for i in 0..m {
                if i != k {
                    let f = bmat[i * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            bmat[i * m + c] -= f * bmat[k * m + c];
                            inv[i * m + c] -= f * inv[k * m + c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.b).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        }
        Ok(())
    }

    fn ftran(&self, col: &[f64], out: &mut [f64]) {
        let m = self.m();
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.binv[i * m..(i + 1) * m].iter().zip(col).map(|(a, b)| a * b).sum();
        }
    }

    fn pivot(&mut self, r: usize, entering: usize, alpha: &[f64]) {
        let m = self.m();
        let theta = self.xb[r] / alpha[r];
        for i in 0..m {
            if i != r {
                self.xb[i] = (self.xb[i] - theta * alpha[i]).max(0.0);
            }
        }
        self.xb[r] = theta;
        let piv = alpha[r];
        for c in 0..m {
            self.binv[r * m + c] /= piv;
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for (c, pv) in pivot_row.iter().enumerate() {
                    self.binv[i * m + c] -= f * pv;
                }
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[entering] = true;
        self.basis[r] = entering;
    }

    /// Runs the simplex loop for one phase; returns when optimal.
    fn optimize(&mut self, phase: Phase, max_iterations: usize) -> Result<()> {
        let m = self.m();
        let n_total = match phase {
            Phase::One => self.lp.cols + m,
            // artificials never re-enter
            Phase::Two => self.lp.cols,
        };
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= max_iterations {
                return Err(Error::Solver {
                    message: "simplex iteration limit reached".into(),
                    iterations: self.iterations,
                    history: vec![],
                });
            }
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                since_refactor = 0;
            }
            let y = self.duals(phase);
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let mut entering = None;
            let mut best = -PRICE_TOL;
            for j in 0..n_total {
                if self.is_basic[j] {
                    continue;
                }
                let d = if j < self.lp.cols {
                    let dot: f64 = self
                        .lp
                        .column(j)
                        .iter()
                        .zip(&self.sign)
                        .zip(&y)
                        .map(|((a, s), y)| a * s * y)
                        .sum();
                    self.cost(j, phase) - dot
                } else {
                    self.cost(j, phase) - y[j - self.lp.cols]
                };
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(());
            };
            self.column_into(q, &mut col);
            self.ftran(&col, &mut alpha);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if alpha[i] > PIVOT_TOL {
                    let ratio = self.xb[i] / alpha[i];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.max(1.0);
                            let better = if tie {
                                if bland {
                                    self.basis[i] < self.basis[r]
                                } else {
                                    alpha[i] > alpha[r]
                                }
                            } else {
                                ratio < best_ratio
                            };
                            if better {
                                Some((i, ratio))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, theta)) = leave else {
                return Err(Error::Internal("linear program is unbounded".into()));
            };
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &alpha);
            self.iterations += 1;
            since_refactor += 1;
        }
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn expel_artificials(&mut self) -> Result<()> {
        let m = self.m();
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        for r in 0..m {
            if self.basis[r] < self.lp.cols {
                continue;
            }
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let candidate = (0..self.lp.cols).filter(|&j| !self.is_basic[j]).find(|&j| {
                let v: f64 = self
                    .lp
                    .column(j)
                    .iter()
                    .zip(&self.sign)
                    .zip(&row)
                    .map(|((a, s), b)| a * s * b)
                    .sum();
                v.abs() > 1e-7
            });
            // no candidate: the row is redundant and the artificial stays at zero
            if let Some(j) = candidate {
                self.column_into(j, &mut col);
                self.ftran(&col, &mut alpha);
                self.xb[r] = 0.0;
                self.pivot(r, j, &alpha);
            }
        }
        self.refactor()
    }

    fn run(mut self, max_iterations: usize) -> Result<LpSolution> {
        self.optimize(Phase::One, max_iterations)?;
        self.refactor()?;
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= self.lp.cols)
            .map(|(_, &v)| v)
            .sum();
        let scale = self.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if infeasibility > FEAS_TOL * scale {
            return Err(Error::Internal(format!(
                "linear program is infeasible (phase-one residual {infeasibility:.3e})"
            )));
        }
        self.expel_artificials()?;
        self.optimize(Phase::Two, max_iterations)?;
        self.refactor()?;
        let mut x = vec![0.0; self.lp.cols];
        for (&j, &v) in self.basis.iter().zip(&self.xb) {
            if j < self.lp.cols {
                x[j] = v;
            }
        }
        let duals: Vec<f64> = self.duals(Phase::Two).iter().zip(&self.sign).map(|(y, s)| y * s).collect();
        Ok(LpSolution { objective: self.lp.objective(&x), x, duals, iterations: self.iterations })
    }
}
