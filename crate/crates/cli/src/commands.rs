use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use torus_mather::averaging::{mean_identity_check, orbit_average_fourier};
use torus_mather::diophantine::{certified_c0, certified_c0_with_bmax, convergents_up_to, gap_bound_for_class, scaled_distance};
use torus_mather::dynamics::{monodromy, penalty_potential, PenaltyConfig};
use torus_mather::measures::{mather_lp, optimal_orbit, LpGrid};
use torus_mather::weak_kam::{aubry_estimate, homoclinic_exclusion_check, lax_oleinik_solve, LaxOleinikConfig};
use torus_mather::{
    average_gap, derivative_sup, necessary_condition, DirectionSpec, Error, FourierPotential, LagrangianSpec,
    QuadraticIrrational, RationalOrbit, Verdict,
};

use crate::output::{cell, render_table, to_json, write_csv, Emit, PotentialSource};
use crate::{Cli, Command, PotentialArgs, SolverArgs};

/// What a command produced: exit code, stdout text and an optional message
/// for stderr.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn invalid(msg: impl Into<String>) -> Self {
        Self { code: 2, stdout: String::new(), diagnostic: Some(msg.into()) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Verify,
    Sweep,
    Fbar,
    Diophantine,
    MatherLp,
    WeakKam,
    Floquet,
    Aubry,
    Homoclinic,
}

/// A fully validated command line. Fields a command does not use keep their
/// defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub potential: Option<PathBuf>,
    pub symmetrize: bool,
    pub r: QuadraticIrrational,
    pub orbit: (i64, i64),
    pub period: Option<f64>,
    pub orbits: Vec<(i64, i64)>,
    pub samples: usize,
    pub bmax: i64,
    pub lp_grid: LpGrid,
    pub test_modes: i32,
    pub grid: usize,
    pub step: f64,
    pub solver_tol: f64,
    pub max_iters: usize,
    pub aubry_tol: f64,
    pub penalty: Option<(i64, i64)>,
    pub lambda: f64,
    pub kappa: f64,
    pub seed: u64,
    pub count: usize,
    pub threshold_scale: f64,
    pub self_test: bool,
    pub emit: Emit,
    pub out_dir: PathBuf,
}

impl RunConfig {
    fn defaults(command: CommandKind, emit: Emit, out_dir: PathBuf) -> Self {
        Self {
            command,
            potential: None,
            symmetrize: false,
            r: QuadraticIrrational::sqrt(2).expect("2 is not a square"),
            orbit: (3, 2),
            period: None,
            orbits: vec![],
            samples: 256,
            bmax: 200,
            lp_grid: LpGrid::default(),
            test_modes: 3,
            grid: 64,
            step: 0.1,
            solver_tol: 1e-6,
            max_iters: 20_000,
            aubry_tol: 1e-3,
            penalty: None,
            lambda: 1.0,
            kappa: 0.0,
            seed: 42,
            count: 50,
            threshold_scale: 1.0,
            self_test: false,
            emit,
            out_dir,
        }
    }

    pub fn direction(&self) -> DirectionSpec {
        DirectionSpec::new(self.r)
    }

    /// Validates a parsed command line against the preconditions of the
    /// library calls it will make.
    pub fn from_cli(cli: &Cli) -> Result<Self, String> {
        let emit = Emit::parse(&cli.emit)?;
        let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let kind = match &cli.command {
            Command::Verify(_) => CommandKind::Verify,
            Command::Sweep(_) => CommandKind::Sweep,
            Command::Fbar(_) => CommandKind::Fbar,
            Command::Diophantine(_) => CommandKind::Diophantine,
            Command::MatherLp(_) => CommandKind::MatherLp,
            Command::WeakKam(_) => CommandKind::WeakKam,
            Command::Floquet(_) => CommandKind::Floquet,
            Command::Aubry(_) => CommandKind::Aubry,
            Command::Homoclinic(_) => CommandKind::Homoclinic,
        };
        let mut c = Self::defaults(kind, emit, out_dir);
        match &cli.command {
            Command::Verify(a) => {
                c.set_potential(&a.potential)?;
                c.orbit = parse_orbit(&a.orbit)?;
                if let Some(t) = a.period {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(format!("period must be positive, got {t}"));
                    }
                }
                c.period = a.period;
            }
            Command::Sweep(a) => {
                c.r = parse_r(&a.r)?;
                c.seed = a.seed;
                c.count = a.count;
                c.bmax = positive_i64("bmax", a.bmax)?;
                if !(a.threshold_scale > 0.0 && a.threshold_scale.is_finite()) {
                    return Err("threshold scale must be positive".into());
                }
                c.threshold_scale = a.threshold_scale;
                c.self_test = a.self_test;
                c.orbits = match &a.orbits {
                    Some(s) => s.split(';').filter(|p| !p.trim().is_empty()).map(parse_orbit).collect::<Result<_, _>>()?,
                    None => convergents_up_to(&c.r, c.bmax).map_err(|e| e.to_string())?,
                };
            }
            Command::Fbar(a) => {
                c.set_potential(&a.potential)?;
                c.orbit = parse_orbit(&a.orbit)?;
                if a.samples < 2 {
                    return Err("need at least 2 samples".into());
                }
                c.samples = a.samples;
            }
            Command::Diophantine(a) => {
                c.r = parse_r(&a.r)?;
                c.bmax = positive_i64("bmax", a.bmax)?;
            }
            Command::MatherLp(a) => {
                let file: LpFile = match &a.config {
                    Some(p) => {
                        let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
                    }
                    None => LpFile::default(),
                };
                let base = LpGrid::default();
                c.lp_grid = LpGrid {
                    nx: a.nx.or(file.nx).unwrap_or(base.nx),
                    ny: a.ny.or(file.ny).unwrap_or(base.ny),
                    nv: a.nv.or(file.nv).unwrap_or(base.nv),
                    v_max: a.v_max.or(file.v_max).unwrap_or(base.v_max),
                };
                c.test_modes = a.test_modes.or(file.test_modes).unwrap_or(3);
                c.potential = a.potential.clone().or(file.potential);
                if let Some(r) = &file.r {
                    c.r = parse_r(r)?;
                }
                let g = c.lp_grid;
                if g.nx < 8 || g.ny < 8 || g.nv < 2 || !(g.v_max > 0.0) {
                    return Err("LP grid needs nx, ny ≥ 8, nv ≥ 2 and a positive velocity box".into());
                }
                if c.test_modes < 0 || 2 * c.test_modes as usize >= g.nx.min(g.ny) {
                    return Err(format!("test mode bound {} aliases on the position grid", c.test_modes));
                }
            }
            Command::WeakKam(a) => {
                c.set_potential(&a.potential)?;
                c.set_solver(&SolverArgs {
                    grid: a.grid,
                    step: a.step,
                    solver_tol: a.tol,
                    max_iters: a.max_iters,
                    penalty: a.penalty.clone(),
                    lambda: a.lambda,
                    kappa: a.kappa,
                })?;
            }
            Command::Floquet(a) => {
                c.set_potential(&a.potential)?;
                c.orbit = parse_orbit(&a.orbit)?;
                c.set_penalty_strength(a.lambda, a.kappa)?;
            }
            Command::Aubry(a) => {
                c.set_potential(&a.potential)?;
                c.set_solver(&a.solver)?;
                if !(a.tol >= 0.0) {
                    return Err("tolerance must be nonnegative".into());
                }
                c.aubry_tol = a.tol;
            }
            Command::Homoclinic(a) => {
                c.set_potential(&a.potential)?;
                c.set_solver(&a.solver)?;
                c.orbit = parse_orbit(&a.orbit)?;
                if c.penalty.is_none() {
                    c.penalty = Some(c.orbit);
                }
            }
        }
        Ok(c)
    }

    fn set_potential(&mut self, p: &PotentialArgs) -> Result<(), String> {
        self.potential = p.potential.clone();
        self.symmetrize = p.symmetrize;
        self.r = parse_r(&p.r)?;
        Ok(())
    }

    fn set_penalty_strength(&mut self, lambda: f64, kappa: f64) -> Result<(), String> {
        if !(lambda >= 0.0 && lambda.is_finite()) || !(kappa >= 0.0 && kappa.is_finite()) {
            return Err("penalty strength and amplitude must be nonnegative".into());
        }
        self.lambda = lambda;
        self.kappa = kappa;
        Ok(())
    }

    fn set_solver(&mut self, s: &SolverArgs) -> Result<(), String> {
        if s.grid < 16 {
            return Err(format!("grid {} is smaller than 16", s.grid));
        }
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err("step must be positive".into());
        }
        if !(s.solver_tol > 0.0) || s.max_iters == 0 {
            return Err("need a positive solver tolerance and at least one iteration".into());
        }
        self.grid = s.grid;
        self.step = s.step;
        self.solver_tol = s.solver_tol;
        self.max_iters = s.max_iters;
        self.penalty = s.penalty.as_deref().map(parse_orbit).transpose()?;
        self.set_penalty_strength(s.lambda, s.kappa)
    }

    fn load_potential(&self) -> Result<PotentialSource, String> {
        PotentialSource::load(self.potential.as_deref(), self.symmetrize)
    }

    fn solver_config(&self) -> LaxOleinikConfig {
        LaxOleinikConfig::new(self.grid, self.step, self.solver_tol, self.max_iters)
    }

    /// The potential, plus `λ g` when a penalty orbit is configured.
    fn penalized(&self, f: &FourierPotential) -> Result<(FourierPotential, Option<Value>), String> {
        let Some((a, b)) = self.penalty else {
            return Ok((f.clone(), None));
        };
        let pen = penalty_potential(PenaltyConfig { a, b, strength: self.lambda, kappa: self.kappa })
            .map_err(|e| e.to_string())?;
        let info = json!({
            "a": a, "b": b, "lambda": self.lambda,
            "kappa": pen.kappa, "kappa_min": pen.kappa_min, "kappa_raised": pen.raised,
        });
        Ok((f + &pen.scaled(), Some(info)))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    nx: Option<usize>,
    ny: Option<usize>,
    nv: Option<usize>,
    v_max: Option<f64>,
    test_modes: Option<i32>,
    potential: Option<PathBuf>,
    r: Option<String>,
}

fn parse_orbit(s: &str) -> Result<(i64, i64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || format!("orbit must look like 'a,b', got '{s}'");
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].parse().map_err(|_| bad())?;
    let b = parts[1].parse().map_err(|_| bad())?;
    RationalOrbit::new(a, b, 1.0).map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_r(s: &str) -> Result<QuadraticIrrational, String> {
    QuadraticIrrational::parse(s).map_err(|e| e.to_string())
}

fn positive_i64(name: &str, v: i64) -> Result<i64, String> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(format!("{name} must be at least 1"))
    }
}

fn lib_err(e: Error) -> String {
    e.to_string()
}

pub(crate) fn dispatch(cli: &Cli) -> Outcome {
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(msg) => return Outcome::invalid(msg),
    };
    let result = match cfg.command {
        CommandKind::Verify => return run_verify_example(&cfg),
        CommandKind::Sweep => sweep(&cfg),
        CommandKind::Fbar => fbar(&cfg),
        CommandKind::Diophantine => diophantine(&cfg),
        CommandKind::MatherLp => mather(&cfg),
        CommandKind::WeakKam => weak_kam(&cfg),
        CommandKind::Floquet => floquet(&cfg),
        CommandKind::Aubry => aubry(&cfg),
        CommandKind::Homoclinic => homoclinic(&cfg),
    };
    result.unwrap_or_else(Outcome::invalid)
}

/// Renders a report in the requested form; CSV data goes to a file.
fn finish(cfg: &RunConfig, code: i32, mut report: Value, csv: Option<(&str, Vec<&str>, Vec<Vec<String>>)>) -> Result<Outcome, String> {
    if let Some((name, header, rows)) = csv {
        if let Some(path) = cfg.emit.csv_path(&cfg.out_dir, name) {
            write_csv(&path, &header, rows)?;
            report["csv"] = json!(path.display().to_string());
        }
    }
    let stdout = match cfg.emit {
        Emit::Table => render_table(&report),
        _ => to_json(&report),
    };
    Ok(Outcome { code, stdout, diagnostic: None })
}

/// The full obstruction chain for one orbit: convergents, certified `C₀`,
/// the orbit average and its gap, the necessary condition, the derivative
/// cascade and the C⁴ bound. Exit 0 when compatible, 1 when violated, 2 on
/// invalid input.
pub fn run_verify_example(cfg: &RunConfig) -> Outcome {
    verify(cfg).unwrap_or_else(Outcome::invalid)
}

fn verify(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let dir = cfg.direction();
    let (a, b) = cfg.orbit;
    let orbit = match cfg.period {
        Some(t) => RationalOrbit::new(a, b, t).map_err(lib_err)?,
        None => optimal_orbit(&dir, a, b).map_err(lib_err)?,
    };
    let spec = LagrangianSpec::new(dir, src.potential.clone());
    let cert = necessary_condition(&spec, &orbit).map_err(lib_err)?;
    let dio = certified_c0(&cfg.r);
    let convergents = convergents_up_to(&cfg.r, b.abs().max(1)).map_err(lib_err)?;
    let avg = orbit_average_fourier(&src.potential, &orbit);
    let sups: Vec<f64> = (1..=4).map(|k| derivative_sup(&avg, k).grid_sup).collect();
    let cascade_margins: Vec<f64> = sups.iter().zip(&cert.cascade).map(|(s, c)| s - c).collect();
    let code = if cert.verdict == Verdict::Compatible { 0 } else { 1 };
    let report = json!({
        "command": "verify",
        "potential": src,
        "direction": dir,
        "orbit": {"a": a, "b": b, "period": orbit.period, "velocity": orbit.velocity()},
        "convergents": convergents,
        "diophantine": dio,
        "average": {
            "mean": avg.mean(),
            "at_zero": avg.eval(0.0),
            "gap": average_gap(&avg),
            "mean_identity_error": mean_identity_check(&avg, &src.potential),
            "derivative_sups": sups,
            "cascade_margins": cascade_margins,
        },
        "certificate": cert,
        "verdict": cert.verdict,
    });
    finish(cfg, code, report, None)
}

fn sweep(cfg: &RunConfig) -> Result<Outcome, String> {
    let report = crate::sweep::run_sweep(cfg)?;
    let code = if report.alarm { 1 } else { 0 };
    let value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.a.to_string(),
                r.b.to_string(),
                cell(r.required_gap),
                cell(r.threshold),
                r.potentials.to_string(),
                r.violated.to_string(),
                r.compatible.to_string(),
                r.worst_margin.map_or(String::new(), cell),
            ]
        })
        .collect();
    if cfg.emit == Emit::Table {
        return Ok(Outcome { code, stdout: report.table(), diagnostic: None });
    }
    let header = vec!["a", "b", "required_gap", "threshold", "potentials", "violated", "compatible", "worst_margin"];
    finish(cfg, code, value, Some(("sweep.csv", header, rows)))
}

fn fbar(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let dir = cfg.direction();
    let orbit = optimal_orbit(&dir, cfg.orbit.0, cfg.orbit.1).map_err(lib_err)?;
    let avg = orbit_average_fourier(&src.potential, &orbit);
    let period = if orbit.a != 0 { 1.0 / orbit.a.unsigned_abs() as f64 } else { 1.0 };
    let rows: Vec<Vec<String>> = (0..cfg.samples)
        .map(|i| {
            let l = period * i as f64 / cfg.samples as f64;
            std::iter::once(cell(l)).chain((0..=4).map(|k| cell(avg.eval_derivative(k, l)))).collect()
        })
        .collect();
    let report = json!({
        "command": "fbar",
        "potential": src,
        "orbit": {"a": orbit.a, "b": orbit.b, "period": orbit.period},
        "lambda_period": period,
        "mean": avg.mean(),
        "at_zero": avg.eval(0.0),
        "gap": average_gap(&avg),
        "coefficients": avg.coeffs.iter().map(|(j, c)| json!({"j": j, "re": c.re, "im": c.im})).collect::<Vec<_>>(),
        "derivative_sups": (1..=4).map(|k| derivative_sup(&avg, k)).collect::<Vec<_>>(),
        "samples": cfg.samples,
    });
    let header = vec!["lambda", "F", "F1", "F2", "F3", "F4"];
    finish(cfg, 0, report, Some(("fbar.csv", header, rows)))
}

fn diophantine(cfg: &RunConfig) -> Result<Outcome, String> {
    let dir = cfg.direction();
    let cert = certified_c0_with_bmax(&cfg.r, cfg.bmax);
    let convergents = convergents_up_to(&cfg.r, cfg.bmax).map_err(lib_err)?;
    let mut table = Vec::new();
    for &(a, b) in &convergents {
        let gap = gap_bound_for_class(&dir, a, b, &cert).ok();
        table.push(json!({
            "a": a,
            "b": b,
            "scaled_distance": scaled_distance(&cfg.r, a, b),
            "certificate_holds": scaled_distance(&cfg.r, a, b) >= cert.c0,
            "exact_gap": gap.as_ref().map(|g| g.exact),
            "optimal_period": gap.as_ref().and_then(|g| g.optimal_period),
            "geometric_lower_bound": gap.as_ref().map(|g| g.geometric_lower_bound),
            "quartic_form": gap.as_ref().map(|g| g.quartic_form),
        }));
    }
    let rows = table
        .iter()
        .map(|t| {
            ["a", "b", "scaled_distance", "exact_gap", "optimal_period"]
                .iter()
                .map(|k| match &t[*k] {
                    Value::Null => String::new(),
                    v => v.to_string(),
                })
                .collect()
        })
        .collect();
    let report = json!({
        "command": "diophantine",
        "direction": dir,
        "certificate": cert,
        "convergents": table,
    });
    let header = vec!["a", "b", "scaled_distance", "exact_gap", "optimal_period"];
    finish(cfg, 0, report, Some(("convergents.csv", header, rows)))
}

fn mather(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let dir = cfg.direction();
    let spec = LagrangianSpec::new(dir, src.potential.clone());
    let r = mather_lp(&spec, cfg.lp_grid, cfg.test_modes).map_err(lib_err)?;
    let support: Vec<[f64; 5]> = r.measure.support(1e-12).collect();
    let rows = support.iter().map(|s| s.iter().map(|&v| cell(v)).collect()).collect();
    let report = json!({
        "command": "mather-lp",
        "potential": src,
        "grid": cfg.lp_grid,
        "test_modes": cfg.test_modes,
        "action": r.action,
        "rotation": r.rotation,
        "iterations": r.iterations,
        "total_mass": r.measure.total_mass(),
        "closedness_residual": r.measure.closedness_residual(cfg.test_modes),
        "support_size": support.len(),
        "drift": dir.drift(),
        "velocity_spacing": cfg.lp_grid.velocity_spacing(),
    });
    let header = vec!["x", "y", "u", "v", "weight"];
    finish(cfg, 0, report, Some(("measure.csv", header, rows)))
}

fn weak_kam(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let (f, penalty) = cfg.penalized(&src.potential)?;
    let spec = LagrangianSpec::new(cfg.direction(), f);
    let sol = lax_oleinik_solve(&spec, cfg.solver_config()).map_err(lib_err)?;
    let grid = sol.grid();
    let rows = (0..grid.len())
        .map(|k| {
            let [x, y] = grid.point(k);
            vec![(k % grid.nx).to_string(), (k / grid.nx).to_string(), cell(x), cell(y), cell(sol.u[k])]
        })
        .collect();
    let report = json!({
        "command": "weak-kam",
        "potential": src,
        "penalty": penalty,
        "grid": grid,
        "step": sol.step(),
        "tol": cfg.solver_tol,
        "alpha": sol.alpha,
        "alpha_bracket": sol.alpha_bracket,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "oscillation": sol.oscillation(),
    });
    let header = vec!["i", "j", "x", "y", "u"];
    finish(cfg, 0, report, Some(("weak_kam_u.csv", header, rows)))
}

fn floquet(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let dir = cfg.direction();
    let (a, b) = cfg.orbit;
    let orbit = optimal_orbit(&dir, a, b).map_err(lib_err)?;
    let pen = penalty_potential(PenaltyConfig { a, b, strength: cfg.lambda, kappa: cfg.kappa }).map_err(lib_err)?;
    let spec = LagrangianSpec::new(dir, &src.potential + &pen.scaled());
    let m = monodromy(&spec, &orbit).map_err(lib_err)?;
    let omega = std::f64::consts::TAU * (cfg.lambda * pen.kappa * (a * a + b * b) as f64).sqrt();
    let expected = [(-omega * orbit.period).exp(), 1.0, 1.0, (omega * orbit.period).exp()];
    let mult: Vec<Value> = m.multipliers.iter().map(|z| json!({"re": z.re, "im": z.im, "modulus": z.norm()})).collect();
    let matrix: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| m.matrix[(i, j)]).collect()).collect();
    let rows = m
        .multipliers
        .iter()
        .zip(expected)
        .map(|(z, e)| vec![cell(z.re), cell(z.im), cell(z.norm()), cell(e)])
        .collect();
    let report = json!({
        "command": "floquet",
        "potential": src,
        "orbit": {"a": a, "b": b, "period": orbit.period},
        "lambda": cfg.lambda,
        "kappa": pen.kappa,
        "kappa_min": pen.kappa_min,
        "kappa_raised": pen.raised,
        "omega": omega,
        "multipliers": mult,
        "expected_without_potential": expected,
        "determinant": m.determinant(),
        "closure_error": m.closure_error,
        "hyperbolic": m.is_hyperbolic(1e-6),
        "matrix": matrix,
    });
    let header = vec!["re", "im", "modulus", "expected"];
    finish(cfg, 0, report, Some(("multipliers.csv", header, rows)))
}

fn aubry(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let (f, penalty) = cfg.penalized(&src.potential)?;
    let spec = LagrangianSpec::new(cfg.direction(), f);
    let sol = lax_oleinik_solve(&spec, cfg.solver_config()).map_err(lib_err)?;
    let set = aubry_estimate(&spec, &sol, cfg.aubry_tol).map_err(lib_err)?;
    let grid = set.grid;
    let rows = (0..grid.len())
        .map(|k| {
            let [x, y] = grid.point(k);
            vec![
                (k % grid.nx).to_string(),
                (k / grid.nx).to_string(),
                cell(x),
                cell(y),
                u8::from(set.mask[k]).to_string(),
                cell(set.defect[k]),
            ]
        })
        .collect();
    let report = json!({
        "command": "aubry",
        "potential": src,
        "penalty": penalty,
        "grid": grid,
        "step": sol.step(),
        "tol": cfg.aubry_tol,
        "alpha": sol.alpha,
        "count": set.count(),
        "fraction": set.count() as f64 / grid.len() as f64,
    });
    let header = vec!["i", "j", "x", "y", "in_set", "defect"];
    finish(cfg, 0, report, Some(("aubry_mask.csv", header, rows)))
}

fn homoclinic(cfg: &RunConfig) -> Result<Outcome, String> {
    let src = cfg.load_potential()?;
    let dir = cfg.direction();
    let orbit = optimal_orbit(&dir, cfg.orbit.0, cfg.orbit.1).map_err(lib_err)?;
    let (f, penalty) = cfg.penalized(&src.potential)?;
    let spec = LagrangianSpec::new(dir, f);
    let sol = lax_oleinik_solve(&spec, cfg.solver_config()).map_err(lib_err)?;
    let rep = homoclinic_exclusion_check(&spec, &orbit, &sol).map_err(lib_err)?;
    let rows = rep
        .excursions
        .iter()
        .map(|e| vec![cell(e.offset_cells), cell(e.speed), cell(e.return_time), cell(e.return_distance), cell(e.margin)])
        .collect();
    let report = json!({
        "command": "homoclinic",
        "potential": src,
        "penalty": penalty,
        "orbit": {"a": orbit.a, "b": orbit.b, "period": orbit.period},
        "alpha": sol.alpha,
        "shots": rep.shots,
        "returns": rep.excursions.len(),
        "margin": rep.margin,
        "audit_slack": sol.audit_slack(),
    });
    let header = vec!["offset_cells", "speed", "return_time", "return_distance", "margin"];
    finish(cfg, 0, report, Some(("excursions.csv", header, rows)))
}
