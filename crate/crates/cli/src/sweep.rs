//! The obstruction checked over a seeded corpus of small random potentials.
//!
//! For each orbit the certified C⁴ threshold is `required_gap · |a|⁴`: below
//! it the necessary condition cannot hold, so every verdict must be
//! "violated". A compatible verdict raises the alarm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use torus_mather::measures::{class_gap, optimal_orbit};
use torus_mather::torus::{c4_multi_indices, coefficient_bound};
use torus_mather::{necessary_condition, FourierPotential, LagrangianSpec, Verdict};

use crate::commands::RunConfig;

/// Largest `Σ |c| |2πm|^i |2πn|^j` over orders `i + j ≤ 4`, an upper bound on
/// the C⁴ norm.
pub fn c4_upper_bound(f: &FourierPotential) -> f64 {
    c4_multi_indices().map(|(i, j)| coefficient_bound(f, i, j)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestItem {
    /// C⁴ bound of `−ε cos 2π(bx − ay)` with `ε` just above the required gap.
    pub c4: f64,
    /// Whether it fits under the scaled threshold and was checked.
    pub admitted: bool,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub a: i64,
    pub b: i64,
    pub period: f64,
    pub required_gap: f64,
    /// `required_gap · |a|⁴`.
    pub certified_threshold: f64,
    /// The threshold the corpus was rescaled under.
    pub threshold: f64,
    pub potentials: usize,
    pub violated: usize,
    pub compatible: usize,
    /// Largest `gap − required_gap` over the corpus (negative when all violate).
    pub worst_margin: Option<f64>,
    pub largest_c4: Option<f64>,
    pub self_test: Option<SelfTestItem>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub command: &'static str,
    pub r: String,
    pub seed: u64,
    pub count: usize,
    pub threshold_scale: f64,
    pub rows: Vec<SweepRow>,
    pub alarm: bool,
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>10} {:>12} {:>12} {:>6} {:>9} {:>11} {:>13}\n",
            "orbit", "required", "threshold", "n", "violated", "compatible", "worst margin"
        );
        for r in &self.rows {
            let worst = r.worst_margin.map_or("-".to_string(), |m| format!("{m:.6e}"));
            out.push_str(&format!(
                "{:>10} {:>12.6e} {:>12.6e} {:>6} {:>9} {:>11} {:>13}\n",
                format!("({},{})", r.a, r.b),
                r.required_gap,
                r.threshold,
                r.potentials,
                r.violated,
                r.compatible,
                worst
            ));
        }
        out.push_str(if self.alarm { "ALARM: compatible verdict below threshold\n" } else { "all verdicts violated\n" });
        out
    }
}

/// Seeded corpus: each potential paired with the fraction of the threshold
/// it will be rescaled to.
fn corpus(seed: u64, count: usize) -> Vec<(FourierPotential, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let f = FourierPotential::random(&mut rng, 3, 1.0);
            let fraction = rng.gen_range(0.05..0.95);
            (f, fraction)
        })
        .collect()
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport, String> {
    let dir = cfg.direction();
    let base = corpus(cfg.seed, cfg.count);
    let mut rows = Vec::new();
    for &(a, b) in &cfg.orbits {
        let orbit = optimal_orbit(&dir, a, b).map_err(|e| e.to_string())?;
        let required = class_gap(&dir, a, b).map_err(|e| e.to_string())?.exact;
        let certified = required * (a.unsigned_abs() as f64).powi(4);
        let threshold = certified * cfg.threshold_scale;

        let results: Vec<(f64, f64, Verdict)> = base
            .par_iter()
            .map(|(f, fraction)| {
                let bound = c4_upper_bound(f);
                let scaled = if bound > 0.0 { f.scaled(fraction * threshold / bound) } else { f.clone() };
                let cert = necessary_condition(&LagrangianSpec::new(dir, scaled.clone()), &orbit)
                    .expect("orbit validated above");
                (c4_upper_bound(&scaled), cert.margin, cert.verdict)
            })
            .collect();

        let self_test = cfg.self_test.then(|| {
            let eps = required * (1.0 + 1e-3);
            let f = FourierPotential::cosine(b as i32, -(a as i32), -eps);
            let c4 = eps * (TAU * a.abs().max(b.abs()) as f64).powi(4);
            let admitted = c4 <= threshold;
            let verdict = admitted.then(|| {
                necessary_condition(&LagrangianSpec::new(dir, f), &orbit).expect("orbit validated above").verdict
            });
            SelfTestItem { c4, admitted, verdict }
        });

        if results.is_empty() && self_test.as_ref().is_none_or(|s| !s.admitted) {
            continue;
        }
        let compatible = results.iter().filter(|r| r.2 == Verdict::Compatible).count()
            + usize::from(self_test.as_ref().and_then(|s| s.verdict) == Some(Verdict::Compatible));
        rows.push(SweepRow {
            a,
            b,
            period: orbit.period,
            required_gap: required,
            certified_threshold: certified,
            threshold,
            potentials: results.len(),
            violated: results.iter().filter(|r| r.2 == Verdict::Violated).count(),
            compatible,
            worst_margin: results.iter().map(|r| r.1).max_by(f64::total_cmp),
            largest_c4: results.iter().map(|r| r.0).max_by(f64::total_cmp),
            self_test,
        });
    }
    let alarm = rows.iter().any(|r| r.compatible > 0);
    Ok(SweepReport {
        command: "sweep",
        r: cfg.r.to_string(),
        seed: cfg.seed,
        count: cfg.count,
        threshold_scale: cfg.threshold_scale,
        rows,
        alarm,
    })
}
