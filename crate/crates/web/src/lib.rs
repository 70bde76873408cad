//! Browser bindings. Every entry point returns a JSON string for the page
//! to parse, or an error message.

use serde_json::{json, Value};
use torus_mather::averaging::orbit_average_fourier;
use torus_mather::diophantine::{certified_c0_with_bmax, convergents_up_to, scaled_distance};
use torus_mather::dynamics::{monodromy, penalty_potential, PenaltyConfig};
use torus_mather::measures::{class_gap, optimal_orbit};
use torus_mather::potential_file::{parse_potential, Symmetry};
use torus_mather::{
    necessary_condition, DirectionSpec, FourierPotential, LagrangianSpec, QuadraticIrrational,
};
use wasm_bindgen::prelude::*;

fn direction(r: &str) -> Result<DirectionSpec, String> {
    QuadraticIrrational::parse(r).map(DirectionSpec::new).map_err(|e| e.to_string())
}

fn potential(doc: &str) -> Result<FourierPotential, String> {
    if doc.trim().is_empty() {
        return Ok(FourierPotential::zero());
    }
    parse_potential(doc, Symmetry::Symmetrize).map(|p| p.potential).map_err(|e| e.to_string())
}

/// Orbit average of the potential over one period in `λ`, with its four
/// derivatives and the verdict of the necessary condition.
///
/// `potential` is a JSON document `{"modes": [{"m", "n", "re", "im"}]}`;
/// empty means zero.
#[wasm_bindgen]
pub fn orbit_average(potential_json: &str, r: &str, a: i32, b: i32, samples: u32) -> Result<String, String> {
    let dir = direction(r)?;
    let f = potential(potential_json)?;
    let (a, b) = (a as i64, b as i64);
    let orbit = optimal_orbit(&dir, a, b).map_err(|e| e.to_string())?;
    let avg = orbit_average_fourier(&f, &orbit);
    let cert = necessary_condition(&LagrangianSpec::new(dir, f), &orbit).map_err(|e| e.to_string())?;
    let n = samples.clamp(16, 4096) as usize;
    let period = 1.0 / a.unsigned_abs().max(1) as f64;
    let lambda: Vec<f64> = (0..=n).map(|i| period * i as f64 / n as f64).collect();
    let curve: Vec<Vec<f64>> = (0..=4).map(|k| lambda.iter().map(|&l| avg.eval_derivative(k, l)).collect()).collect();
    Ok(json!({
        "lambda": lambda,
        "F": curve[0],
        "derivatives": &curve[1..],
        "mean": avg.mean(),
        "gap": cert.gap,
        "required_gap": cert.required_gap,
        "margin": cert.margin,
        "c4_bound": cert.c4_bound,
        "period": orbit.period,
        "verdict": cert.verdict,
    })
    .to_string())
}

/// Floquet multipliers of the orbit under the penalty `λ κ (1 − cos 2π(bx − ay))`.
#[wasm_bindgen]
pub fn floquet(r: &str, a: i32, b: i32, lambda: f64) -> Result<String, String> {
    let dir = direction(r)?;
    let (a, b) = (a as i64, b as i64);
    let orbit = optimal_orbit(&dir, a, b).map_err(|e| e.to_string())?;
    let pen = penalty_potential(PenaltyConfig { a, b, strength: lambda, kappa: 0.0 }).map_err(|e| e.to_string())?;
    let m = monodromy(&LagrangianSpec::new(dir, pen.scaled()), &orbit).map_err(|e| e.to_string())?;
    let omega = std::f64::consts::TAU * (lambda * pen.kappa * (a * a + b * b) as f64).sqrt();
    let multipliers: Vec<Value> = m.multipliers.iter().map(|z| json!({"re": z.re, "im": z.im})).collect();
    Ok(json!({
        "period": orbit.period,
        "kappa": pen.kappa,
        "omega": omega,
        "expected": [(-omega * orbit.period).exp(), 1.0, 1.0, (omega * orbit.period).exp()],
        "multipliers": multipliers,
        "determinant": m.determinant(),
    })
    .to_string())
}

/// Convergents of the slope with their scaled distances and gaps, and the
/// certified constant.
#[wasm_bindgen]
pub fn diophantine(r: &str, bmax: i32) -> Result<String, String> {
    let q = QuadraticIrrational::parse(r).map_err(|e| e.to_string())?;
    let dir = DirectionSpec::new(q);
    let bmax = (bmax as i64).clamp(1, 100_000);
    let cert = certified_c0_with_bmax(&q, bmax);
    let rows: Vec<Value> = convergents_up_to(&q, bmax)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(a, b)| {
            let gap = class_gap(&dir, a, b).map(|g| g.exact).ok();
            json!({"a": a, "b": b, "scaled_distance": scaled_distance(&q, a, b), "gap": gap})
        })
        .collect();
    Ok(json!({
        "r": q.value(),
        "c0": cert.c0,
        "c0_empirical": cert.c0_empirical,
        "convergents": rows,
    })
    .to_string())
}
