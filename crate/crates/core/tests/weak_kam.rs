mod common;

use rand::Rng;
use torus_mather::dynamics::{
    distance_to_orbit, integrate_el, monodromy, penalty_potential, PenaltyConfig, PhaseState,
};
use torus_mather::measures::optimal_orbit;
use torus_mather::weak_kam::{aubry_estimate, homoclinic_exclusion_check, lax_oleinik_solve, LaxOleinikConfig};
use torus_mather::{DirectionSpec, FourierPotential, LagrangianSpec};

fn penalized(lambda: f64) -> LagrangianSpec {
    let pen = penalty_potential(PenaltyConfig { a: 3, b: 2, strength: lambda, kappa: 0.0 }).unwrap();
    LagrangianSpec::new(DirectionSpec::sqrt2(), pen.scaled())
}

fn specs() -> Vec<LagrangianSpec> {
    let dir = DirectionSpec::sqrt2();
    vec![
        LagrangianSpec::unperturbed(dir),
        LagrangianSpec::new(dir, FourierPotential::cosine(1, 1, 0.02)),
        penalized(1.0),
    ]
}

#[test]
fn weak_kam_inequality_along_random_trajectories() {
    let mut rng = common::rng(31);
    for spec in specs() {
        let sol = lax_oleinik_solve(&spec, LaxOleinikConfig::new(32, 0.1, 1e-7, 5000)).unwrap();
        let slack = sol.audit_slack();
        for _ in 0..100 {
            let s0 = PhaseState::new(rng.gen(), rng.gen(), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let horizon = rng.gen_range(0.5..5.0);
            let tr = integrate_el(&spec, s0, horizon, 0.01).unwrap();
            let gap = sol.calibration_gap(&spec, &tr, 0, tr.states.len() - 1);
            assert!(gap >= -slack, "gap {gap}");
        }
    }
}

#[test]
fn drift_sequence_settles_monotonically() {
    for spec in specs() {
        let tol = 1e-7;
        let sol = lax_oleinik_solve(&spec, LaxOleinikConfig::new(32, 0.1, tol, 5000)).unwrap();
        let d = &sol.drift_history;
        // after the first few steps, increments keep one sign up to tol
        let inc: Vec<f64> = d.windows(2).map(|w| w[1] - w[0]).collect();
        let tail = &inc[inc.len() / 2..];
        let up = tail.iter().all(|&x| x >= -tol);
        let down = tail.iter().all(|&x| x <= tol);
        assert!(up || down, "{tail:?}");
        assert!(sol.alpha_bracket[0] <= sol.alpha + 1e-12 && sol.alpha <= sol.alpha_bracket[1] + 1e-12);
    }
}

#[test]
fn aubry_estimate_is_monotone_in_tolerance() {
    let spec = penalized(1.0);
    let sol = lax_oleinik_solve(&spec, LaxOleinikConfig::new(32, 0.1, 1e-7, 5000)).unwrap();
    let loose = aubry_estimate(&spec, &sol, 1e-3).unwrap();
    let mut prev = loose.with_tol(0.0);
    for tol in [1e-5, 1e-4, 1e-3, 1e-2] {
        let next = loose.with_tol(tol);
        assert!(prev.mask.iter().zip(&next.mask).all(|(a, b)| !a || *b));
        prev = next;
    }
    let direct = aubry_estimate(&spec, &sol, 0.0).unwrap();
    assert!(direct.mask.iter().zip(&loose.mask).all(|(a, b)| !a || *b));
    assert!(direct.count() > 0);
}

#[test]
fn aubry_estimate_for_free_and_penalized_lagrangians() {
    let free = LagrangianSpec::unperturbed(DirectionSpec::sqrt2());
    let sol = lax_oleinik_solve(&free, LaxOleinikConfig::new(64, 0.1, 1e-6, 1000)).unwrap();
    assert_eq!(aubry_estimate(&free, &sol, 1e-3).unwrap().count(), 64 * 64);

    let spec = penalized(1.0);
    let sol = lax_oleinik_solve(&spec, LaxOleinikConfig::new(64, 0.1, 1e-6, 5000)).unwrap();
    let set = aubry_estimate(&spec, &sol, 1e-3).unwrap();
    assert!(set.count() > 0 && set.count() < 64 * 64 / 2);
    let cell = 1.0 / 64.0;
    for [x, y] in set.points() {
        assert!(distance_to_orbit(3, 2, x, y) <= 3.0 * cell, "({x},{y})");
    }
}

#[test]
fn homoclinic_margins_grow_with_penalty() {
    let dir = DirectionSpec::sqrt2();
    let orbit = optimal_orbit(&dir, 3, 2).unwrap();
    let mut margins = vec![];
    for lambda in [0.1, 1.0, 10.0] {
        let spec = penalized(lambda);
        let sol = lax_oleinik_solve(&spec, LaxOleinikConfig::new(64, 0.1, 1e-6, 5000)).unwrap();
        let report = homoclinic_exclusion_check(&spec, &orbit, &sol).unwrap();
        assert_eq!(report.shots, 24);
        margins.push(report.margin.value().expect("some shot returns"));
    }
    assert!(margins.iter().all(|&m| m > 0.0), "{margins:?}");
    assert!(margins.windows(2).all(|w| w[0] <= w[1]), "{margins:?}");

    // no penalty, no potential: every excursion is close to calibrated
    let free = LagrangianSpec::unperturbed(dir);
    let sol = lax_oleinik_solve(&free, LaxOleinikConfig::new(64, 0.1, 1e-6, 100)).unwrap();
    let m = homoclinic_exclusion_check(&free, &orbit, &sol).unwrap().margin.value().unwrap();
    assert!(m.abs() <= sol.audit_slack());
}

#[test]
fn energy_error_is_second_order() {
    let spec = LagrangianSpec::new(DirectionSpec::sqrt2(), FourierPotential::cosine(1, 0, 0.05));
    let s0 = PhaseState::new(0.1, 0.2, 0.3, 0.7);
    let coarse = integrate_el(&spec, s0, 100.0, 0.04).unwrap();
    let fine = integrate_el(&spec, s0, 100.0, 0.01).unwrap();
    assert!(coarse.max_energy_drift() >= 3.5 * fine.max_energy_drift());
    assert!(fine.energy_constant() <= 10.0);
}

#[test]
fn monodromy_is_symplectic_with_reciprocal_pairs() {
    let dir = DirectionSpec::sqrt2();
    for lambda in [0.1, 1.0, 4.0] {
        for (a, b) in [(1, 1), (3, 2)] {
            let orbit = optimal_orbit(&dir, a, b).unwrap();
            let pen = penalty_potential(PenaltyConfig { a, b, strength: lambda, kappa: 0.0 }).unwrap();
            let m = monodromy(&LagrangianSpec::new(dir, pen.scaled()), &orbit).unwrap();
            assert!((m.determinant() - 1.0).abs() <= 1e-9);
            let mu = &m.multipliers;
            assert!((mu[0] * mu[3] - 1.0).norm() <= 1e-6);
            assert!((mu[1] * mu[2] - 1.0).norm() <= 1e-6);
            assert!(m.is_hyperbolic(1e-3));
        }
    }
}
