mod common;

use rand::Rng;
use torus_mather::averaging::orbit_average_fourier;
use torus_mather::measures::{
    mather_lp, mather_lp_with_cost, mu0_action, optimal_orbit, orbit_action, LpGrid,
};
use torus_mather::{derivative_sup, necessary_condition, DirectionSpec, FourierPotential, LagrangianSpec, RationalOrbit};

fn random_coprime(rng: &mut impl Rng) -> (i64, i64) {
    loop {
        let (a, b) = (rng.gen_range(1..60i64), rng.gen_range(1..60i64));
        if torus_gcd(a, b) == 1 {
            return (a, b);
        }
    }
}

fn torus_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { torus_gcd(b, a % b) }
}

#[test]
fn free_action_gap_identity() {
    let dir = DirectionSpec::sqrt2();
    let spec = LagrangianSpec::unperturbed(dir);
    let mut rng = common::rng(21);
    for _ in 0..50 {
        let (a, b) = random_coprime(&mut rng);
        let orbit = optimal_orbit(&dir, a, b).unwrap();
        let [p, q] = orbit.velocity();
        let want = 0.5 * ((p - dir.p0).powi(2) + (q - dir.q0).powi(2));
        assert!((orbit_action(&spec, &orbit) + 0.5 - want).abs() <= 1e-12);
        assert!((mu0_action(&spec) + 0.5).abs() <= 1e-15);
    }
}

#[test]
fn compatible_certificates_are_backed_by_measured_fourth_derivative() {
    let dir = DirectionSpec::sqrt2();
    let mut seen = 0;
    for (i, f) in common::corpus(9, 60).into_iter().enumerate() {
        // large potentials so that some verdicts come out compatible
        let f = f.scaled(if i % 2 == 0 { 1e-2 } else { 1e-4 });
        for &(a, b) in &common::ORBITS {
            let orbit = optimal_orbit(&dir, a, b).unwrap();
            let cert = necessary_condition(&LagrangianSpec::new(dir, f.clone()), &orbit).unwrap();
            if cert.is_compatible() {
                seen += 1;
                let sup = derivative_sup(&orbit_average_fourier(&f, &orbit), 4).grid_sup;
                assert!(sup >= cert.c4_bound * (1.0 - 1e-9));
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn lp_is_below_explicit_closed_measures_and_monotone_in_constraints() {
    let dir = DirectionSpec::sqrt2();
    let grid = LpGrid { nx: 8, ny: 8, nv: 5, v_max: 1.5 };
    let f = FourierPotential::cosine(1, 1, 0.05);
    let spec = LagrangianSpec::new(dir, f.clone());
    let mut last = f64::NEG_INFINITY;
    for bound in 0..=3 {
        let r = mather_lp(&spec, grid, bound).unwrap();
        assert!(r.action >= last - 1e-9);
        last = r.action;
        // uniform position at one grid velocity is closed for every test mode
        for k in 0..grid.nv * grid.nv {
            let (u, v) = (grid.velocity(k % grid.nv), grid.velocity(k / grid.nv));
            let uniform = spec.kinetic(u, v) + f.mean();
            assert!(r.action <= uniform + 1e-9);
        }
        assert!(r.measure.closedness_residual(bound) < 1e-8);
        assert!((r.measure.total_mass() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn custom_cost_reproduces_spec_cost() {
    let dir = DirectionSpec::sqrt2();
    let grid = LpGrid { nx: 8, ny: 8, nv: 5, v_max: 1.5 };
    let spec = LagrangianSpec::new(dir, FourierPotential::cosine(0, 1, 0.1));
    let a = mather_lp(&spec, grid, 2).unwrap();
    let b = mather_lp_with_cost(grid, 2, |x, y, u, v| spec.eval(x, y, u, v)).unwrap();
    assert!((a.action - b.action).abs() < 1e-9);
}

#[test]
fn supplied_period_changes_required_at_period_only() {
    let dir = DirectionSpec::sqrt2();
    let spec = LagrangianSpec::unperturbed(dir);
    let best = optimal_orbit(&dir, 3, 2).unwrap();
    let other = RationalOrbit::new(3, 2, 4.0).unwrap();
    let c1 = necessary_condition(&spec, &best).unwrap();
    let c2 = necessary_condition(&spec, &other).unwrap();
    assert_eq!(c1.required_gap, c2.required_gap);
    assert!(c2.required_at_period > c1.required_at_period);
    assert!((c1.required_at_period - c1.required_gap).abs() < 1e-15);
}
