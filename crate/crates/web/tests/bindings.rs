use mather_web::{diophantine, floquet, orbit_average};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).unwrap()
}

#[test]
fn average_of_resonant_cosine() {
    let doc = r#"{"modes":[{"m":2,"n":-3,"re":-0.0005},{"m":-2,"n":3,"re":-0.0005}]}"#;
    let v = parse(orbit_average(doc, "sqrt2", 3, 2, 64));
    assert_eq!(v["verdict"], "compatible");
    let f = v["F"].as_array().unwrap();
    assert_eq!(f.len(), 65);
    assert!((f[0].as_f64().unwrap() + 1e-3).abs() < 1e-15);
    assert!((f[64].as_f64().unwrap() + 1e-3).abs() < 1e-15);
    assert_eq!(v["derivatives"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_potential_violates() {
    let v = parse(orbit_average("", "sqrt2", 3, 2, 16));
    assert_eq!(v["verdict"], "violated");
    assert!((v["required_gap"].as_f64().unwrap() - 3.774e-4).abs() < 1e-7);
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    assert!(orbit_average("{", "sqrt2", 3, 2, 16).is_err());
    assert!(orbit_average("", "sqrt4", 3, 2, 16).is_err());
    assert!(orbit_average("", "sqrt2", 4, 2, 16).is_err());
    assert!(floquet("sqrt2", 3, 2, -1.0).is_err());
    assert!(diophantine("pi", 10).is_err());
}

#[test]
fn floquet_matches_closed_form() {
    let v = parse(floquet("sqrt2", 3, 2, 1.0));
    let big = v["expected"][3].as_f64().unwrap();
    let mut moduli: Vec<f64> = v["multipliers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z["re"].as_f64().unwrap().hypot(z["im"].as_f64().unwrap()))
        .collect();
    moduli.sort_by(f64::total_cmp);
    assert!((moduli[3] / big - 1.0).abs() < 1e-6);
    assert!((v["determinant"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn convergents_of_sqrt2() {
    let v = parse(diophantine("sqrt2", 200));
    let conv = v["convergents"].as_array().unwrap();
    let pairs: Vec<(i64, i64)> = conv.iter().map(|c| (c["a"].as_i64().unwrap(), c["b"].as_i64().unwrap())).collect();
    assert_eq!(&pairs[..4], &[(1, 1), (3, 2), (7, 5), (17, 12)]);
    let c0 = v["c0"].as_f64().unwrap();
    assert!(conv.iter().all(|c| c["scaled_distance"].as_f64().unwrap() >= c0));
}
