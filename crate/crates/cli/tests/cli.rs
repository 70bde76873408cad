use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mather-lab"));
    c.env_remove("MATHER_LAB_OUT");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const RESONANT: &str = r#"{"modes":[{"m":2,"n":-3,"re":-0.0005},{"m":-2,"n":3,"re":-0.0005}]}"#;

#[test]
fn verify_zero_potential_is_violated() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["verdict"], "violated");
    let margin = r["certificate"]["margin"].as_f64().unwrap();
    assert!((margin + 3.774e-4).abs() < 1e-7, "{margin}");
    assert_eq!(r["potential"]["source"], "builtin");
    assert_eq!(r["potential"]["sha1"].as_str().unwrap().len(), 40);
}

#[test]
fn verify_resonant_cosine_is_compatible() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", RESONANT);
    let out = run_in(dir.path(), &["verify", "--potential", &f]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["verdict"], "compatible");
    assert!((r["certificate"]["c4_bound"].as_f64().unwrap() - 0.081).abs() < 1e-12);
    assert_eq!(r["potential"]["sha1"], mather_lab::git_blob_sha1(RESONANT.as_bytes()));
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"modes":[{"m":1,"n":0,"re":1}]}"#);
    let garbage = write(dir.path(), "garbage.json", "not json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "--potential", "missing.json"],
        vec!["verify", "--potential", &bad],
        vec!["verify", "--potential", &garbage],
        vec!["verify", "--orbit", "4,2"],
        vec!["verify", "--orbit", "3,0"],
        vec!["verify", "--r", "sqrt4"],
        vec!["verify", "--emit", "xml"],
        vec!["weak-kam", "--grid", "1"],
        vec!["floquet", "--lambda", "-1"],
        vec!["sweep", "--orbits", "3;2"],
    ];
    for args in cases {
        let out = run_in(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn symmetrize_repairs_non_hermitian_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"modes":[{"m":1,"n":0,"re":1}]}"#);
    let out = run_in(dir.path(), &["verify", "--potential", &bad, "--symmetrize"]);
    assert_ne!(out.status.code(), Some(2));
    assert_eq!(json(&out)["potential"]["symmetrized"], true);
}

#[test]
fn sweep_below_threshold_never_alarms() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--seed", "42", "--count", "50", "--orbits", "3,2;7,5;17,12"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["alarm"], false);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row["violated"], 50);
        assert_eq!(row["compatible"], 0);
        assert!(row["largest_c4"].as_f64().unwrap() < row["threshold"].as_f64().unwrap());
    }
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--seed", "7", "--count", "20", "--emit", "table"];
    let a = run_in(dir.path(), &args);
    let b = run_in(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run_in(dir.path(), &["sweep", "--seed", "8", "--count", "20"]);
    let d = run_in(dir.path(), &["sweep", "--seed", "7", "--count", "20"]);
    assert_ne!(c.stdout, d.stdout);
}

#[test]
fn empty_sweep_has_no_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--count", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["rows"].as_array().unwrap().is_empty());
}

#[test]
fn self_test_fires_only_under_an_inflated_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let honest = run_in(dir.path(), &["sweep", "--count", "5", "--orbits", "3,2", "--self-test"]);
    assert_eq!(honest.status.code(), Some(0));
    assert_eq!(json(&honest)["rows"][0]["self_test"]["admitted"], false);

    let ten = run_in(dir.path(), &["sweep", "--count", "5", "--orbits", "3,2", "--self-test", "--threshold-scale", "10"]);
    assert_eq!(ten.status.code(), Some(0));

    let inflated =
        run_in(dir.path(), &["sweep", "--count", "5", "--orbits", "3,2", "--self-test", "--threshold-scale", "2000"]);
    assert_eq!(inflated.status.code(), Some(1));
    let r = json(&inflated);
    assert_eq!(r["alarm"], true);
    assert_eq!(r["rows"][0]["self_test"]["verdict"], "compatible");
}

#[test]
fn fbar_csv_goes_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", RESONANT);
    let out_dir = dir.path().join("out");
    let out = bin()
        .current_dir(dir.path())
        .env("MATHER_LAB_OUT", &out_dir)
        .args(["fbar", "--potential", &f, "--samples", "64", "--emit", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let path = out_dir.join("fbar.csv");
    assert_eq!(r["csv"], path.display().to_string());
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["lambda", "F", "F1", "F2", "F3", "F4"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 64);
    let f0: f64 = rows[0][1].parse().unwrap();
    assert!((f0 + 1e-3).abs() < 1e-15, "{f0}");
}

#[test]
fn explicit_csv_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["diophantine", "--bmax", "50", "--emit", "sub/conv.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sub/conv.csv")).unwrap();
    assert!(text.lines().count() > 3);
    assert!(text.lines().any(|l| l.starts_with("3,2,")));
}

#[test]
fn table_output_is_plain_text() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["diophantine", "--bmax", "50", "--emit", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(serde_json::from_str::<Value>(&text).is_err());
    assert!(text.contains("c0"));
}

#[test]
fn small_solver_runs() {
    let dir = tempfile::tempdir().unwrap();
    let wk = run_in(dir.path(), &["weak-kam", "--grid", "16", "--emit", "csv"]);
    assert_eq!(wk.status.code(), Some(0));
    let alpha = json(&wk)["alpha"].as_f64().unwrap();
    assert!((alpha - 0.5).abs() < 2e-2, "{alpha}");
    let u = std::fs::read_to_string(dir.path().join("weak_kam_u.csv")).unwrap();
    assert_eq!(u.lines().count(), 1 + 16 * 16);

    let au = run_in(dir.path(), &["aubry", "--grid", "16", "--penalty", "3,2"]);
    assert_eq!(au.status.code(), Some(0));
    assert!(json(&au)["count"].as_u64().unwrap() > 0);

    let fl = run_in(dir.path(), &["floquet", "--lambda", "1"]);
    assert_eq!(fl.status.code(), Some(0));
    let det = json(&fl)["determinant"].as_f64().unwrap();
    assert!((det - 1.0).abs() < 1e-9, "{det}");
}

#[test]
fn mather_lp_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lp.json", r#"{"nx": 8, "ny": 8, "nv": 5, "v_max": 1.5, "test_modes": 1}"#);
    let out = run_in(dir.path(), &["mather-lp", "--config", &cfg, "--emit", "measure.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!(r["action"].as_f64().unwrap() > -0.5 - 1e-9);
    let m = std::fs::read_to_string(dir.path().join("measure.csv")).unwrap();
    assert!(m.starts_with("x,y,u,v,weight"));

    let unknown = write(dir.path(), "typo.json", r#"{"nxx": 8}"#);
    assert_eq!(run_in(dir.path(), &["mather-lp", "--config", &unknown]).status.code(), Some(2));
}
