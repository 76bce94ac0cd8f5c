//! End-to-end tests of the `casimir1d` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_casimir1d"));
    c.env_remove("CASIMIR1D_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn casimir1d")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|x| if x.is_empty() { f64::NAN } else { x.parse().unwrap() })
                .collect()
        })
        .collect();
    (header, rows)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/result_record.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).expect("schema compiles")
}

#[test]
fn line_matches_golden_record() {
    let golden: Value =
        serde_json::from_str(include_str!("golden/line_b1_t1.json")).expect("golden file parses");
    let args: Vec<&str> = golden["args"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    let got = json_of(&run(&args));
    for key in ["F", "F0", "dTF", "E", "S"] {
        let want = golden["result"][key].as_f64().unwrap();
        let have = got["result"][key].as_f64().unwrap();
        assert!(close(have, want, 1e-9), "{key}: {have} vs golden {want}");
    }
    let r = &got["result"];
    let f = r["F"].as_f64().unwrap();
    assert!(close(f, r["F0"].as_f64().unwrap() + r["dTF"].as_f64().unwrap(), 1e-12));
    assert!(close(r["E"].as_f64().unwrap(), f + r["S"].as_f64().unwrap(), 1e-9));
}

#[test]
fn real_frequency_and_matsubara_agree() {
    for extra in [&["--system", "line"][..], &["--system", "box", "--L", "2.5"][..]] {
        let mut args = vec!["compare", "--g", "1", "--omega", "1", "--gamma", "0.1", "--b", "1", "--temp", "1"];
        args.extend_from_slice(extra);
        let v = json_of(&run(&args));
        let rel = v["result"]["relative_difference"].as_f64().unwrap();
        assert!(rel < 1e-6, "{extra:?}: relative difference {rel}");
    }
}

#[test]
fn exit_codes() {
    let degenerate = run(&["line", "--g", "1", "--omega", "1", "--b", "2", "--temp", "1"]);
    assert_eq!(degenerate.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&degenerate.stderr);
    assert!(msg.contains("degenerate"), "{msg}");
    assert!(degenerate.stdout.is_empty());

    let short_box = run(&["box", "--b", "2", "--L", "1"]);
    assert_eq!(short_box.status.code(), Some(2));

    assert_eq!(run(&["line", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["line", "--gamma", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["single", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# line run\nomega = 2\ngamma = 0.3\nrepr = matsubara\ntemp = 0.5\n").unwrap();
    let p = path.to_str().unwrap();

    let from_file = json_of(&run(&["line", "--config", p, "--omega", "1.5"]));
    let c = &from_file["config"];
    assert_eq!(c["omega"].as_f64(), Some(1.5));
    assert_eq!(c["gamma"].as_f64(), Some(0.3));
    assert_eq!(c["temp"].as_f64(), Some(0.5));
    assert_eq!(c["g"].as_f64(), Some(1.0));
    assert_eq!(c["repr"].as_str(), Some("matsubara"));

    let from_env = bin()
        .env("CASIMIR1D_CONFIG", p)
        .args(["line", "--omega", "1.5"])
        .output()
        .unwrap();
    assert_eq!(json_of(&from_env)["result"], from_file["result"]);

    std::fs::write(&path, "omgea = 2\n").unwrap();
    assert_eq!(run(&["line", "--config", p]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic_apart_from_runtime() {
    let args = ["line", "--b", "0.7", "--temp", "0.3"];
    let mut a = json_of(&run(&args));
    let mut b = json_of(&run(&args));
    a["diagnostics"]["runtime_ms"] = Value::Null;
    b["diagnostics"]["runtime_ms"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn records_validate_against_schema() {
    let v = schema();
    let cases: &[&[&str]] = &[
        &["single", "--temp", "0.5"],
        &["box", "--L", "2.5", "--temp", "0.5"],
        &["box", "--L", "2.5", "--repr", "matsubara", "--temp", "0.5"],
        &["line", "--temp", "0.5"],
        &["matsubara", "--plasma", "--gamma", "0", "--temp", "0.5"],
        &["spectrum", "--L", "2.5", "--gamma", "0", "--temp", "0.5"],
        &["compare", "--temp", "0.5"],
        &["simulate", "--t-end", "20"],
        &["simulate", "--t-end", "10", "--temp", "0.5", "--members", "4", "--modes", "256"],
    ];
    for args in cases {
        let rec = json_of(&run(args));
        let errors: Vec<String> = v.iter_errors(&rec).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
}

#[test]
fn sweep_marks_failed_points_and_sets_exit_code() {
    // b = 2 is degenerate for g = Ω = 1: the linear grid over [1, 3] with 11
    // points hits it once (91% success), with 5 points once in five (80%).
    let ok = run(&["sweep", "--axis", "b", "--start", "1", "--stop", "3", "--count", "11", "--temp", "1"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("warning"));
    let (header, rows) = csv_rows(&ok);
    assert_eq!(header, ["b", "F", "F0", "dTF", "E", "S", "err_estimate", "xi_star", "runtime_ms"]);
    assert_eq!(rows.len(), 11);
    assert!(rows[5][1].is_nan());
    assert_eq!(rows.iter().filter(|r| r[1].is_nan()).count(), 1);

    let bad = run(&["sweep", "--axis", "b", "--start", "1", "--stop", "3", "--count", "5", "--temp", "1"]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(csv_rows(&bad).1.len(), 5);
}

#[test]
fn low_temperature_sweep_is_quadratic() {
    // Ω = 1, γ = 0.1, g = 1, b = 1: −ΔF/T² → ζ(2) c₂ / π with c₂ = 3.2.
    let out = run(&[
        "sweep", "--axis", "temp", "--start", "1e-3", "--stop", "1e-2", "--count", "5", "--scale", "log",
    ]);
    let (_, rows) = csv_rows(&out);
    let want = std::f64::consts::PI / 6.0 * 3.2;
    for r in rows {
        let ratio = -r[3] / (r[0] * r[0]);
        assert!(close(ratio, want, 1e-2), "T = {}: {ratio} vs {want}", r[0]);
    }
}

#[test]
fn vanishing_loss_approaches_plasma_limit() {
    let out = run(&[
        "sweep", "--axis", "gamma", "--start", "1e-4", "--stop", "1", "--count", "9", "--scale", "log", "--temp", "1",
    ]);
    let (_, rows) = csv_rows(&out);
    let plasma = json_of(&run(&["matsubara", "--plasma", "--gamma", "0", "--temp", "1"]));
    let fp = plasma["result"]["F"].as_f64().unwrap();
    assert!((rows[0][1] - fp).abs() < 1e-3, "{} vs plasma {fp}", rows[0][1]);
    // F decreases monotonically with the loss rate here.
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn strong_coupling_sweep_scales_inversely_with_separation() {
    let out = run(&[
        "sweep", "--axis", "b", "--start", "0.5", "--stop", "5", "--count", "6", "--scale", "log", "--g", "1e6",
        "--gamma", "0", "--repr", "matsubara",
    ]);
    let (_, rows) = csv_rows(&out);
    let fb: Vec<f64> = rows.iter().map(|r| r[1] * r[0]).collect();
    for x in &fb {
        assert!(close(*x, fb[0], 1e-4), "{fb:?}");
    }
    assert!(close(fb[0], -std::f64::consts::PI / 24.0, 1e-4), "{fb:?}");
}

#[test]
fn simulate_writes_csv_trajectory() {
    let out = run(&["simulate", "--t-end", "5", "--format", "csv", "--sample-every", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mass="));
    assert_eq!(lines.next().unwrap(), "t,xi,xi_dot,H_osc,H_bath,H_int");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[1], 1.0);
}
