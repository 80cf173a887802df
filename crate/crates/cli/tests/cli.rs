use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ensctl(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ensctl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

const SLR: [&str; 13] = [
    "design-slr",
    "--axis",
    "x",
    "--angle",
    "1.5707963267948966",
    "--band",
    "2000",
    "--steps",
    "64",
    "--dt",
    "1e-4",
    "--out",
    "pulse.json",
];

fn designed_pulse() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let r = ensctl(dir.path(), &SLR);
    assert_eq!(r.code, 0, "{}", r.stderr);
    dir
}

#[test]
fn design_slr_writes_pulse_diagnostics_and_map() {
    let dir = designed_pulse();
    let d = dir.path();
    let diag = json(d, "pulse.diagnostics.json");
    assert_eq!(diag["artifact"], "pulse.json");
    assert_eq!(diag["fidelity_map"], "pulse.fidelity.csv");
    assert!(diag["band_error"].as_f64().unwrap() <= 0.05);
    assert!(diag["fit_residual"].is_number());
    let map = read(d, "pulse.fidelity.csv");
    assert!(map.starts_with("omega,epsilon,fidelity\n"));
    assert_eq!(map.lines().count(), 66);
    let pulse = json(d, "pulse.json");
    assert_eq!(pulse["schema_version"], 1);
    assert_eq!(pulse["amplitude_unit"], "rad_per_s");
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let names = ["pulse.json", "pulse.diagnostics.json", "pulse.fidelity.csv"];
    let first = ensctl(d, &SLR);
    let before: Vec<String> = names.iter().map(|n| read(d, n)).collect();
    let second = ensctl(d, &SLR);
    let after: Vec<String> = names.iter().map(|n| read(d, n)).collect();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(before, after);

    let zz = ["design-zz", "--theta", "0.7853981633974483", "--j0", "1", "--delta", "0.1", "--out", "zz.json"];
    let a = ensctl(d, &zz);
    let text = read(d, "zz.json");
    let b = ensctl(d, &zz);
    assert_eq!((a.code, b.code), (0, 0), "{}", a.stderr);
    assert_eq!(text, read(d, "zz.json"));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn numbers_carry_seventeen_digits() {
    let dir = designed_pulse();
    let text = read(dir.path(), "pulse.json");
    assert!(text.contains("\"dt\": 1.0000000000000000e-4"), "{text}");
}

#[test]
fn simulate_emits_bloch_columns() {
    let dir = designed_pulse();
    let d = dir.path();
    std::fs::write(
        d.join("g.json"),
        r#"{"axes": {"omega": {"min": -1000, "max": 1000, "n": 3}, "epsilon": {"min": 0.9, "max": 1.1, "n": 2}}}"#,
    )
    .unwrap();
    let r = ensctl(d, &["simulate", "--pulse", "pulse.json", "--grid", "g.json", "--initial", "0,0,1", "--out", "state.csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = read(d, "state.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega,epsilon,x,y,z");
    assert_eq!(lines.len(), 7);
    // at ε = 0.9 a π/2 pulse leaves z = cos(0.45π)
    let z: f64 = lines[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((z - (0.45 * std::f64::consts::PI).cos()).abs() < 1e-9, "{z}");

    let r = ensctl(d, &["fidelity-map", "--pulse", "pulse.json", "--grid", "g.json", "--target", "0,-1,0", "--out", "m.csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(read(d, "m.csv").starts_with("omega,epsilon,fidelity\n"));
}

#[test]
fn schema_violations_exit_two_with_line() {
    let dir = designed_pulse();
    let d = dir.path();
    let good = read(d, "pulse.json");
    std::fs::write(d.join("g.json"), r#"{"axes": {"omega": {"min": 0, "max": 0, "n": 1}, "epsilon": {"min": 1, "max": 1, "n": 1}}}"#)
        .unwrap();
    for (name, bad) in [
        ("hz.json", good.replace("\"rad_per_s\"", "\"hz\"")),
        ("noversion.json", good.replace("\"schema_version\": 1,", "")),
        ("truncated.json", good[..good.len() / 2].to_string()),
    ] {
        std::fs::write(d.join(name), bad).unwrap();
        let r = ensctl(d, &["simulate", "--pulse", name, "--grid", "g.json", "--out", "s.csv"]);
        assert_eq!(r.code, 2, "{name}: {}", r.stderr);
        assert!(r.stderr.contains("line"), "{name}: {}", r.stderr);
        assert!(r.stderr.contains(name), "{}", r.stderr);
        assert!(!d.join("s.csv").exists());
    }
    std::fs::write(d.join("bad_grid.json"), "{\"axes\": {\n \"omega\": {\"min\": 1, \"max\": 0, \"n\": 2},\n \"epsilon\": {\"min\": 1, \"max\": 1, \"n\": 1}}}").unwrap();
    let r = ensctl(d, &["simulate", "--pulse", "pulse.json", "--grid", "bad_grid.json", "--out", "s.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["no-such-command"],
        vec!["design-slr", "--axis", "x"],
        vec!["design-composite", "--angle", "1", "--tol", "-1", "--out", "c.json"],
        vec!["design-composite", "--angle", "1", "--tol", "0", "--out", "c.json"],
        vec!["design-slr", "--axis", "x", "--angle", "1", "--band", "1e6", "--steps", "8", "--dt", "1e-4", "--out", "p.json"],
    ] {
        let r = ensctl(dir.path(), &args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
    }
    assert_eq!(ensctl(dir.path(), &["--help"]).code, 0);
}

#[test]
fn infeasibility_is_exit_three_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // even target, odd powers, symmetric range
    let r = ensctl(d, &["analyze-lie", "--system", "eps-rf", "--fit-target", "1", "--fit-powers", "1,3,5"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["fit"]["verdict"], "not_achievable");
    assert!(r.stderr.contains("infeasible"));
    // the same target is fine once an even power is allowed
    let r = ensctl(d, &["analyze-lie", "--system", "eps-rf", "--fit-target", "1", "--fit-powers", "0,2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);

    let r = ensctl(d, &["design-composite", "--kind", "omega", "--axis", "y", "--angle", "1", "--single-quadrature", "--out", "o.json"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stderr.contains("quadrature"), "{}", r.stderr);
    assert!(!d.join("o.json").exists());
}

#[test]
fn composite_and_zz_designs_write_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = ensctl(d, &["design-composite", "--angle", "1.5707963267948966", "--basis", "1,3", "--tol", "2e-2", "--subdivisions", "64", "--out", "c.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let diag = json(d, "c.diagnostics.json");
    assert!(diag["fits"][0]["max_residual"].is_number());
    assert!(diag["generator_min_fidelity"].as_f64().unwrap() > 0.999);
    assert!(read(d, "c.fidelity.csv").lines().count() == 22);

    let r = ensctl(d, &["design-composite", "--kind", "omega", "--angle", "1", "--slope", "0.3", "--out", "o.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(d, "o.json")["kind"], "strong_rf");

    let r = ensctl(d, &["design-zz", "--theta", "0.7853981633974483", "--j0", "1", "--delta", "0.1", "--out", "zz.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let diag = json(d, "zz.diagnostics.json");
    assert!(diag["generator_min_fidelity"].as_f64().unwrap() >= 0.999);
    assert!(read(d, "zz.fidelity.csv").starts_with("omega,epsilon,J,fidelity\n"));
}

#[test]
fn design_pattern_writes_flip_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = ensctl(
        d,
        &["design-pattern", "--inside", "1.5707963267948966", "--half-band", "3000", "--transition", "1500", "--steps", "32", "--dt", "1e-4", "--out", "p.json", "--diagnostics", "diag.json", "--map", "flip.csv"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(d, "diag.json")["fidelity_map"], "flip.csv");
    assert!(json(d, "diag.json")["map_mean_fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("slr.conf"), "# broadband π/2\naxis = x\nangle = 1.5707963267948966\nband = 2000\nsteps = 64\ndt = 1e-4\nout = pulse.json\n").unwrap();
    let r = ensctl(d, &["design-slr", "--config", "slr.conf"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let from_config = read(d, "pulse.json");
    ensctl(d, &SLR);
    assert_eq!(from_config, read(d, "pulse.json"));
    // flags override the file
    let r = ensctl(d, &["design-slr", "--config", "slr.conf", "--out", "other.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(d.join("other.json").exists());

    std::fs::write(d.join("bad.conf"), "axis = x\nbogus = 1\n").unwrap();
    let r = ensctl(d, &["design-slr", "--config", "bad.conf"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2") && r.stderr.contains("bogus"), "{}", r.stderr);

    std::fs::write(d.join("tol.conf"), "angle = 1\ntol = -0.5\nout = c.json\n").unwrap();
    assert_eq!(ensctl(d, &["design-composite", "--config", "tol.conf"]).code, 2);
}

#[test]
fn demo_phase_deviation_is_tiny() {
    let dir = designed_pulse();
    let r = ensctl(dir.path(), &["demo-phase", "--pulse", "pulse.json", "--thetas", "0,0.5,1.0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!(rep["max_frame_deviation"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn demo_heisenberg_ratios_hold() {
    let dir = tempfile::tempdir().unwrap();
    let r = ensctl(dir.path(), &["demo-heisenberg", "--epsilons", "0.5,1,2", "--out", "h.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = json(dir.path(), "h.json");
    assert_eq!(rep["ratios_constant"], true);
    assert!(rep["best_residual"].as_f64().unwrap() > 0.1);
}

#[test]
fn analyze_lie_reports_structure() {
    let dir = tempfile::tempdir().unwrap();
    let r = ensctl(dir.path(), &["analyze-lie", "--system", "heisenberg"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["nilpotency"]["step"], 2);
    assert_eq!(rep["vector_field_nilpotency"]["step"], 2);
    let r = ensctl(dir.path(), &["analyze-lie", "--system", "strong-rf"]);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["dimension"], 3);
    assert_eq!(rep["nilpotency"]["verdict"], "not_nilpotent");
}

#[test]
fn analyze_linear_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let distinct = r#"{"samples": [
        {"s": [1.0], "a": [[-1.0, 0.0], [0.0, -2.0]], "b": [1.0, 1.0]},
        {"s": [1.5], "a": [[-1.5, 0.0], [0.0, -3.0]], "b": [1.0, 1.0]}],
      "targets": [[1.0, 0.0], [0.0, 1.0]]}"#;
    std::fs::write(d.join("ok.json"), distinct).unwrap();
    let r = ensctl(d, &["analyze-linear", "--samples", "ok.json", "--horizon", "6"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["conditions"]["passed"], true);
    assert_eq!(rep["reachability"]["refined_horizon"], 12);

    // same spectrum, different realisation
    let similar = r#"{"samples": [
        {"a": [[0.0, 1.0], [-2.0, -3.0]], "b": [0.0, 1.0]},
        {"a": [[-1.0, 0.0], [0.0, -2.0]], "b": [1.0, 1.0]}]}"#;
    std::fs::write(d.join("similar.json"), similar).unwrap();
    let r = ensctl(d, &["analyze-linear", "--samples", "similar.json"]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["conditions"]["shared_charpoly"][0], serde_json::json!([0, 1]));

    std::fs::write(d.join("broken.json"), "{\"samples\": [\n  {\"a\": [[1.0]], \"c\": [1.0]}]}").unwrap();
    let r = ensctl(d, &["analyze-linear", "--samples", "broken.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);
}
