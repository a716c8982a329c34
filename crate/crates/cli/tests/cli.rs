use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cmavm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmavm")).args(args).output().expect("binary runs")
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str::<Value>(line).expect("json error")["error"].clone()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn run_writes_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = cmavm(&["run", "--scenario", "cma30,ccma30", "--frequencies", "500,1084", "--output", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for s in ["cma30", "ccma30"] {
        let m = lines(&dir.path().join(s).join("metrics.csv"));
        assert_eq!(m[0], "frequency_hz,di_db,wng_db");
        assert_eq!(m.len(), 3);
        assert!(m[1].starts_with("500,"));
        let bp = lines(&dir.path().join(s).join("beampattern.csv"));
        assert_eq!(bp.len(), 1 + 2 * 360);
        let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(s).join("run.json")).unwrap()).unwrap();
        assert_eq!(manifest["scenario"], s);
    }
    let cmp = cmavm(&["compare", dir.path().join("cma30").to_str().unwrap(), dir.path().join("ccma30").to_str().unwrap()]);
    assert!(cmp.status.success());
    let text = String::from_utf8_lossy(&cmp.stdout);
    assert!(text.starts_with("frequency_hz,di_delta_db,wng_delta_db\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = cmavm(&["run", "--scenario", "cma10", "--frequencies", "700,1300,2100", "--output", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    for f in ["metrics.csv", "beampattern.csv", "run.json"] {
        let x = std::fs::read(a.path().join("cma10").join(f)).unwrap();
        let y = std::fs::read(b.path().join("cma10").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn singular_system_reports_frequency_and_stage() {
    let dir = tempfile::tempdir().unwrap();
    let f = 2.404825557695773 * 340.0 / (std::f64::consts::TAU * 0.12);
    let out = cmavm(&[
        "run",
        "--scenario",
        "cma30",
        "--strict-delta",
        "--frequencies",
        &format!("1000,{f}"),
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    let e = error_json(&out);
    assert_eq!(e["stage"], "beamformer");
    assert!((e["frequency_hz"].as_f64().unwrap() - f).abs() < 1e-9);
}

#[test]
fn bad_inputs_are_reported_as_json() {
    assert_eq!(error_json(&cmavm(&["run", "--scenario", "cma31"]))["kind"], "usage");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "scenario = \"cma30\"\nspeed_of_sond = 343.0\n").unwrap();
    let e = error_json(&cmavm(&["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(e["key"], "speed_of_sond");
    std::fs::write(&cfg, "scenario = \"cma30\"\nspeed_of_sound = -1.0\n").unwrap();
    let e = error_json(&cmavm(&["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(e["key"], "speed_of_sound");
}

#[test]
fn nulls_match_bessel_zeros() {
    let out = cmavm(&["nulls", "--radius", "0.12", "--f-max", "2600"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let freqs: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let expected = [1084.43, 1727.87, 2315.85, 2489.22];
    assert_eq!(freqs.len(), expected.len());
    for (f, e) in freqs.iter().zip(expected) {
        assert!((f - e).abs() < 0.01, "{f} vs {e}");
    }
}

#[test]
fn nulls_option_restricts_run_to_null_bins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "scenario = \"cma30\"\n[frequency_grid]\nstart = 100.0\nstop = 2600.0\nstep = 4.0\n").unwrap();
    let out = cmavm(&["run", "--config", cfg.to_str().unwrap(), "--nulls", "--output", dir.path().join("o").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = lines(&dir.path().join("o").join("metrics.csv"));
    let f: Vec<&str> = m[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(f, ["1084", "1728", "2316", "2489"]);
}

#[test]
fn ir_conversion_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let ir = dir.path().join("ir.json");
    std::fs::write(
        &ir,
        r#"{"sample_rate": 8000.0, "responses": [
            {"mic_id": 0, "source_angle_rad": 0.0, "samples": [1.0, 0.0, 0.0, 0.0]},
            {"mic_id": 1, "source_angle_rad": 0.0, "samples": [0.0, 1.0, 0.0, 0.0]}]}"#,
    )
    .unwrap();
    let tf = dir.path().join("tf.csv");
    let out = cmavm(&["ir2tf", "--input", ir.to_str().unwrap(), "--output", tf.to_str().unwrap(), "--frequencies", "0,2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(&tf);
    assert_eq!(rows[0], "frequency_hz,mic_id,source_angle_rad,real,imag");
    assert_eq!(rows.len(), 5);
    // one-sample delay at fs/4 is a −90° rotation
    let last: Vec<f64> = rows[4].split(',').map(|c| c.parse().unwrap()).collect();
    assert!(last[3].abs() < 1e-12 && (last[4] + 1.0).abs() < 1e-12);
    let e = error_json(&cmavm(&["ir2tf", "--input", ir.to_str().unwrap(), "--output", tf.to_str().unwrap(), "--frequencies", "4000"]));
    assert_eq!(e["kind"], "io");
}

#[test]
fn cutoff_of_ten_mic_ring() {
    let out = cmavm(&["cutoff", "--count", "10"]);
    let f: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    let expected = 340.0 / (4.0 * 0.12 * (std::f64::consts::PI / 10.0).sin());
    assert!((f - expected).abs() < 1e-9);
}
