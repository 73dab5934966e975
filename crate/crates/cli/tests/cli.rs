use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gyrocal(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gyrocal"))
        .args(args)
        .current_dir(dir)
        .env_remove("GYROCAL_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn vec3(v: &Value) -> [f64; 3] {
    let a = v.as_array().unwrap();
    [0, 1, 2].map(|i| a[i].as_f64().unwrap())
}

const REFERENCE: &str = r#"{
  "true_gyro": {"scale": [1.033, 0.811, 1.151], "bias": [0.5, -0.25, 0.0]},
  "axis": [-1, 1, -1],
  "speed": 50,
  "noise_sigma_gyro": 0.1
}"#;

fn scenario(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn simulate_then_calibrate_recovers_scale() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", REFERENCE);
    let o = gyrocal(&["simulate", &sc, "--seed", "4", "--out", "sim"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["log.csv", "manifest.json", "ground_truth.json"] {
        assert!(d.path().join("sim").join(f).exists(), "{f}");
    }
    let o = gyrocal(&["calibrate", "sim/manifest.json", "--out", "cal"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&d.path().join("cal/calibration.json"));
    assert_eq!(report["meta"]["tool"], "gyrocal");
    let k = vec3(&report["result"]["scale"]);
    for (est, truth) in k.iter().zip([1.033, 0.811, 1.151]) {
        assert!((est / truth - 1.0).abs() < 0.01, "{k:?}");
    }
    let dots = fs::read_to_string(d.path().join("cal/dot_products.csv")).unwrap();
    assert!(dots.starts_with("# gyrocal "));
    assert_eq!(dots.lines().nth(1), Some("pose,dot_before,dot_after"));
}

#[test]
fn simulate_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", REFERENCE);
    assert_eq!(
        code(&gyrocal(&["simulate", &sc, "--seed", "9", "--out", "a"], d.path())),
        0
    );
    assert_eq!(
        code(&gyrocal(&["simulate", &sc, "--seed", "9", "--out", "b"], d.path())),
        0
    );
    for f in ["log.csv", "manifest.json", "ground_truth.json"] {
        assert_eq!(
            fs::read(d.path().join("a").join(f)).unwrap(),
            fs::read(d.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        code(&gyrocal(&["simulate", &sc, "--seed", "10", "--out", "c"], d.path())),
        0
    );
    assert_ne!(
        fs::read(d.path().join("a/log.csv")).unwrap(),
        fs::read(d.path().join("c/log.csv")).unwrap()
    );
}

#[test]
fn seed_precedence() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", r#"{"seed": 5}"#);
    let seed_of = |dir: &str| json(&d.path().join(dir).join("ground_truth.json"))["meta"]["seed"].as_u64();

    assert_eq!(code(&gyrocal(&["simulate", &sc, "--out", "file"], d.path())), 0);
    assert_eq!(seed_of("file"), Some(5));

    let run_env = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_gyrocal"))
            .args(args)
            .current_dir(d.path())
            .env("GYROCAL_SEED", "6")
            .output()
            .unwrap()
    };
    assert_eq!(code(&run_env(&["simulate", &sc, "--out", "env"])), 0);
    assert_eq!(seed_of("env"), Some(6));
    assert_eq!(code(&run_env(&["simulate", &sc, "--seed", "7", "--out", "flag"])), 0);
    assert_eq!(seed_of("flag"), Some(7));
}

#[test]
fn malformed_json_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "bad.json", "{\n  \"speed\": 50,\n  \"axis\": [1, 2\n}");
    let o = gyrocal(&["simulate", &sc, "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn invalid_field_is_named() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", r#"{"noise_sigma_gyro": -1}"#);
    let o = gyrocal(&["simulate", &sc, "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("noise_sigma_gyro"), "{}", stderr(&o));
    let sc = scenario(d.path(), "t.json", r#"{"sped": 10}"#);
    let o = gyrocal(&["simulate", &sc, "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sped"), "{}", stderr(&o));
}

#[test]
fn missing_manifest_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = gyrocal(&["calibrate", "nope.json", "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope.json"));
    let o = gyrocal(&["calibrate", "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn vertical_axis_exits_with_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", r#"{"tilt_deg": 1.0}"#);
    assert_eq!(code(&gyrocal(&["simulate", &sc, "--out", "sim"], d.path())), 0);
    let o = gyrocal(&["calibrate", "sim/manifest.json", "--out", "cal"], d.path());
    assert_eq!(code(&o), 3);
    assert!(
        stderr(&o).contains("angle between rotation axis and gravity"),
        "{}",
        stderr(&o)
    );
    assert!(!d.path().join("cal/calibration.json").exists());
}

#[test]
fn auto_segmented_log_concentrates_dot_products() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", &REFERENCE.replace("\"speed\": 50", "\"speed\": 30"));
    assert_eq!(code(&gyrocal(&["simulate", &sc, "--out", "sim"], d.path())), 0);
    let o = gyrocal(
        &[
            "calibrate",
            "--auto-segment",
            "sim/log.csv",
            "--speed",
            "30",
            "--out",
            "cal",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.path().join("cal/manifest.json").exists());
    let text = fs::read_to_string(d.path().join("cal/dot_products.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(2)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[1], c[2])
        })
        .collect();
    assert_eq!(rows.len(), 4);
    let spread = |f: fn(&(f64, f64)) -> f64| {
        let v: Vec<f64> = rows.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(spread(|r| r.1) < spread(|r| r.0));
}

#[test]
fn unit_scale_converts_log_units() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", REFERENCE);
    assert_eq!(code(&gyrocal(&["simulate", &sc, "--out", "sim"], d.path())), 0);
    // same log with gyro in millidegrees per second
    let text = fs::read_to_string(d.path().join("sim/log.csv")).unwrap();
    let milli: String = text
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.starts_with('t') {
                return format!("{l}\n");
            }
            let mut c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            for v in &mut c[4..] {
                *v *= 1000.0;
            }
            c.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n"
        })
        .collect();
    fs::write(d.path().join("sim/log.csv"), milli).unwrap();
    let o = gyrocal(
        &[
            "calibrate",
            "sim/manifest.json",
            "--unit-scale",
            "1,0.001",
            "--out",
            "cal",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let k = vec3(&json(&d.path().join("cal/calibration.json"))["result"]["scale"]);
    for (est, truth) in k.iter().zip([1.033, 0.811, 1.151]) {
        assert!((est / truth - 1.0).abs() < 0.01, "{k:?}");
    }
    let o = gyrocal(
        &["calibrate", "sim/manifest.json", "--unit-scale", "1", "--out", "cal"],
        d.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_noise_sweep_reconstructs_every_point() {
    let d = tempfile::tempdir().unwrap();
    let speeds: Vec<String> = (1..=40).map(|i| (5 * i).to_string()).collect();
    let cfg = format!(
        r#"{{"speeds": [{}], "source": {{"kind": "simulated", "redraw_scale": true,
            "base": {{"noise_sigma_gyro": 0, "noise_sigma_gyro_static": 0, "noise_sigma_accel": 0}}}}}}"#,
        speeds.join(",")
    );
    let sw = scenario(d.path(), "sweep.json", &cfg);
    let o = gyrocal(&["sweep", &sw, "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&d.path().join("out/sweep_report.json"));
    assert_eq!(report["failures"], 0);
    let points = report["points"].as_array().unwrap();
    assert_eq!(points.len(), 40);
    for p in points {
        let speed = p["speed"].as_f64().unwrap();
        let post = p["reconstructed_post"].as_f64().unwrap();
        assert!((post - speed).abs() <= 1e-9 * speed);
    }
    // points below 20 deg/s (5, 10, 15) are repeated five times
    for (f, rows) in [("speed.csv", 40), ("scale.csv", 40), ("raw_estimates.csv", 37 + 3 * 5)] {
        let text = fs::read_to_string(d.path().join("out").join(f)).unwrap();
        assert_eq!(text.lines().count(), rows + 2, "{f}");
    }
}

#[test]
fn recorded_sweep_reads_manifests() {
    let d = tempfile::tempdir().unwrap();
    for speed in [110, 150, 200] {
        let sc = scenario(
            d.path(),
            &format!("s{speed}.json"),
            &REFERENCE.replace("50", &speed.to_string()),
        );
        let out = format!("run{speed}");
        assert_eq!(code(&gyrocal(&["simulate", &sc, "--out", &out], d.path())), 0);
    }
    let sw = scenario(
        d.path(),
        "sweep.json",
        r#"{"speeds": [110, 150, 200], "source": {"kind": "recorded",
            "manifests": ["run110/manifest.json", "run150/manifest.json", "run200/manifest.json"]}}"#,
    );
    let o = gyrocal(&["sweep", &sw, "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&d.path().join("out/sweep_report.json"));
    assert_eq!(report["failures"], 0);
    let slope = report["linearity"]["x"]["slope"].as_f64().unwrap();
    assert!(slope.abs() < 1e-4, "{slope}");
}

#[test]
fn montecarlo_writes_one_row_per_run() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", REFERENCE);
    let o = gyrocal(&["montecarlo", &sc, "--runs", "500", "--out", "mc"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let runs = fs::read_to_string(d.path().join("mc/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 502);
    let summary = json(&d.path().join("mc/montecarlo.json"));
    assert_eq!(summary["runs"], 500);
    assert_eq!(summary["policy"], "models");
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout["runs"], 500);
}

#[test]
fn noise_grid_table() {
    let d = tempfile::tempdir().unwrap();
    let sc = scenario(d.path(), "s.json", REFERENCE);
    let o = gyrocal(
        &[
            "montecarlo",
            &sc,
            "--runs",
            "20",
            "--sigmas",
            "0,30",
            "--speeds",
            "5,50,200",
            "--format",
            "csv",
            "--out",
            "grid",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("sigma,speed,runs,failures,"));
    assert_eq!(stdout.lines().count(), 7);
    let est = fs::read_to_string(d.path().join("grid/grid_estimates.csv")).unwrap();
    assert!(est.lines().count() > 100);
    let o = gyrocal(
        &[
            "montecarlo",
            &sc,
            "--runs",
            "5",
            "--sigmas",
            "1",
            "--speeds",
            "5",
            "--redraw",
            "models",
            "--out",
            "g",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 2);
}
