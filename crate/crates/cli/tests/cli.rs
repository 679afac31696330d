use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hapbeam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hapbeam"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const SMALL: &str = r#"
[array]
mx = 8
my = 8

[users]
count = 4

[horizon]
window = 64

[run]
snapshots = 12
"#;

#[test]
fn telemetry_to_calibration_to_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hapbeam(&["gen-telemetry", "--length", "3000", "--seed", "4", "--out", "t.csv"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,yaw_deg,pitch_deg,roll_deg");
    assert_eq!(text.lines().count(), 3001);

    let out = hapbeam(&["forecast-eval", "--telemetry", "t.csv", "--method", "linear", "--window", "32"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["horizon"], 12);
    assert!(report["target_window"]["mae_deg"][0].as_f64().unwrap() > 0.0);

    let out = hapbeam(&["calibrate", "--telemetry", "t.csv", "--window", "64", "--out", "cal.txt"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cal = fs::read_to_string(d.join("cal.txt")).unwrap();
    assert!(cal.contains("delta_omega_rad") && cal.contains("H_pred = 12"));

    fs::write(d.join("small.toml"), SMALL).unwrap();
    let out = hapbeam(&["run", "--config", "small.toml", "--out", "run"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["snapshots.csv", "summary.json", "calibration.txt"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(d.join("run/snapshots.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 12 * 4);

    let out = hapbeam(
        &["sweep", "--config", "small.toml", "--snapshots", "3", "--out", "sw", "--axis", "users.count=2,3"],
        d,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("sw/sweep.json").exists());
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    fs::write(d.join("bad.toml"), "[users]\ncount = 4\ncolour = 1\n").unwrap();
    assert_eq!(code(&hapbeam(&["run", "--config", "bad.toml"], d)), 2);
    fs::write(d.join("neg.toml"), "[qos]\np_max = -1.0\n").unwrap();
    assert_eq!(code(&hapbeam(&["run", "--config", "neg.toml"], d)), 2);
    assert_eq!(code(&hapbeam(&["sweep", "--axis", "nokey"], d)), 2);
    assert_eq!(code(&hapbeam(&["no-such-command"], d)), 2);

    assert_eq!(code(&hapbeam(&["calibrate", "--telemetry", "missing.csv"], d)), 3);
    fs::write(d.join("gap.csv"), "t,yaw_deg,pitch_deg,roll_deg\n0,0,0,0\n0.1,0,0,0\n0.35,0,0,0\n").unwrap();
    assert_eq!(code(&hapbeam(&["forecast-eval", "--telemetry", "gap.csv"], d)), 3);
    fs::write(d.join("short.toml"), format!("{SMALL}\n[attitude]\ntelemetry = \"gap.csv\"\n").replace("[run]\nsnapshots = 12\n", "")).unwrap();
    let out = hapbeam(&["run", "--config", "short.toml"], d);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
