use std::fs;
use std::process::Command;

fn urllc(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_urllc"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "urllc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn first_line(path: &std::path::Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn thresholds_json() {
    let out = urllc(&["thresholds", "--epsilon", "1e-5", "--n", "128", "--d", "256"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r_min = v["r_min"].as_f64().unwrap();
    assert!((r_min - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    for key in ["nu0", "nu2", "nu3", "nu4", "vartheta"] {
        assert!(v[key].as_f64().unwrap() > 0.0, "{key}");
    }
}

#[test]
fn table1_header_and_rows() {
    let out = urllc(&["table1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "theta,alpha,series,exact,residual");
    assert_eq!(lines.count(), 250);
}

#[test]
fn mc_output_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    urllc(&[
        "mc", "--seed", "7", "--k", "2", "--trials", "3", "--workers", "2", "--objective", "zfbf", "--force", "--out", d,
    ]);
    assert_eq!(
        first_line(&dir.path().join("records.csv")),
        "trial,seed,feasible,status,objective,sum_rate,min_rate,total_power,min_sinr,\
         reference_sinr,required_power,outer_iterations,inner_iterations,rates"
    );
    assert_eq!(first_line(&dir.path().join("timings.csv")), "trial,wall_time_s");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 3);
    assert_eq!(summary["objective"], "zfbf");
}

#[test]
fn sweep_output_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    urllc(&[
        "sweep", "--seed", "7", "--k", "2", "--snr", "15,20", "--trials", "2", "--objective", "maxmin", "--force", "--out", d,
    ]);
    assert_eq!(
        first_line(&dir.path().join("sweep.csv")),
        "k_users,blocklength,snr_db,epsilon,objective,statistic,value"
    );
    assert_eq!(
        first_line(&dir.path().join("records.csv")),
        "k_users,blocklength,snr_db,epsilon,trial,seed,feasible,status,objective,sum_rate,min_rate,\
         total_power,min_sinr,reference_sinr,required_power,outer_iterations,inner_iterations,rates"
    );
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.contains(",min_rate_penalty,"));
}

#[test]
fn solve_prints_json() {
    let out = urllc(&["solve", "--seed", "3", "--k", "3", "--objective", "zfbf", "--force"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 3);
    assert!(v["solution"].is_object());
}

#[test]
fn invalid_config_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_urllc"))
        .args(["mc", "--seed", "1", "--k", "40", "--trials", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k_users"), "{err}");
}
