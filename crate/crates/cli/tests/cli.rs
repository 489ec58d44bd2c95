use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hh")).args(args).env("HH_THREADS", "2").output().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn identities_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = hh(&["identities", "--suite", "derivations", "--seed", "7", "--out", &out_arg(d.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = fs::read(a.path().join("derivations.json")).unwrap();
    assert_eq!(first, fs::read(b.path().join("derivations.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["suite"], "derivations");
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "paper_ref", "value", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
}

#[test]
fn kernel_decay_reports_three_slopes() {
    let d = tempfile::tempdir().unwrap();
    let o = hh(&["kernel-decay", "--l", "0,1,2", "--r-sweep", "2^-6:2^-1", "--out", &out_arg(d.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("kernel-decay.json"));
    assert_eq!(v["checks"].as_array().unwrap().len(), 3);
    assert_eq!(v["inputs"]["slopes"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(d.path().join("kernel-decay_loglog.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,series"));
    // six radii per order; x is log r
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 18);
    let x0: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert!((x0 - (2f64.powi(-6)).ln()).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let out = out_arg(d.path());
    let empty = hh(&["identities", "--suite", "", "--seed", "1", "--out", &out]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("suite"));
    let unseeded = hh(&["sparse-exp", "--out", &out]);
    assert_eq!(unseeded.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unseeded.stderr).contains("seed"));
    assert_eq!(hh(&["kernel-decay", "--r-sweep", "2^-2:2^-1", "--out", &out]).status.code(), Some(2));
    assert_eq!(hh(&["no-such-command"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_hh"))
        .args(["identities", "--suite", "gamma", "--out", &out])
        .env("HH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn config_file_entries_yield_to_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.ini");
    fs::write(&cfg, "# gamma run\nsuite = corollary\nlambda-grid = 0.5,4,1.2\n").unwrap();
    let out = out_arg(d.path());
    let o = hh(&["identities", "--config", cfg.to_str().unwrap(), "--suite", "gamma", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("gamma.json"));
    assert_eq!(v["config"]["suite"], "gamma");
    assert_eq!(v["config"]["lambda-grid"], "0.5,4,1.2");
    assert!(!d.path().join("corollary.json").exists());
}

#[test]
fn report_reemits_plots_and_names_missing_files() {
    let d = tempfile::tempdir().unwrap();
    let o = hh(&["identities", "--suite", "gamma", "--out", &out_arg(d.path())]);
    assert_eq!(o.status.code(), Some(0));
    let plots = tempfile::tempdir().unwrap();
    let report = d.path().join("gamma.json");
    let o = hh(&["report", report.to_str().unwrap(), "--out", &out_arg(plots.path())]);
    assert_eq!(o.status.code(), Some(0));
    let name = "gamma_gamma_eigenvalue.csv";
    assert_eq!(fs::read(plots.path().join(name)).unwrap(), fs::read(d.path().join(name)).unwrap());
    let axes = json(&plots.path().join("gamma_gamma_eigenvalue.axes.json"));
    assert_eq!(axes["x"], "k");
    let missing = d.path().join("absent.json");
    let o = hh(&["report", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.json"));
}
