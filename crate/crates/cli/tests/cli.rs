use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kgseries(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgseries"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("KGSERIES_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The machine-readable record is the last stderr line.
fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

fn fit_slope(csv: &str, column: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{column},")))
        .unwrap_or_else(|| panic!("no fit for {column} in\n{csv}"))
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn binary_tree_table() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys.txt");
    let out = kgseries(
        dir.path(),
        &[
            "trees",
            "--p",
            "2",
            "--max-order",
            "4",
            "--keys",
            keys.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "order,count,bound\n0,1,1\n1,1,4\n2,2,16\n3,5,64\n4,14,256\n"
    );
    let keys = std::fs::read_to_string(keys).unwrap();
    assert_eq!(keys.lines().count(), 1 + 1 + 2 + 5 + 14);
    assert_eq!(keys.lines().next(), Some("o"));
}

#[test]
fn linear_run_agrees_pairwise() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "classical",
            "--lambda",
            "0",
            "--order",
            "2",
            "--grid-n",
            "32",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&dir.path().join("classical.json"));
    assert_eq!(report["schema_version"], 1);
    for key in ["series_vs_reference", "series_vs_free", "reference_vs_free"] {
        let e = report["pairwise"][key].as_f64().unwrap();
        assert!(e < 1e-12, "{key} = {e:e}");
    }
    let ts = std::fs::read_to_string(dir.path().join("classical_timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,reference_norm,energy,error_0,error_1,error_2\n"));
    assert_eq!(ts.lines().count(), 1 + 51);
}

#[test]
fn quantum_order_zero_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(dir.path(), &["quantum", "--order", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&dir.path().join("quantum.json"));
    let m0 = &report["orders"][0];
    assert_eq!(m0["m"], 0);
    for part in ["field", "unitarity"] {
        for level in m0[part]["levels"].as_array().unwrap() {
            assert_eq!(level["deviation"].as_f64(), Some(0.0), "{part}");
        }
    }
    assert!(report["negative_control"].is_null());
}

#[test]
fn quantum_prefers_the_consistent_sign() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(dir.path(), &["quantum", "--order", "1", "--refine", "2"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&dir.path().join("quantum.json"));
    assert_eq!(report["consistent_sign"], "minus");
    assert!(report["chosen_sign"]["shortcut_m1"].as_f64().unwrap() < 1e-12);
    assert!(report["negative_control"]["shortcut_m1"].as_f64().unwrap() > 0.1);
}

#[test]
fn config_errors_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# bad run\nlambda = x\ngrid_n = 0\nwidth = 3\n").unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "classical",
            "--dt",
            "-1",
            "--phi0",
            "blob",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["category"], "config");
    let messages: Vec<&str> = rec["messages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    for needle in [
        "lambda=x",
        "blob",
        "grid_n",
        "dt must be positive",
        "unknown key width",
    ] {
        assert!(
            messages.iter().any(|m| m.contains(needle)),
            "{needle} missing from {messages:?}"
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "lambda = x\ngrid_n = 16\nreference_only = true\n").unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "classical",
            "--lambda",
            "0.1",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&dir.path().join("classical.json"));
    assert_eq!(report["config"]["lambda"], 0.1);
    assert_eq!(report["config"]["grid"]["n"], 16);
    assert!(report["orders"].as_array().unwrap().is_empty());
}

#[test]
fn small_cutoff_is_a_truncation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(dir.path(), &["quantum", "--order", "3", "--nmax", "2"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_record(&out)["category"], "truncation");
}

#[test]
fn blowup_is_a_divergence_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "classical",
            "--lambda",
            "1e6",
            "--reference-only",
            "--phi0",
            "gaussian:amp=5,width=0.5",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["category"], "divergence");
}

#[test]
fn sweep_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = kgseries(dir.path(), &["sweep", "--param", "lambda", "--values", ""]);
    assert_eq!(empty.status.code(), Some(2));
    let unsweepable = kgseries(dir.path(), &["sweep", "--param", "mass", "--values", "1,2"]);
    assert_eq!(unsweepable.status.code(), Some(2));
    assert!(error_record(&unsweepable)["messages"][0]
        .as_str()
        .unwrap()
        .contains("not sweepable"));
}

#[test]
fn lambda_sweep_fits_third_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "sweep",
            "--param",
            "lambda",
            "--values",
            "0.015625,0.03125,0.0625,0.125,0.25",
            "--set",
            "order=2",
            "--fit",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fits = std::fs::read_to_string(dir.path().join("sweep_fit.csv")).unwrap();
    let slope = fit_slope(&fits, "error_2");
    assert!((slope - 3.0).abs() < 0.1, "slope {slope}");
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 6);
    assert!(table.starts_with("lambda,lambda_max,"));
}

#[test]
fn dt_sweep_free_residual_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "sweep",
            "--param",
            "dt",
            "--values",
            "0.05,0.025,0.0125,0.00625",
            "--set",
            "lambda=0",
            "--set",
            "order=0",
            "--fit",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fits = std::fs::read_to_string(dir.path().join("sweep_fit.csv")).unwrap();
    let slope = fit_slope(&fits, "residual_0");
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn dtau_sweep_runs_the_quantum_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = kgseries(
        dir.path(),
        &[
            "sweep",
            "--param",
            "dtau",
            "--values",
            "0.05,0.025,0.0125",
            "--set",
            "order=2",
            "--fit",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fits = std::fs::read_to_string(dir.path().join("sweep_fit.csv")).unwrap();
    let slope = fit_slope(&fits, "field_dev_2");
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "classical",
        "--lambda",
        "0.2",
        "--order",
        "3",
        "--phi0",
        "random:seed=7,band=3,amp=0.4",
    ];
    for dir in [&a, &b] {
        assert!(kgseries(dir.path(), &args).status.success());
        assert!(kgseries(dir.path(), &["quantum", "--order", "2"])
            .status
            .success());
    }
    for name in ["classical.json", "classical_timeseries.csv", "quantum.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_kgseries"))
        .args(["convergence", "--order", "2", "--grid-n", "16"])
        .env("KGSERIES_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&target.join("convergence.json"));
    assert_eq!(report["all_bounds_hold"], true);
    assert_eq!(report["bounds"].as_array().unwrap().len(), 1 + 1 + 2);
}
