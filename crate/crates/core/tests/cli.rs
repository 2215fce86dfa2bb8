//! End-to-end runs of the `pfml` binary.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use pfml::prelude::*;

fn pfml(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfml"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("PFML_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Header and rows of a CSV with `# ` preamble lines.
fn table(path: impl AsRef<Path>) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(path);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pfml(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(pfml(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(pfml(&["simulate", "--N", "many"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "particles = 3\n").unwrap();
    let o = pfml(&["identify", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("particles"));
    for args in [
        &["identify", "--repeats", "0"][..],
        &["identify", "--model", "nope"],
        &["identify", "--data", "/nonexistent/data.csv"],
        &["grid", "--model", "lgss", "--component", "zz", "--lower", "0", "--upper", "1"],
    ] {
        assert_eq!(pfml(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let o = pfml(&["simulate", "--T", "100", "--seed", "1"], &a);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("seed 1"));
    pfml(&["simulate", "--T", "100", "--seed", "1"], &b);
    pfml(&["simulate", "--T", "100", "--seed", "2"], &c);
    let bytes = |d: &Path| std::fs::read(d.join("dataset.csv")).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(bytes(&a), bytes(&c));
    let (header, rows) = table(a.join("dataset.csv"));
    assert_eq!(header, ["t", "y_1", "x_1"]);
    assert_eq!(rows.len(), 100);
    assert!(read(a.join("dataset.csv")).starts_with("# "));
    assert!(a.join("dataset.json").is_file());
    let data = Dataset::read(&a.join("dataset.csv")).unwrap();
    assert_eq!(data.len(), 100);
}

#[test]
fn example2_dataset_carries_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfml(&["simulate", "--model", "example2", "--T", "1000"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = table(dir.path().join("dataset.csv"));
    assert_eq!(header, ["t", "y_1", "x_1", "u_1"]);
    assert_eq!(rows.len(), 1000);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pfml"));
        cmd.args(["simulate", "--T", "5", "--out"]).arg(dir.path()).args(extra).env_remove("PFML_SEED");
        if let Some(s) = env {
            cmd.env("PFML_SEED", s);
        }
        stdout(&cmd.output().unwrap()).lines().next().unwrap().to_string()
    };
    let file = dir.path().join("c.toml");
    std::fs::write(&file, "seed = 5\n").unwrap();
    let cfg = file.to_str().unwrap();
    assert_eq!(run(&[], None), "seed 1");
    assert_eq!(run(&[], Some("9")), "seed 9");
    assert_eq!(run(&["--config", cfg], Some("9")), "seed 5");
    assert_eq!(run(&["--config", cfg, "--seed", "7"], Some("9")), "seed 7");
}

#[test]
fn grid_reference_row_is_online_estimate_and_has_kalman_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let o = pfml(
        &["grid", "--model", "lgss", "--T", "40", "--N", "80", "--component", "a", "--lower", "0.5", "--upper", "0.9"]
            .iter()
            .chain(&["--points", "5", "--repeat", "3", "--theta-ref", "0.7"])
            .copied()
            .collect::<Vec<_>>(),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(dir.path().join("grid_surfaces.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows.len(), 3 * 5);
    let m = Lgss::default_scalar();
    let data = simulate(&m, &m.true_theta().unwrap(), 40, RngStream::new(1, 0)).unwrap();
    for row in &rows {
        let a: f64 = row[col("a")].parse().unwrap();
        if a == 0.7 {
            assert_eq!(row[col("loglik")], row[col("online_loglik")]);
        }
        let exact: f64 = row[col("exact_loglik")].parse().unwrap();
        assert!((exact - m.kalman_loglik(&[a], &data).unwrap()).abs() < 1e-9);
    }
    let repeats: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[col("repeat")].as_str()).collect();
    assert_eq!(repeats.len(), 3);
}

#[test]
fn degeneracy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    pfml(&["simulate", "--model", "lgss", "--T", "10"], dir.path());
    let path = dir.path().join("dataset.csv");
    let text: String = read(&path)
        .lines()
        .map(|l| if l.starts_with("5,") { format!("5,1e300,{}", l.rsplit(',').next().unwrap()) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&path, text + "\n").unwrap();
    let data = path.to_str().unwrap();
    let o = pfml(
        &["identify", "--model", "lgss", "--data", data, "--repeats", "2", "--K", "2", "--burn-in", "0", "--bins", "1"],
        &dir.path().join("i"),
    );
    assert_eq!(o.status.code(), Some(3));
    let o = pfml(
        &["grid", "--model", "lgss", "--data", data, "--component", "a", "--lower", "0.5", "--upper", "0.9"],
        &dir.path().join("g"),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn identify_smoke_is_fast_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["identify", "--repeats", "1", "--K", "1", "--burn-in", "0", "--bins", "1"];
    let start = Instant::now();
    let o = pfml(&args, &dir.path().join("a"));
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(o.status.code(), Some(0));
    pfml(&args, &dir.path().join("b"));
    for f in ["summary.json", "traces.csv", "estimate_hist.csv", "traces/repeat_000.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/summary.json"))).unwrap();
    assert_eq!(summary["estimate"]["theta_hat"].as_array().unwrap().len(), 2);
    assert_eq!(summary["completed_repeats"], 1);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/manifest.json"))).unwrap();
    assert!(manifest.to_string().contains("seed"));
}

#[test]
fn compare_sgd_outputs_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["compare-sgd", "--T", "50", "--N", "50", "--K", "3", "--repeats", "2", "--burn-in", "0", "--bins", "2"];
    let o = pfml(&args, &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["compare_proposed.csv", "compare_sgd.csv", "compare_summary.json"] {
        assert!(dir.path().join("a").join(f).is_file(), "{f}");
    }
    let (header, rows) = table(dir.path().join("a/compare_sgd.csv"));
    assert!(header.iter().any(|h| h == "distance"), "{header:?}");
    assert!(!rows.is_empty());

    let cfg = dir.path().join("wild.toml");
    std::fs::write(&cfg, "[sgd]\ngamma0 = 1e6\nalpha = 0.6\n").unwrap();
    let mut wild = args.to_vec();
    wild.extend(["--config", cfg.to_str().unwrap()]);
    let o = pfml(&wild, &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path().join("b/compare_summary.json"))).unwrap();
    assert!(summary["sgd_divergences"].as_u64().unwrap() > 0, "{summary}");
}

#[test]
fn normalization_flag_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["identify", "--repeats", "1", "--K", "2", "--burn-in", "0", "--bins", "1", "--model", "lgss"];
    let mut all = args.to_vec();
    all.extend(["--normalization", "all-particles"]);
    assert_eq!(pfml(&all, &dir.path().join("a")).status.code(), Some(0));
    assert_eq!(pfml(&args, &dir.path().join("b")).status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/summary.json"))).unwrap();
    let b: serde_json::Value = serde_json::from_str(&read(dir.path().join("b/summary.json"))).unwrap();
    assert_eq!(a["config"]["normalization"], "all-particles");
    assert_eq!(b["config"]["normalization"], "resampled-ancestors");
    assert!(read(dir.path().join("a/traces.csv")).contains("# normalization = \"all-particles\""));
    assert_eq!(pfml(&["identify", "--normalization", "sideways"], dir.path()).status.code(), Some(2));
}
