use std::path::Path;
use std::process::{Command, Output};

use koopcert::Dataset;

fn koopcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_koopcert"))
        .args(args)
        .output()
        .expect("spawn koopcert")
}

fn csv_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn check_theory_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = koopcert(&["check-theory", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("theory_checks.csv"));
    assert_eq!(rows[0], "name,lhs,rhs,margin,satisfied");
    assert!(rows.len() > 10);
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));
}

#[test]
fn budget_ablation_subset_writes_ninety_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = koopcert(&[
        "major-budget-ablation",
        "--seeds",
        "0-2",
        "--budgets",
        "8,20",
        "--output-dir",
        d,
        "--workers",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cases = csv_rows(&dir.path().join("cases.csv"));
    assert_eq!(cases.len(), 1 + 90);
    assert!(cases[0].starts_with("system,method,seed,budget"));
    for stem in [
        "tables/table1_summary.csv",
        "tables/table1_summary.md",
        "tables/table8_v4_downstream_tasks.csv",
        "figures/figure6_budget_sensitivity.csv",
        "figures/figureA1_creg_sigma_min_sanity.csv",
        "config.toml",
    ] {
        assert!(dir.path().join(stem).is_file(), "{stem}");
    }
    assert!(!dir.path().join("failed_cases.csv").exists());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("[90/90]"));
}

#[test]
fn csv_only_format_skips_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let out = koopcert(&[
        "weight-sensitivity",
        "--seeds",
        "0",
        "--systems",
        "duffing",
        "--format",
        "csv",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("tables/table9_v4_weight_sensitivity.csv")
        .is_file());
    assert!(!dir
        .path()
        .join("tables/table9_v4_weight_sensitivity.md")
        .exists());
    assert_eq!(csv_rows(&dir.path().join("cases.csv")).len(), 1 + 5);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["no-such-command"],
        vec!["smoke", "--seeds", "x-1"],
        vec!["smoke", "--seeds", "5-2"],
        vec!["smoke", "--methods", "NOPE"],
        vec!["smoke", "--systems", "pendulum"],
        vec!["smoke", "--budgets", "0"],
        vec!["smoke", "--format", "xml"],
    ] {
        let out = koopcert(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_or_missing_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "ridge_lambda = -1.0\n").unwrap();
    let out = koopcert(&["smoke", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("absent.toml");
    let out = koopcert(&["check-theory", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_overrides_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "[presets.smoke]\nseeds = [7]\nbudgets = [8]\nmethods = [\"RANDOM\"]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = koopcert(&[
        "smoke",
        "--config",
        cfg.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cases = csv_rows(&out_dir.join("cases.csv"));
    assert_eq!(cases.len(), 1 + 3);
    assert!(cases[1..].iter().all(|r| r.contains(",RANDOM,7,8,")));
    let saved = std::fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(saved.contains("[presets.smoke]"));
}

fn planted_dataset(path: &Path) {
    let mut d = Dataset::new(2, 1);
    for i in 0..12 {
        for j in 0..12 {
            let x = vec![-1.0 + i as f64 / 5.5, -1.0 + j as f64 / 5.5];
            let u = vec![((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0];
            let xn = vec![
                0.9 * x[0] + 0.1 * x[1],
                -0.2 * x[0] + 0.8 * x[1] + 0.1 * u[0],
            ];
            d.push(x, u, xn);
        }
    }
    d.write_csv(path).unwrap();
}

#[test]
fn report_prints_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    planted_dataset(&path);
    let out = koopcert(&["report", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n_samples"));
    assert!(text.contains("144"));
    assert!(text.contains("bottleneck"));

    let out = koopcert(&[
        "report",
        path.to_str().unwrap(),
        "--format",
        "csv",
        "--degree",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n_samples,c_dir,c_fr,c_rad,state_iso"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(
        lines[1].contains(",6,"),
        "5 lifted terms plus 1 input are active: {}",
        lines[1]
    );
}

#[test]
fn report_on_missing_file_exits_one() {
    let out = koopcert(&["report", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_timing_lists_ten_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = koopcert(&["bench-timing", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("tables/timing.csv"));
    assert_eq!(rows[0], "method,runs,mean_s,min_s,max_s");
    assert_eq!(rows.len(), 11);
}
