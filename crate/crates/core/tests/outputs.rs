use std::path::Path;

use koopcert::acquisition::MethodId;
use koopcert::harness::{emit_tables, run_cases, CaseSpec, HarnessConfig, PresetName};
use koopcert::systems::SystemId;

fn small_cfg() -> HarnessConfig {
    let mut cfg = HarnessConfig::default();
    cfg.acquisition.library_size = 64;
    cfg.bootstrap.n_boot = 500;
    cfg
}

fn cases(cfg: &HarnessConfig) -> Vec<CaseSpec> {
    let mut v = Vec::new();
    for system in [SystemId::Duffing, SystemId::Lorenz] {
        for method in [MethodId::Random, MethodId::RegDopt, MethodId::IgpeDopt] {
            for seed in 0..3 {
                v.push(CaseSpec {
                    system,
                    method,
                    seed,
                    budget: 8,
                    degree: cfg.systems.degree(system),
                });
            }
        }
    }
    v
}

fn emit(dir: &Path, preset: PresetName) {
    let cfg = small_cfg();
    let out = run_cases(&cfg, &cases(&cfg), 2, &|_, _| {}).unwrap();
    emit_tables(preset.outputs(), &out, &cfg.bootstrap, dir, true).unwrap();
}

fn read(dir: &Path, rel: &str) -> String {
    std::fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Drops the trailing wall_clock_s column.
fn strip_timing(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn rerun_gives_identical_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    emit(a.path(), PresetName::MajorBudgetAblation);
    emit(b.path(), PresetName::MajorBudgetAblation);
    for rel in [
        "tables/table1_summary.csv",
        "tables/table5_quality_checks.csv",
        "tables/table6_v4_certificate_hierarchy.csv",
        "tables/table6_v4_certificate_hierarchy.md",
        "tables/table8_v4_downstream_tasks.csv",
        "figures/figure6_budget_sensitivity.csv",
        "figures/figure9_certificate_hierarchy.csv",
        "figures/figureA1_creg_sigma_min_sanity.csv",
    ] {
        assert_eq!(read(a.path(), rel), read(b.path(), rel), "{rel}");
    }
    assert_eq!(
        strip_timing(&read(a.path(), "cases.csv")),
        strip_timing(&read(b.path(), "cases.csv"))
    );
}

#[test]
fn preset_writes_only_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    emit(dir.path(), PresetName::WeightSensitivity);
    assert!(dir
        .path()
        .join("tables/table9_v4_weight_sensitivity.csv")
        .is_file());
    assert!(dir
        .path()
        .join("tables/table5_quality_checks.csv")
        .is_file());
    assert!(!dir
        .path()
        .join("tables/table6_v4_certificate_hierarchy.csv")
        .exists());
    assert!(!dir.path().join("figures").exists());
}

#[test]
fn summary_rows_bracket_the_mean_and_self_dz_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    emit(dir.path(), PresetName::Smoke);
    let mut rdr =
        csv::Reader::from_path(dir.path().join("tables/table8_v4_downstream_tasks.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2 * 3);
    for r in &rows {
        let f = |name: &str| r[col(name)].parse::<f64>().unwrap();
        assert!(f("open_loop_rmse_ci_lo") <= f("open_loop_rmse"));
        assert!(f("open_loop_rmse") <= f("open_loop_rmse_ci_hi"));
        if &r[col("method")] == "IGPE-DOPT" {
            assert_eq!(f("dz_open_loop_vs_IGPE"), 0.0);
            assert_eq!(f("dz_tracking_vs_IGPE"), 0.0);
        }
    }
    let quality = read(dir.path(), "tables/table5_quality_checks.csv");
    for line in quality.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[2], f[3]), ("0", "0"), "{line}");
    }
}
