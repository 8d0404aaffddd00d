//! Group means with bootstrap intervals, paired effect sizes and quality counts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::MethodId;
use crate::systems::SystemId;

use super::config::BootstrapConfig;
use super::run::{CaseResult, METRICS};

/// Metrics that get a paired effect size against IGPE-DOPT, with their column suffix.
pub const DZ_METRICS: [(&str, &str); 2] = [
    ("open_loop_rmse", "open_loop"),
    ("tracking_rmse", "tracking"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DzFlag {
    Ok,
    /// Fewer than two pairs or zero spread of the differences; value reported as 0.
    ZeroVariance,
    /// No IGPE-DOPT case at a matching seed; value omitted.
    MissingPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dz {
    pub value: Option<f64>,
    pub flag: DzFlag,
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupKey {
    pub system: SystemId,
    pub method: MethodId,
    pub budget: usize,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub key: GroupKey,
    pub n: usize,
    pub metrics: BTreeMap<&'static str, MetricSummary>,
    /// Keyed by the metric column name.
    pub dz: BTreeMap<&'static str, Dz>,
}

impl SummaryRow {
    pub fn metric(&self, name: &str) -> MetricSummary {
        self.metrics[name]
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval of the mean.
pub fn bootstrap_ci(values: &[f64], boot: &BootstrapConfig) -> (f64, f64) {
    assert!(!values.is_empty(), "bootstrap of an empty group");
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(boot.seed);
    let mut means: Vec<f64> = (0..boot.n_boot)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - boot.level) / 2.0;
    (quantile(&means, tail), quantile(&means, 1.0 - tail))
}

pub fn summarize_values(values: &[f64], boot: &BootstrapConfig) -> MetricSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = bootstrap_ci(values, boot);
    // Percentile bounds can miss the plug-in mean on very skewed small groups.
    MetricSummary {
        mean,
        ci_lo: lo.min(mean),
        ci_hi: hi.max(mean),
    }
}

/// Cohen's dz of `a - b` over seeds present in both.
pub fn paired_dz(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> Dz {
    let diffs: Vec<f64> = a
        .iter()
        .filter_map(|(s, x)| b.get(s).map(|y| x - y))
        .collect();
    let pairs = diffs.len();
    if pairs == 0 {
        return Dz {
            value: None,
            flag: DzFlag::MissingPair,
            pairs,
        };
    }
    let mean = diffs.iter().sum::<f64>() / pairs as f64;
    let sd = if pairs > 1 {
        (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (pairs - 1) as f64).sqrt()
    } else {
        0.0
    };
    if sd > 0.0 && sd.is_finite() {
        Dz {
            value: Some(mean / sd),
            flag: DzFlag::Ok,
            pairs,
        }
    } else {
        Dz {
            value: Some(0.0),
            flag: DzFlag::ZeroVariance,
            pairs,
        }
    }
}

fn group_key(r: &CaseResult) -> GroupKey {
    GroupKey {
        system: r.case.system,
        method: r.case.method,
        budget: r.case.budget,
        degree: r.case.degree,
    }
}

/// Groups by (system, method, budget, degree); output sorted by system name, then key.
pub fn summarize(rows: &[CaseResult], boot: &BootstrapConfig) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&CaseResult>> = BTreeMap::new();
    for r in rows {
        groups.entry(group_key(r)).or_default().push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| r.case.seed);
    }
    let by_seed = |g: &[&CaseResult], metric: &str| -> BTreeMap<u64, f64> {
        g.iter()
            .map(|r| (r.case.seed, r.metric(metric).expect("known metric")))
            .collect()
    };
    let mut out: Vec<SummaryRow> = groups
        .iter()
        .map(|(key, g)| {
            let metrics = METRICS
                .iter()
                .map(|&m| {
                    let v: Vec<f64> = g
                        .iter()
                        .map(|r| r.metric(m).expect("known metric"))
                        .collect();
                    (m, summarize_values(&v, boot))
                })
                .collect();
            let reference = groups.get(&GroupKey {
                method: MethodId::IgpeDopt,
                ..*key
            });
            let dz = DZ_METRICS
                .iter()
                .map(|&(m, _)| {
                    let d = match reference {
                        Some(refg) => paired_dz(&by_seed(g, m), &by_seed(refg, m)),
                        None => Dz {
                            value: None,
                            flag: DzFlag::MissingPair,
                            pairs: 0,
                        },
                    };
                    (m, d)
                })
                .collect();
            SummaryRow {
                key: *key,
                n: g.len(),
                metrics,
                dz,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.key.system.name(), a.key).cmp(&(b.key.system.name(), b.key)));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityRow {
    pub metric: String,
    pub n_rows: usize,
    pub n_nonfinite: usize,
    pub n_nan: usize,
    pub n_failures: usize,
}

/// Per-metric nonfinite and NaN counts, failure flags, and a final row for cases that did not complete.
pub fn quality_checks(rows: &[CaseResult], failed_cases: usize) -> Vec<QualityRow> {
    let mut out: Vec<QualityRow> = METRICS
        .iter()
        .chain(["wall_clock_s"].iter())
        .map(|&m| {
            let vals: Vec<f64> = rows
                .iter()
                .map(|r| r.metric(m).expect("known metric"))
                .collect();
            let n_failures = match m {
                "open_loop_rmse" => rows.iter().filter(|r| r.prediction_failed).count(),
                "tracking_rmse" => rows.iter().filter(|r| r.control_failed).count(),
                _ => 0,
            };
            QualityRow {
                metric: m.to_string(),
                n_rows: vals.len(),
                n_nonfinite: vals.iter().filter(|v| !v.is_finite()).count(),
                n_nan: vals.iter().filter(|v| v.is_nan()).count(),
                n_failures,
            }
        })
        .collect();
    out.push(QualityRow {
        metric: "case".into(),
        n_rows: rows.len() + failed_cases,
        n_nonfinite: 0,
        n_nan: 0,
        n_failures: failed_cases,
    });
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::harness::preset::CaseSpec;
    use proptest::prelude::*;

    pub(crate) fn fake(system: SystemId, method: MethodId, seed: u64, v: f64) -> CaseResult {
        CaseResult {
            case: CaseSpec {
                system,
                method,
                seed,
                budget: 40,
                degree: 3,
            },
            n_samples: 480,
            c_dir: 0.5,
            c_fr: 0.5,
            c_rad: 0.5,
            state_iso: v,
            lift_iso: v,
            regression_iso: v,
            regression_cov_z_min: 0.01,
            sigma_min_bar_phi: (4.8f64).sqrt(),
            regression_logdet: -3.0,
            active_rank: 10,
            active_dim: 10,
            std_gpe_index: v,
            one_step_lift_rmse: v,
            one_step_state_rmse: v,
            open_loop_rmse: v,
            tracking_rmse: v,
            prediction_failed: false,
            control_failed: false,
            wall_clock_s: 0.1,
        }
    }

    fn boot() -> BootstrapConfig {
        BootstrapConfig::default()
    }

    #[test]
    fn constant_group_has_degenerate_interval() {
        let s = summarize_values(&[2.5; 7], &boot());
        assert_eq!((s.mean, s.ci_lo, s.ci_hi), (2.5, 2.5, 2.5));
    }

    #[test]
    fn one_to_five_interval() {
        let b = BootstrapConfig { seed: 0, ..boot() };
        let s = summarize_values(&[1.0, 2.0, 3.0, 4.0, 5.0], &b);
        assert_eq!(s.mean, 3.0);
        assert!(s.ci_lo < 3.0 && s.ci_hi > 3.0);
        assert!(s.ci_lo >= 1.0 && s.ci_hi <= 5.0);
        // normal-theory half width is 1.96 * sqrt(2/5) ~ 1.24; bootstrap sits close to it
        assert!((s.ci_hi - s.ci_lo - 2.48).abs() < 0.35, "{s:?}");
    }

    #[test]
    fn dz_against_itself_is_zero() {
        let rows: Vec<CaseResult> = (0..5)
            .map(|s| fake(SystemId::Duffing, MethodId::IgpeDopt, s, s as f64))
            .collect();
        let out = summarize(&rows, &boot());
        for (_, d) in &out[0].dz {
            assert_eq!(d.value, Some(0.0));
            assert_eq!(d.flag, DzFlag::ZeroVariance);
        }
    }

    #[test]
    fn dz_known_value_and_missing_pair() {
        let mut rows = Vec::new();
        for (s, d) in [(0u64, 1.0), (1, 2.0), (2, 3.0)] {
            rows.push(fake(SystemId::Vdp, MethodId::IgpeDopt, s, 10.0));
            rows.push(fake(SystemId::Vdp, MethodId::Random, s, 10.0 + d));
        }
        rows.push(fake(SystemId::Lorenz, MethodId::Random, 0, 1.0));
        let out = summarize(&rows, &boot());
        let random_vdp = out
            .iter()
            .find(|r| r.key.system == SystemId::Vdp && r.key.method == MethodId::Random)
            .unwrap();
        // diffs 1,2,3: mean 2, sd 1
        let d = random_vdp.dz["open_loop_rmse"];
        assert_eq!((d.value, d.flag, d.pairs), (Some(2.0), DzFlag::Ok, 3));
        let lorenz = out
            .iter()
            .find(|r| r.key.system == SystemId::Lorenz)
            .unwrap();
        assert_eq!(lorenz.dz["tracking_rmse"].flag, DzFlag::MissingPair);
        assert_eq!(lorenz.dz["tracking_rmse"].value, None);
        // duffing < lorenz < vdp
        let order: Vec<&str> = out.iter().map(|r| r.key.system.name()).collect();
        assert_eq!(order, ["lorenz", "vdp", "vdp"]);
    }

    #[test]
    fn quality_counts() {
        assert!(quality_checks(&[], 0).iter().all(|q| q.n_rows == 0));
        let mut bad = fake(SystemId::Duffing, MethodId::Random, 0, 1.0);
        bad.open_loop_rmse = f64::NAN;
        bad.tracking_rmse = f64::INFINITY;
        bad.control_failed = true;
        let rows = vec![bad, fake(SystemId::Duffing, MethodId::Random, 1, 1.0)];
        let q = quality_checks(&rows, 2);
        let get = |m: &str| q.iter().find(|r| r.metric == m).unwrap().clone();
        assert_eq!(
            (
                get("open_loop_rmse").n_nan,
                get("open_loop_rmse").n_nonfinite
            ),
            (1, 1)
        );
        assert_eq!(
            (get("tracking_rmse").n_nan, get("tracking_rmse").n_nonfinite),
            (0, 1)
        );
        assert_eq!(get("tracking_rmse").n_failures, 1);
        assert_eq!(get("state_iso").n_nonfinite, 0);
        assert_eq!((get("case").n_rows, get("case").n_failures), (4, 2));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn summary_is_row_order_invariant(
            vals in prop::collection::vec(-5.0f64..5.0, 6),
            perm_seed in any::<u64>(),
        ) {
            let mut rows = Vec::new();
            for (i, v) in vals.iter().enumerate() {
                let m = if i % 2 == 0 { MethodId::IgpeDopt } else { MethodId::Sobol };
                rows.push(fake(SystemId::Duffing, m, (i / 2) as u64, *v));
            }
            let b = BootstrapConfig { n_boot: 200, ..BootstrapConfig::default() };
            let base = summarize(&rows, &b);
            let mut shuffled = rows.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rand::Rng::random_range(&mut rng, 0..=i));
            }
            prop_assert_eq!(summarize(&shuffled, &b), base.clone());
            for row in &base {
                for s in row.metrics.values() {
                    prop_assert!(s.ci_lo <= s.mean && s.mean <= s.ci_hi);
                }
            }
        }

        #[test]
        fn dz_numerator_is_antisymmetric(
            a in prop::collection::vec(-5.0f64..5.0, 2..8),
            shift in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            let x: BTreeMap<u64, f64> = a.iter().enumerate().map(|(i, v)| (i as u64, *v)).collect();
            let y: BTreeMap<u64, f64> = a.iter().enumerate().map(|(i, v)| (i as u64, v + shift[i])).collect();
            let ab = paired_dz(&x, &y);
            let ba = paired_dz(&y, &x);
            prop_assert_eq!(ab.pairs, ba.pairs);
            prop_assert!((ab.value.unwrap() + ba.value.unwrap()).abs() < 1e-12);
        }
    }
}
