//! CSV and markdown table emission.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::BootstrapConfig;
use super::preset::Output;
use super::run::{CaseFailure, CaseOutcome, CaseResult, METRICS};
use super::summary::{quality_checks, summarize, MetricSummary, SummaryRow, DZ_METRICS};

/// Formats a float at 12 significant digits with the shortest round-tripping text.
pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Three significant digits for markdown cells.
pub fn fmt_short(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return fmt_float(v);
    }
    let rounded: f64 = format!("{v:.2e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-4..1e6).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(usize),
    /// Mean with interval; three CSV columns, one markdown cell.
    Ci(MetricSummary),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn is_ci(&self, j: usize) -> bool {
        self.rows
            .first()
            .is_some_and(|r| matches!(r[j], Cell::Ci(_)))
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = Vec::new();
        for (j, c) in self.columns.iter().enumerate() {
            h.push(c.clone());
            if self.is_ci(j) {
                h.push(format!("{c}_ci_lo"));
                h.push(format!("{c}_ci_hi"));
            }
        }
        h
    }

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut rec = Vec::new();
                for cell in row {
                    match cell {
                        Cell::Text(s) => rec.push(s.clone()),
                        Cell::Num(v) => rec.push(fmt_float(*v)),
                        Cell::Int(v) => rec.push(v.to_string()),
                        Cell::Ci(s) => {
                            rec.extend([fmt_float(s.mean), fmt_float(s.ci_lo), fmt_float(s.ci_hi)])
                        }
                        Cell::Empty => rec.push(String::new()),
                    }
                }
                rec
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(self.csv_header()).map_err(csv_err)?;
        for rec in self.csv_records() {
            w.write_record(rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", self.columns.join(" | "));
        s.push_str(&format!("|{}\n", "---|".repeat(self.columns.len())));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(t) => t.clone(),
                    Cell::Num(v) => fmt_short(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Ci(m) => format!(
                        "{} [{}, {}]",
                        fmt_short(m.mean),
                        fmt_short(m.ci_lo),
                        fmt_short(m.ci_hi)
                    ),
                    Cell::Empty => String::new(),
                })
                .collect();
            s.push_str(&format!("| {} |\n", cells.join(" | ")));
        }
        s
    }

    pub fn write_markdown(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_markdown()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

const CASE_KEYS: [&str; 5] = ["system", "method", "seed", "budget", "degree"];

fn case_key_cells(r: &CaseResult) -> Vec<Cell> {
    vec![
        Cell::Text(r.case.system.name().into()),
        Cell::Text(r.case.method.name().into()),
        Cell::Int(r.case.seed as usize),
        Cell::Int(r.case.budget),
        Cell::Int(r.case.degree),
    ]
}

fn metric_cell(r: &CaseResult, m: &str) -> Cell {
    match m {
        "n_samples" => Cell::Int(r.n_samples),
        "active_rank" => Cell::Int(r.active_rank),
        "active_dim" => Cell::Int(r.active_dim),
        "prediction_failed" => Cell::Text(r.prediction_failed.to_string()),
        "control_failed" => Cell::Text(r.control_failed.to_string()),
        _ => Cell::Num(r.metric(m).expect("known metric")),
    }
}

/// All case columns, including wall-clock time.
pub fn cases_table(rows: &[CaseResult]) -> Table {
    let mut cols: Vec<&str> = CASE_KEYS.to_vec();
    cols.extend(METRICS);
    cols.push("wall_clock_s");
    let mut t = Table::new(&cols);
    for r in rows {
        let mut row = case_key_cells(r);
        row.extend(METRICS.iter().map(|m| metric_cell(r, m)));
        row.push(Cell::Num(r.wall_clock_s));
        t.rows.push(row);
    }
    t
}

/// Per-case columns selected by name, for figure data.
pub fn case_columns(rows: &[CaseResult], metrics: &[&str]) -> Table {
    let mut cols: Vec<&str> = CASE_KEYS.to_vec();
    cols.extend(metrics);
    let mut t = Table::new(&cols);
    for r in rows {
        let mut row = case_key_cells(r);
        row.extend(metrics.iter().map(|m| metric_cell(r, m)));
        t.rows.push(row);
    }
    t
}

pub fn failures_table(failures: &[CaseFailure]) -> Table {
    let mut cols: Vec<&str> = CASE_KEYS.to_vec();
    cols.push("message");
    let mut t = Table::new(&cols);
    for f in failures {
        t.rows.push(vec![
            Cell::Text(f.case.system.name().into()),
            Cell::Text(f.case.method.name().into()),
            Cell::Int(f.case.seed as usize),
            Cell::Int(f.case.budget),
            Cell::Int(f.case.degree),
            Cell::Text(f.message.clone()),
        ]);
    }
    t
}

/// Extra summary columns that are not plain mean/interval triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extra {
    FailureRates,
    Dz,
}

pub fn summary_table(summary: &[SummaryRow], metrics: &[&str], extras: &[Extra]) -> Table {
    let mut cols = vec!["system", "method", "budget", "degree", "n"];
    cols.extend(metrics);
    let dz_names: Vec<String> = DZ_METRICS
        .iter()
        .map(|(_, s)| format!("dz_{s}_vs_IGPE"))
        .collect();
    for e in extras {
        match e {
            Extra::FailureRates => cols.extend(["prediction_failure_rate", "control_failure_rate"]),
            Extra::Dz => cols.extend(dz_names.iter().map(String::as_str)),
        }
    }
    let mut t = Table::new(&cols);
    for s in summary {
        let mut row = vec![
            Cell::Text(s.key.system.name().into()),
            Cell::Text(s.key.method.name().into()),
            Cell::Int(s.key.budget),
            Cell::Int(s.key.degree),
            Cell::Int(s.n),
        ];
        row.extend(metrics.iter().map(|m| Cell::Ci(s.metric(m))));
        for e in extras {
            match e {
                Extra::FailureRates => row.extend([
                    Cell::Num(s.metric("prediction_failed").mean),
                    Cell::Num(s.metric("control_failed").mean),
                ]),
                Extra::Dz => row.extend(
                    DZ_METRICS
                        .iter()
                        .map(|(m, _)| s.dz[m].value.map_or(Cell::Empty, Cell::Num)),
                ),
            }
        }
        t.rows.push(row);
    }
    t
}

const SUMMARY_METRICS: [&str; 14] = [
    "state_iso",
    "lift_iso",
    "regression_iso",
    "regression_cov_z_min",
    "sigma_min_bar_phi",
    "regression_logdet",
    "active_rank",
    "active_dim",
    "std_gpe_index",
    "one_step_lift_rmse",
    "one_step_state_rmse",
    "open_loop_rmse",
    "tracking_rmse",
    "n_samples",
];

pub fn quality_table(rows: &[CaseResult], failed_cases: usize) -> Table {
    let mut t = Table::new(&["metric", "n_rows", "n_nonfinite", "n_nan", "n_failures"]);
    for q in quality_checks(rows, failed_cases) {
        t.rows.push(vec![
            Cell::Text(q.metric),
            Cell::Int(q.n_rows),
            Cell::Int(q.n_nonfinite),
            Cell::Int(q.n_nan),
            Cell::Int(q.n_failures),
        ]);
    }
    t
}

/// Builds the table for one output file.
pub fn build_output(
    output: Output,
    rows: &[CaseResult],
    summary: &[SummaryRow],
    failed_cases: usize,
) -> Table {
    use Extra::*;
    match output {
        Output::Cases => cases_table(rows),
        Output::Table1 => summary_table(summary, &SUMMARY_METRICS, &[FailureRates, Dz]),
        Output::Table5 => quality_table(rows, failed_cases),
        Output::Table6 => summary_table(
            summary,
            &[
                "state_iso",
                "lift_iso",
                "regression_iso",
                "active_rank",
                "active_dim",
            ],
            &[],
        ),
        Output::Table7 => summary_table(
            summary,
            &[
                "std_gpe_index",
                "regression_iso",
                "one_step_lift_rmse",
                "open_loop_rmse",
                "tracking_rmse",
            ],
            &[],
        ),
        Output::Table8 => summary_table(
            summary,
            &["open_loop_rmse", "tracking_rmse"],
            &[FailureRates, Dz],
        ),
        Output::Table9 => summary_table(
            summary,
            &[
                "regression_iso",
                "one_step_lift_rmse",
                "open_loop_rmse",
                "tracking_rmse",
            ],
            &[],
        ),
        Output::Figure6 => summary_table(
            summary,
            &[
                "state_iso",
                "lift_iso",
                "regression_iso",
                "std_gpe_index",
                "open_loop_rmse",
                "tracking_rmse",
            ],
            &[],
        ),
        Output::Figure9 => case_columns(
            rows,
            &["state_iso", "lift_iso", "regression_iso", "std_gpe_index"],
        ),
        Output::Figure10 => {
            let mut t = case_columns(
                rows,
                &[
                    "n_samples",
                    "regression_cov_z_min",
                    "sigma_min_bar_phi",
                    "one_step_lift_rmse",
                    "one_step_state_rmse",
                ],
            );
            t.columns.push("n_creg".into());
            for (row, r) in t.rows.iter_mut().zip(rows) {
                row.push(Cell::Num(r.n_samples as f64 * r.regression_cov_z_min));
            }
            t
        }
        Output::Figure11 => {
            case_columns(rows, &["regression_iso", "open_loop_rmse", "tracking_rmse"])
        }
        Output::FigureA1 => {
            let mut t = case_columns(rows, &["sigma_min_bar_phi"]);
            t.columns
                .extend(["sqrt_n_creg".into(), "relative_error".into()]);
            for (row, r) in t.rows.iter_mut().zip(rows) {
                row.push(Cell::Num(
                    (r.n_samples as f64 * r.regression_cov_z_min).sqrt(),
                ));
                row.push(Cell::Num(r.identity_error()));
            }
            t
        }
    }
}

fn output_path(dir: &Path, output: Output, ext: &str) -> PathBuf {
    let sub = match output {
        Output::Cases => dir.to_path_buf(),
        o if o.is_figure() => dir.join("figures"),
        _ => dir.join("tables"),
    };
    sub.join(format!("{}.{ext}", output.stem()))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the requested outputs plus `failed_cases.csv` when any case failed.
///
/// Tables get a markdown mirror when `markdown` is set; figure data is CSV only.
pub fn emit_tables(
    outputs: &[Output],
    outcomes: &[CaseOutcome],
    boot: &BootstrapConfig,
    output_dir: &Path,
    markdown: bool,
) -> Result<Vec<PathBuf>> {
    let rows: Vec<CaseResult> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok().cloned())
        .collect();
    let failures: Vec<CaseFailure> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().cloned())
        .collect();
    let summary = if rows.is_empty() {
        Vec::new()
    } else {
        summarize(&rows, boot)
    };
    create_dir(output_dir)?;
    let mut written = Vec::new();
    for &o in outputs {
        let csv_path = output_path(output_dir, o, "csv");
        create_dir(csv_path.parent().expect("output file has a parent"))?;
        let table = build_output(o, &rows, &summary, failures.len());
        table.write_csv(&csv_path)?;
        written.push(csv_path);
        if markdown && !o.is_figure() && o != Output::Cases {
            let md = output_path(output_dir, o, "md");
            table.write_markdown(&md)?;
            written.push(md);
        }
    }
    if !failures.is_empty() {
        let path = output_dir.join("failed_cases.csv");
        failures_table(&failures).write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}
