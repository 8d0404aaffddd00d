//! Per-case execution and the worker pool.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::acquisition::{acquire, AcquireRequest, AcquisitionConfig, MethodId};
use crate::certificates::{full_report, CertificateConfig};
use crate::downstream::{evaluate_tasks, TaskConfig};
use crate::edmdc::{fit, one_step_errors_on};
use crate::error::{Error, Result};
use crate::lifting::{build_design, Dictionary};
use crate::systems::{SystemId, SystemSpec};

use super::config::HarnessConfig;
use super::preset::CaseSpec;

/// Everything a case needs that does not depend on method, seed or budget.
#[derive(Debug, Clone)]
pub struct CaseContext {
    pub spec: SystemSpec,
    pub dict: Dictionary,
    /// Certificate configuration with the reference density calibrated for the state dimension.
    pub cert: CertificateConfig,
    pub acq: AcquisitionConfig,
    pub task: TaskConfig,
    pub ridge_lambda: f64,
}

impl CaseContext {
    pub fn new(cfg: &HarnessConfig, system: SystemId, degree: usize) -> Result<Self> {
        let spec = cfg.systems.spec(system)?;
        Ok(Self {
            dict: Dictionary::polynomial(spec.n_x, degree)?,
            cert: cfg.certificates.calibrated(spec.n_x),
            acq: cfg.acquisition.clone(),
            task: cfg.tasks.clone(),
            ridge_lambda: cfg.ridge_lambda,
            spec,
        })
    }
}

/// One row of `cases.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub case: CaseSpec,
    pub n_samples: usize,
    pub c_dir: f64,
    pub c_fr: f64,
    pub c_rad: f64,
    pub state_iso: f64,
    pub lift_iso: f64,
    pub regression_iso: f64,
    pub regression_cov_z_min: f64,
    pub sigma_min_bar_phi: f64,
    pub regression_logdet: f64,
    pub active_rank: usize,
    pub active_dim: usize,
    pub std_gpe_index: f64,
    pub one_step_lift_rmse: f64,
    pub one_step_state_rmse: f64,
    pub open_loop_rmse: f64,
    pub tracking_rmse: f64,
    pub prediction_failed: bool,
    pub control_failed: bool,
    pub wall_clock_s: f64,
}

/// Numeric columns of a case row, in file order.
pub const METRICS: [&str; 19] = [
    "n_samples",
    "c_dir",
    "c_fr",
    "c_rad",
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
    "prediction_failed",
    "control_failed",
];

impl CaseResult {
    /// Metric by column name; flags read as 0/1.
    pub fn metric(&self, name: &str) -> Option<f64> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        Some(match name {
            "n_samples" => self.n_samples as f64,
            "c_dir" => self.c_dir,
            "c_fr" => self.c_fr,
            "c_rad" => self.c_rad,
            "state_iso" => self.state_iso,
            "lift_iso" => self.lift_iso,
            "regression_iso" => self.regression_iso,
            "regression_cov_z_min" => self.regression_cov_z_min,
            "sigma_min_bar_phi" => self.sigma_min_bar_phi,
            "regression_logdet" => self.regression_logdet,
            "active_rank" => self.active_rank as f64,
            "active_dim" => self.active_dim as f64,
            "std_gpe_index" => self.std_gpe_index,
            "one_step_lift_rmse" => self.one_step_lift_rmse,
            "one_step_state_rmse" => self.one_step_state_rmse,
            "open_loop_rmse" => self.open_loop_rmse,
            "tracking_rmse" => self.tracking_rmse,
            "prediction_failed" => flag(self.prediction_failed),
            "control_failed" => flag(self.control_failed),
            "wall_clock_s" => self.wall_clock_s,
            _ => return None,
        })
    }

    /// `|sigma_min - sqrt(N C_reg)| / max(sigma_min, 1e-12)`.
    pub fn identity_error(&self) -> f64 {
        let s = self.sigma_min_bar_phi;
        (s - (self.n_samples as f64 * self.regression_cov_z_min).sqrt()).abs() / s.max(1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub case: CaseSpec,
    pub message: String,
}

pub type CaseOutcome = std::result::Result<CaseResult, CaseFailure>;

/// Acquire, certify, fit and evaluate one case.
pub fn run_case_in(
    ctx: &CaseContext,
    method: MethodId,
    seed: u64,
    budget: usize,
) -> Result<CaseResult> {
    let start = Instant::now();
    let acquired = acquire(&AcquireRequest {
        method,
        spec: &ctx.spec,
        dict: &ctx.dict,
        seed,
        budget,
        cfg: &ctx.acq,
        cert: &ctx.cert,
    })?;
    let data = &acquired.dataset;
    let report = full_report(data, &ctx.dict, &ctx.cert)?;
    let design = build_design(data, &ctx.dict)?;
    let model = fit(&design, &ctx.dict, ctx.ridge_lambda, &ctx.cert.thresholds)?;
    let one_step = one_step_errors_on(&model, &design);
    let tasks = evaluate_tasks(&model, &ctx.spec, &ctx.task, ctx.acq.dt, seed)?;
    Ok(CaseResult {
        case: CaseSpec {
            system: ctx.spec.id,
            method,
            seed,
            budget,
            degree: ctx.dict.degree,
        },
        n_samples: report.n_samples,
        c_dir: report.c_dir,
        c_fr: report.c_fr,
        c_rad: report.c_rad,
        state_iso: report.state_iso,
        lift_iso: report.lift_iso,
        regression_iso: report.regression_iso,
        regression_cov_z_min: report.c_reg,
        sigma_min_bar_phi: report.sigma_min_bar_phi,
        regression_logdet: report.regression_logdet,
        active_rank: report.active_rank,
        active_dim: report.active_dim,
        std_gpe_index: report.c_gpe,
        one_step_lift_rmse: one_step.lift_rmse,
        one_step_state_rmse: one_step.state_rmse,
        open_loop_rmse: tasks.open_loop_rmse,
        tracking_rmse: tasks.tracking_rmse,
        prediction_failed: tasks.prediction_failed,
        control_failed: tasks.control_failed,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_case(cfg: &HarnessConfig, case: &CaseSpec) -> CaseOutcome {
    CaseContext::new(cfg, case.system, case.degree)
        .and_then(|ctx| run_case_in(&ctx, case.method, case.seed, case.budget))
        .map_err(|e| CaseFailure {
            case: *case,
            message: e.to_string(),
        })
}

/// Runs every case on `workers` threads (0 = all logical processors); output keeps input order.
pub fn run_cases(
    cfg: &HarnessConfig,
    cases: &[CaseSpec],
    workers: usize,
    progress: &(dyn Fn(usize, &CaseOutcome) + Sync),
) -> Result<Vec<CaseOutcome>> {
    let mut contexts = BTreeMap::new();
    for c in cases {
        let key = (c.system, c.degree);
        if let std::collections::btree_map::Entry::Vacant(e) = contexts.entry(key) {
            e.insert(CaseContext::new(cfg, c.system, c.degree));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let run = |i: usize, c: &CaseSpec| -> CaseOutcome {
        let out = match &contexts[&(c.system, c.degree)] {
            Ok(ctx) => run_case_in(ctx, c.method, c.seed, c.budget),
            Err(e) => Err(Error::Config(e.to_string())),
        }
        .map_err(|e| CaseFailure {
            case: *c,
            message: e.to_string(),
        });
        progress(i, &out);
        out
    };
    Ok(pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, c)| run(i, c))
            .collect()
    }))
}
