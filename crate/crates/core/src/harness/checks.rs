//! Theory check suite and the per-method timing loop.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::acquisition::{acquire, AcquireRequest, MethodId};
use crate::edmdc::theory::{
    check_fisher, check_identity, check_ls_risk, check_population_gap, check_ridge_bound,
    schur_input_residual, SphereMixture, TheoryCheck,
};
use crate::error::Result;
use crate::lifting::build_design;
use crate::standardize::{standardize, StandardizedDesign};
use crate::systems::SystemId;

use super::config::HarnessConfig;
use super::preset::PresetName;
use super::run::{run_case_in, CaseContext};

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn random_spd(rng: &mut ChaCha8Rng, q: usize) -> DMatrix<f64> {
    let m = gaussian(rng, q, q);
    &m * m.transpose() + DMatrix::identity(q, q) * 0.1
}

fn benchmark_design(
    cfg: &HarnessConfig,
    system: SystemId,
    seed: u64,
) -> Result<StandardizedDesign> {
    let ctx = CaseContext::new(cfg, system, cfg.systems.degree(system))?;
    let acquired = acquire(&AcquireRequest {
        method: MethodId::Random,
        spec: &ctx.spec,
        dict: &ctx.dict,
        seed,
        budget: 8,
        cfg: &ctx.acq,
        cert: &ctx.cert,
    })?;
    let design = build_design(&acquired.dataset, &ctx.dict)?;
    standardize(&design.phi, &ctx.cert.thresholds)
}

/// Identity, Fisher, ridge, LS risk, population gap and Schur checks on benchmark and synthetic designs.
pub fn theory_suite(cfg: &HarnessConfig, seed: u64) -> Result<Vec<TheoryCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for system in SystemId::BENCHMARKS {
        let design = benchmark_design(cfg, system, seed)?;
        let phi_bar = &design.zbar;
        out.push(check_identity(phi_bar));
        out.push(check_fisher(phi_bar, &(DMatrix::identity(3, 3) * 0.3))?);
        out.push(check_fisher(phi_bar, &random_spd(&mut rng, 3))?);
        out.push(schur_input_residual(&design, design.p() - 1)?.interlacing_check());
    }
    for _ in 0..3 {
        let phi = standardize(&gaussian(&mut rng, 60, 5), &Default::default())?.zbar;
        let y = gaussian(&mut rng, 60, 2);
        let noise = gaussian(&mut rng, 60, 2) * 0.1;
        out.push(check_ridge_bound(&phi, &y, &noise, 0.0)?);
        out.push(check_ridge_bound(&phi, &y, &noise, 0.5)?);
    }
    let phi = standardize(&gaussian(&mut rng, 80, 4), &Default::default())?.zbar;
    out.push(check_ls_risk(&phi, 0.5, 2, 2000, seed)?.check);
    let p = 4;
    let n = (200.0 * p as f64 * (p as f64).ln()).ceil() as usize;
    let dist = SphereMixture::new(p, 1.0 / p as f64, 1.0)?;
    out.push(check_population_gap(&dist, &[n], 200, seed)?.check);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: MethodId,
    pub runs: usize,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

/// Lightweight wall-clock loop: each major-revision method on every system, budget 8,
/// segment length 8, horizons 40/20, seed 0.
pub fn bench_timing(cfg: &HarnessConfig) -> Result<Vec<TimingRow>> {
    let mut cfg = cfg.clone();
    cfg.acquisition.l_seg = 8;
    cfg.tasks.pred_horizon = 40;
    cfg.tasks.ctrl_horizon = 20;
    let contexts = SystemId::BENCHMARKS
        .iter()
        .map(|&s| CaseContext::new(&cfg, s, cfg.systems.degree(s)))
        .collect::<Result<Vec<_>>>()?;
    PresetName::MajorRevision
        .preset()
        .methods
        .into_iter()
        .map(|method| {
            let times = contexts
                .iter()
                .map(|ctx| {
                    let start = Instant::now();
                    run_case_in(ctx, method, 0, 8)?;
                    Ok(start.elapsed().as_secs_f64())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(TimingRow {
                method,
                runs: times.len(),
                mean_s: times.iter().sum::<f64>() / times.len() as f64,
                min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
                max_s: times.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}
