//! Candidate libraries and data-acquisition strategies.

pub mod greedy;
pub mod igpe;
pub mod probing;
pub mod sobol;

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificates::{whiten_states, CertificateConfig, Whitening};
use crate::dataset::{rows_to_matrix, Dataset};
use crate::error::{Error, Result};
use crate::lifting::{build_design, Dictionary};
use crate::standardize::standardize;
use crate::systems::{simulate_segment, SystemId, SystemSpec, Trajectory};

pub use greedy::{
    dopt_objective, greedy_dopt, greedy_eopt_info, greedy_standardized, information_blocks,
    Criterion,
};
pub use igpe::{CandidateRows, IgpeWeights, ScoreTerms, Tracker, TrackerFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCandidate {
    pub x0: Vec<f64>,
    pub u_const: Vec<f64>,
    /// Number of steps.
    pub length: usize,
}

impl SegmentCandidate {
    pub fn simulate(&self, spec: &SystemSpec, dt: f64) -> Result<Trajectory> {
        simulate_segment(spec, &self.x0, &vec![self.u_const.clone(); self.length], dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Random,
    Sobol,
    StateKcenter,
    LiftDopt,
    RegDopt,
    RegEopt,
    APe,
    Oid,
    GpeState,
    IgpeDopt,
    IgpeNoDopt,
    IgpeNoDir,
    IgpeNoCluster,
    IgpeWhalf,
    IgpeUniform,
    IgpeRegHeavy,
    IgpeClusterHeavy,
}

impl MethodId {
    pub const ALL: [MethodId; 17] = [
        MethodId::Random,
        MethodId::Sobol,
        MethodId::StateKcenter,
        MethodId::LiftDopt,
        MethodId::RegDopt,
        MethodId::RegEopt,
        MethodId::APe,
        MethodId::Oid,
        MethodId::GpeState,
        MethodId::IgpeDopt,
        MethodId::IgpeNoDopt,
        MethodId::IgpeNoDir,
        MethodId::IgpeNoCluster,
        MethodId::IgpeWhalf,
        MethodId::IgpeUniform,
        MethodId::IgpeRegHeavy,
        MethodId::IgpeClusterHeavy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Random => "RANDOM",
            MethodId::Sobol => "SOBOL",
            MethodId::StateKcenter => "STATE-KCENTER",
            MethodId::LiftDopt => "LIFT-DOPT",
            MethodId::RegDopt => "REG-DOPT",
            MethodId::RegEopt => "REG-EOPT",
            MethodId::APe => "A-PE",
            MethodId::Oid => "OID",
            MethodId::GpeState => "GPE-STATE",
            MethodId::IgpeDopt => "IGPE-DOPT",
            MethodId::IgpeNoDopt => "IGPE-NO-DOPT",
            MethodId::IgpeNoDir => "IGPE-NO-DIR",
            MethodId::IgpeNoCluster => "IGPE-NO-CLUSTER",
            MethodId::IgpeWhalf => "IGPE-WHALF",
            MethodId::IgpeUniform => "IGPE-UNIFORM",
            MethodId::IgpeRegHeavy => "IGPE-REG-HEAVY",
            MethodId::IgpeClusterHeavy => "IGPE-CLUSTER-HEAVY",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Scoring weights for the certificate-scored family, derived from `base`.
    pub fn weights(self, base: &IgpeWeights) -> Option<IgpeWeights> {
        let w = *base;
        Some(match self {
            MethodId::IgpeDopt => w,
            MethodId::IgpeNoDopt => IgpeWeights {
                lift_logdet: 0.0,
                ..w
            },
            MethodId::IgpeNoDir => IgpeWeights { novelty: 0.0, ..w },
            MethodId::IgpeNoCluster => IgpeWeights { cluster: 0.0, ..w },
            MethodId::IgpeWhalf => w.scaled(0.5),
            MethodId::IgpeUniform => IgpeWeights::uniform(1.0 / 7.0),
            MethodId::IgpeRegHeavy => IgpeWeights {
                reg_min: 3.0 * w.reg_min,
                ..w
            },
            MethodId::IgpeClusterHeavy => IgpeWeights {
                cluster: 3.0 * w.cluster,
                ..w
            },
            MethodId::GpeState => IgpeWeights {
                state_min: w.state_min,
                novelty: w.novelty,
                cluster: w.cluster,
                ..IgpeWeights::zero()
            },
            _ => return None,
        })
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub library_size: usize,
    pub l_seg: usize,
    pub dt: f64,
    /// Floor `eps` in the greedy design objectives and the scored log-determinant.
    pub greedy_eps: f64,
    pub weights: IgpeWeights,
    /// A-PE base frequency in Hz.
    pub ape_base_frequency: f64,
    pub oid_f_lo: f64,
    pub oid_f_hi: f64,
    pub oid_tones: usize,
    /// Multisine normalization window and chirp sweep period in seconds.
    pub oid_period: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            library_size: 256,
            l_seg: 12,
            dt: 0.01,
            greedy_eps: 1e-6,
            weights: IgpeWeights::default(),
            ape_base_frequency: 0.5,
            oid_f_lo: 0.1,
            oid_f_hi: 5.0,
            oid_tones: 8,
            oid_period: 10.0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_seg == 0 || !(self.dt > 0.0) || !(self.greedy_eps > 0.0) {
            return Err(Error::Config(
                "l_seg, dt and greedy_eps must be positive".into(),
            ));
        }
        if !self.weights.is_valid() {
            return Err(Error::Config(
                "IGPE weights must be finite and nonnegative".into(),
            ));
        }
        if !(self.oid_f_lo > 0.0 && self.oid_f_hi >= self.oid_f_lo && self.oid_period > 0.0)
            || self.oid_tones == 0
        {
            return Err(Error::Config("invalid OID band".into()));
        }
        if !(self.ape_base_frequency > 0.0) {
            return Err(Error::Config("ape_base_frequency must be positive".into()));
        }
        Ok(())
    }
}

fn system_stream(id: SystemId) -> u64 {
    match id {
        SystemId::Duffing => 1,
        SystemId::Vdp => 2,
        SystemId::Lorenz => 3,
        SystemId::Linear => 4,
    }
}

/// Deterministic generator for `(system, seed, purpose)`.
fn case_rng(spec: &SystemSpec, seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(system_stream(spec.id) << 8 | purpose);
    rng
}

fn sample_box<R: Rng>(rng: &mut R, spec: &SystemSpec) -> Vec<f64> {
    spec.init_box
        .iter()
        .map(|&(lo, hi)| {
            if lo < hi {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect()
}

/// Constant-input candidates with `x0` uniform in the initial box and `u` uniform in the input range.
pub fn generate_library(
    spec: &SystemSpec,
    seed: u64,
    library_size: usize,
    l_seg: usize,
) -> Vec<SegmentCandidate> {
    let mut rng = case_rng(spec, seed, 0);
    let b = spec.input_bound;
    (0..library_size)
        .map(|_| {
            let x0 = sample_box(&mut rng, spec);
            let u_const = (0..spec.n_u).map(|_| rng.random_range(-b..=b)).collect();
            SegmentCandidate {
                x0,
                u_const,
                length: l_seg,
            }
        })
        .collect()
}

/// Random initial states for evaluation tasks, independent of the library stream.
pub fn sample_initial_states(
    spec: &SystemSpec,
    seed: u64,
    purpose: u64,
    count: usize,
) -> Vec<Vec<f64>> {
    let mut rng = case_rng(spec, seed, 16 + purpose);
    (0..count).map(|_| sample_box(&mut rng, spec)).collect()
}

/// Uniform inputs in the input range, held for `hold` steps.
pub fn sample_held_inputs(
    spec: &SystemSpec,
    seed: u64,
    purpose: u64,
    len: usize,
    hold: usize,
) -> Vec<Vec<f64>> {
    let mut rng = case_rng(spec, seed, 32 + purpose);
    let b = spec.input_bound;
    let mut out = Vec::with_capacity(len);
    let mut u = vec![0.0; spec.n_u];
    for k in 0..len {
        if k % hold.max(1) == 0 {
            u = (0..spec.n_u).map(|_| rng.random_range(-b..=b)).collect();
        }
        out.push(u.clone());
    }
    out
}

/// Sobol candidates over `(x0, u_const)` with a seeded random digital shift.
pub fn sobol_candidates(
    spec: &SystemSpec,
    seed: u64,
    count: usize,
    l_seg: usize,
) -> Result<Vec<SegmentCandidate>> {
    let mut rng = case_rng(spec, seed, 1);
    let dim = spec.n_x + spec.n_u;
    let shift = (0..dim).map(|_| rng.random::<u32>()).collect();
    let mut seq = sobol::Sobol::with_shift(shift)?;
    let b = spec.input_bound;
    Ok((0..count)
        .map(|_| {
            let p = seq.next_point();
            let x0 = spec
                .init_box
                .iter()
                .zip(&p)
                .map(|(&(lo, hi), t)| lo + (hi - lo) * t)
                .collect();
            let u_const = p[spec.n_x..].iter().map(|t| -b + 2.0 * b * t).collect();
            SegmentCandidate {
                x0,
                u_const,
                length: l_seg,
            }
        })
        .collect())
}

/// A simulated library with pooled reference statistics.
#[derive(Debug, Clone)]
pub struct Library {
    pub candidates: Vec<SegmentCandidate>,
    /// `None` for candidates whose simulation diverged.
    pub segments: Vec<Option<Dataset>>,
}

impl Library {
    pub fn simulate(spec: &SystemSpec, candidates: Vec<SegmentCandidate>, dt: f64) -> Self {
        let segments = candidates
            .iter()
            .map(|c| {
                c.simulate(spec, dt)
                    .ok()
                    .map(|t| Dataset::from_trajectory(&t))
            })
            .collect();
        Self {
            candidates,
            segments,
        }
    }

    pub fn valid(&self) -> Vec<usize> {
        (0..self.segments.len())
            .filter(|&i| self.segments[i].is_some())
            .collect()
    }

    fn segment(&self, i: usize) -> &Dataset {
        self.segments[i].as_ref().expect("valid candidate")
    }

    fn pooled(&self, n_x: usize, n_u: usize) -> Dataset {
        let mut d = Dataset::new(n_x, n_u);
        for s in self.segments.iter().flatten() {
            d.append(s);
        }
        d
    }
}

/// Column mean and scale, with inactive columns scaled by one.
fn reference_stats(
    m: &DMatrix<f64>,
    cfg: &CertificateConfig,
) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
    let s = standardize(m, &cfg.thresholds)?;
    let scale = s
        .scale
        .iter()
        .zip(&s.active_mask)
        .map(|(&sc, &a)| if a { sc } else { 1.0 })
        .collect();
    Ok((s.mu, scale, s.active_mask))
}

/// Output of one acquisition run.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquired {
    pub dataset: Dataset,
    /// Library indices for library-based methods, segment order otherwise.
    pub selected: Vec<usize>,
}

pub struct AcquireRequest<'a> {
    pub method: MethodId,
    pub spec: &'a SystemSpec,
    pub dict: &'a Dictionary,
    pub seed: u64,
    pub budget: usize,
    pub cfg: &'a AcquisitionConfig,
    pub cert: &'a CertificateConfig,
}

pub fn acquire(req: &AcquireRequest<'_>) -> Result<Acquired> {
    let cfg = req.cfg;
    cfg.validate()?;
    if req.budget == 0 {
        return Err(Error::usage("budget must be at least 1"));
    }
    if req.budget > cfg.library_size {
        return Err(Error::usage(format!(
            "budget {} exceeds library size {}",
            req.budget, cfg.library_size
        )));
    }
    if req.dict.n_x != req.spec.n_x {
        return Err(Error::Dimension {
            expected: req.spec.n_x,
            got: req.dict.n_x,
            context: "dictionary vs system",
        });
    }
    let spec = req.spec;
    match req.method {
        MethodId::Sobol => {
            let cands = sobol_candidates(spec, req.seed, req.budget, cfg.l_seg)?;
            let lib = Library::simulate(spec, cands, cfg.dt);
            let valid = lib.valid();
            if valid.len() < req.budget {
                return Err(diverged(req));
            }
            Ok(collect(&lib, valid, spec))
        }
        MethodId::APe => ape(req),
        MethodId::Oid => oid(req),
        _ => {
            let cands = generate_library(spec, req.seed, cfg.library_size, cfg.l_seg);
            let lib = Library::simulate(spec, cands, cfg.dt);
            let valid = lib.valid();
            if valid.len() < req.budget {
                return Err(diverged(req));
            }
            let picked = select_from_library(req, &lib, &valid)?;
            Ok(collect(&lib, picked, spec))
        }
    }
}

fn diverged(req: &AcquireRequest<'_>) -> Error {
    Error::usage(format!(
        "{} {}: too many diverging candidates for budget {}",
        req.spec.id, req.method, req.budget
    ))
}

fn collect(lib: &Library, picked: Vec<usize>, spec: &SystemSpec) -> Acquired {
    let mut dataset = Dataset::new(spec.n_x, spec.n_u);
    for &i in &picked {
        dataset.append(lib.segment(i));
    }
    Acquired {
        dataset,
        selected: picked,
    }
}

fn select_from_library(
    req: &AcquireRequest<'_>,
    lib: &Library,
    valid: &[usize],
) -> Result<Vec<usize>> {
    let b = req.budget;
    let eps = req.cfg.greedy_eps;
    match req.method {
        MethodId::Random => Ok(valid[..b].to_vec()),
        MethodId::StateKcenter => Ok(kcenter(lib, valid, b, req)),
        MethodId::LiftDopt | MethodId::RegDopt | MethodId::RegEopt => {
            let pooled = build_design(&lib.pooled(req.spec.n_x, req.spec.n_u), req.dict)?;
            let (mats, pooled_m) = if req.method == MethodId::LiftDopt {
                (
                    valid
                        .iter()
                        .map(|&i| build_design(lib.segment(i), req.dict).map(|d| d.psi))
                        .collect::<Result<Vec<_>>>()?,
                    pooled.psi,
                )
            } else {
                (
                    valid
                        .iter()
                        .map(|&i| build_design(lib.segment(i), req.dict).map(|d| d.phi))
                        .collect::<Result<Vec<_>>>()?,
                    pooled.phi,
                )
            };
            // centering on the pooled mean leaves correlations unchanged and keeps the sums well conditioned
            let (mu, _, _) = reference_stats(&pooled_m, req.cert)?;
            let centered: Vec<DMatrix<f64>> = mats
                .iter()
                .map(|m| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - mu[j]))
                .collect();
            let criterion = if req.method == MethodId::RegEopt {
                Criterion::E
            } else {
                Criterion::D
            };
            let local = greedy::greedy_standardized(
                &centered,
                b,
                eps,
                req.cert.thresholds.var_threshold,
                criterion,
            );
            Ok(local.into_iter().map(|k| valid[k]).collect())
        }
        m => {
            let w = m
                .weights(&req.cfg.weights)
                .ok_or_else(|| Error::usage(format!("{m} is not a library method")))?;
            scored_selection(req, lib, valid, &w)
        }
    }
}

/// Farthest-point selection over whitened candidate mean states.
fn kcenter(lib: &Library, valid: &[usize], budget: usize, req: &AcquireRequest<'_>) -> Vec<usize> {
    let n_x = req.spec.n_x;
    let means: Vec<Vec<f64>> = valid
        .iter()
        .map(|&i| {
            let s = lib.segment(i);
            let mut m = vec![0.0; n_x];
            for x in s.states.iter().chain(s.next_states.last()) {
                for (a, v) in m.iter_mut().zip(x) {
                    *a += v;
                }
            }
            let n = (s.len() + 1) as f64;
            m.iter().map(|v| v / n).collect()
        })
        .collect();
    let w = whiten_states(&rows_to_matrix(&means, n_x), req.cert.eps);
    let pts = w.apply_rows(&means);
    let norm2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let first = argmax(pts.iter().map(|p| norm2(p)));
    let mut picked = vec![first];
    let mut nearest: Vec<f64> = pts.iter().map(|p| d2(p, &pts[first])).collect();
    while picked.len() < budget {
        let next = argmax(nearest.iter().copied());
        picked.push(next);
        for (k, p) in pts.iter().enumerate() {
            nearest[k] = nearest[k].min(d2(p, &pts[next]));
        }
    }
    picked.into_iter().map(|k| valid[k]).collect()
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Scoring frame fixed by the pooled library.
pub fn tracker_frame(lib: &Library, req: &AcquireRequest<'_>) -> Result<(TrackerFrame, Whitening)> {
    let pooled = lib.pooled(req.spec.n_x, req.spec.n_u);
    let design = build_design(&pooled, req.dict)?;
    let (x_shift, x_scale, _) = reference_stats(&pooled.state_matrix(), req.cert)?;
    let (psi_shift, psi_scale, _) = reference_stats(&design.psi, req.cert)?;
    let (phi_shift, phi_scale, _) = reference_stats(&design.phi, req.cert)?;
    let whitening = whiten_states(&pooled.state_matrix(), req.cert.eps);
    Ok((
        TrackerFrame {
            x_shift,
            x_scale,
            psi_shift,
            psi_scale,
            phi_shift,
            phi_scale,
            n_u: req.spec.n_u,
            input_bound: req.spec.input_bound,
            delta: req.cert.finest_resolution(),
            radius: req.cert.smallest_scale(),
            var_threshold: req.cert.thresholds.var_threshold,
            eps: req.cfg.greedy_eps,
        },
        whitening,
    ))
}

pub fn candidate_rows(
    segment: &Dataset,
    dict: &Dictionary,
    frame: &Whitening,
    eps: f64,
) -> Result<CandidateRows> {
    let d = build_design(segment, dict)?;
    let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    };
    Ok(CandidateRows::new(
        segment.states.clone(),
        &segment.next_states,
        rows(&d.psi),
        rows(&d.phi),
        frame,
        eps,
    ))
}

/// Myopic greedy: each round appends the highest-scoring remaining candidate.
fn scored_selection(
    req: &AcquireRequest<'_>,
    lib: &Library,
    valid: &[usize],
    w: &IgpeWeights,
) -> Result<Vec<usize>> {
    let (frame, whitening) = tracker_frame(lib, req)?;
    let rows: Vec<CandidateRows> = valid
        .iter()
        .map(|&i| candidate_rows(lib.segment(i), req.dict, &whitening, req.cert.eps))
        .collect::<Result<_>>()?;
    let mut tracker = Tracker::new(frame);
    let mut used = vec![false; rows.len()];
    let mut picked = Vec::with_capacity(req.budget);
    for _ in 0..req.budget {
        let mut best: Option<(usize, f64)> = None;
        for (k, r) in rows.iter().enumerate() {
            if used[k] {
                continue;
            }
            let s = tracker.score(r, w);
            let s = if s.is_finite() { s } else { f64::NEG_INFINITY };
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        let (k, _) = best.expect("budget <= valid candidates");
        used[k] = true;
        tracker.append(&rows[k]);
        picked.push(valid[k]);
    }
    Ok(picked)
}

/// Sequential sinusoid probing from one continuing trajectory.
fn ape(req: &AcquireRequest<'_>) -> Result<Acquired> {
    let spec = req.spec;
    let cfg = req.cfg;
    let lib = generate_library(spec, req.seed, 1, cfg.l_seg);
    let mut x = lib[0].x0.clone();
    let mut dataset = Dataset::new(spec.n_x, spec.n_u);
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); spec.n_u];
    for t in 0..req.budget {
        let f = probing::ape_frequency(cfg.ape_base_frequency, t, cfg.dt);
        let start = t * cfg.l_seg;
        let channels: Vec<Vec<f64>> = (0..spec.n_u)
            .map(|c| {
                let a = probing::ape_amplitude(&history[c], spec.input_bound, req.cert.eps);
                probing::sinusoid(a, f, start, cfg.l_seg, cfg.dt)
            })
            .collect();
        let inputs: Vec<Vec<f64>> = (0..cfg.l_seg)
            .map(|k| channels.iter().map(|ch| ch[k]).collect())
            .collect();
        for (c, ch) in channels.iter().enumerate() {
            history[c].extend_from_slice(ch);
        }
        let traj = simulate_segment(spec, &x, &inputs, cfg.dt)?;
        x = traj.last_state().to_vec();
        dataset.extend_trajectory(&traj);
    }
    Ok(Acquired {
        dataset,
        selected: (0..req.budget).collect(),
    })
}

/// Multisine on even segments, chirp on odd ones; fresh library initial states.
fn oid(req: &AcquireRequest<'_>) -> Result<Acquired> {
    let spec = req.spec;
    let cfg = req.cfg;
    let b = spec.input_bound;
    let lib = generate_library(spec, req.seed, req.budget, cfg.l_seg);
    let ms = probing::Multisine::new(
        cfg.oid_f_lo,
        cfg.oid_f_hi,
        cfg.oid_tones,
        cfg.oid_period,
        cfg.dt,
        b,
    );
    let mut dataset = Dataset::new(spec.n_x, spec.n_u);
    for (t, cand) in lib.iter().enumerate() {
        let inputs: Vec<Vec<f64>> = (0..cfg.l_seg)
            .map(|k| {
                let time = (t * cfg.l_seg + k) as f64 * cfg.dt;
                let v = if t % 2 == 0 {
                    ms.value(time)
                } else {
                    probing::chirp(time, cfg.oid_f_lo, cfg.oid_f_hi, cfg.oid_period, b)
                };
                vec![v.clamp(-b, b); spec.n_u]
            })
            .collect();
        let traj = simulate_segment(spec, &cand.x0, &inputs, cfg.dt)?;
        dataset.extend_trajectory(&traj);
    }
    Ok(Acquired {
        dataset,
        selected: (0..req.budget).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::full_report;

    fn setup(id: SystemId) -> (SystemSpec, Dictionary, AcquisitionConfig, CertificateConfig) {
        let spec = SystemSpec::benchmark(id);
        let deg = if spec.n_x == 3 { 2 } else { 3 };
        let dict = Dictionary::polynomial(spec.n_x, deg).unwrap();
        let cfg = AcquisitionConfig {
            library_size: 64,
            ..Default::default()
        };
        let cert = CertificateConfig::default().calibrated(spec.n_x);
        (spec, dict, cfg, cert)
    }

    fn run(method: MethodId, id: SystemId, seed: u64, budget: usize) -> Acquired {
        let (spec, dict, cfg, cert) = setup(id);
        acquire(&AcquireRequest {
            method,
            spec: &spec,
            dict: &dict,
            seed,
            budget,
            cfg: &cfg,
            cert: &cert,
        })
        .unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodId::ALL {
            assert_eq!(MethodId::parse(m.name()), Some(m));
        }
        assert_eq!(MethodId::parse("reg-eopt"), Some(MethodId::RegEopt));
        assert_eq!(MethodId::parse("NOPE"), None);
    }

    #[test]
    fn ablations_zero_exactly_one_weight() {
        let base = IgpeWeights::default();
        let no_dir = MethodId::IgpeNoDir.weights(&base).unwrap();
        assert_eq!(
            no_dir,
            IgpeWeights {
                novelty: 0.0,
                ..base
            }
        );
        assert_eq!(
            MethodId::IgpeNoDopt.weights(&base).unwrap(),
            IgpeWeights {
                lift_logdet: 0.0,
                ..base
            }
        );
        assert_eq!(
            MethodId::IgpeNoCluster.weights(&base).unwrap(),
            IgpeWeights {
                cluster: 0.0,
                ..base
            }
        );
        assert_eq!(MethodId::IgpeWhalf.weights(&base).unwrap().reg_min, 0.175);
        assert_eq!(
            MethodId::IgpeRegHeavy.weights(&base).unwrap().reg_min,
            3.0 * 0.35
        );
        let gs = MethodId::GpeState.weights(&base).unwrap();
        assert_eq!(
            (gs.lift_logdet, gs.reg_min, gs.u_var, gs.lift_eff_rank),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert!(MethodId::Random.weights(&base).is_none());
    }

    #[test]
    fn library_is_deterministic_and_seed_dependent() {
        let spec = SystemSpec::duffing();
        assert!(generate_library(&spec, 0, 0, 12).is_empty());
        let a = generate_library(&spec, 0, 16, 12);
        assert_eq!(a, generate_library(&spec, 0, 16, 12));
        assert_ne!(a, generate_library(&spec, 1, 16, 12));
        for c in &a {
            assert!(c.u_const.iter().all(|u| u.abs() <= spec.input_bound));
            assert!(c
                .x0
                .iter()
                .zip(&spec.init_box)
                .all(|(x, (lo, hi))| lo <= x && x <= hi));
        }
    }

    #[test]
    fn budget_one_gives_one_segment_for_every_method() {
        for m in MethodId::ALL {
            let a = run(m, SystemId::Duffing, 0, 1);
            assert_eq!(a.dataset.len(), 12, "{m}");
            assert!(a.dataset.is_finite());
        }
    }

    #[test]
    fn acquisition_is_reproducible() {
        for m in [
            MethodId::IgpeDopt,
            MethodId::StateKcenter,
            MethodId::APe,
            MethodId::Sobol,
        ] {
            assert_eq!(run(m, SystemId::Vdp, 3, 5), run(m, SystemId::Vdp, 3, 5));
        }
    }

    #[test]
    fn selection_is_without_replacement() {
        for m in [
            MethodId::IgpeDopt,
            MethodId::RegEopt,
            MethodId::LiftDopt,
            MethodId::StateKcenter,
        ] {
            let a = run(m, SystemId::Lorenz, 1, 20);
            let mut s = a.selected.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 20, "{m}");
        }
    }

    #[test]
    fn budget_beyond_library_is_a_usage_error() {
        let (spec, dict, cfg, cert) = setup(SystemId::Duffing);
        let r = acquire(&AcquireRequest {
            method: MethodId::Random,
            spec: &spec,
            dict: &dict,
            seed: 0,
            budget: 65,
            cfg: &cfg,
            cert: &cert,
        });
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn eopt_beats_random_on_regression_isotropy_on_average() {
        let (_, dict, _, cert) = setup(SystemId::Duffing);
        let mean = |m| {
            (0..4)
                .map(|s| {
                    full_report(&run(m, SystemId::Duffing, s, 20).dataset, &dict, &cert)
                        .unwrap()
                        .c_reg
                })
                .sum::<f64>()
        };
        assert!(mean(MethodId::RegEopt) > mean(MethodId::Random));
    }

    #[test]
    fn probing_inputs_stay_in_bounds() {
        for m in [MethodId::APe, MethodId::Oid] {
            for id in SystemId::BENCHMARKS {
                let a = run(m, id, 0, 10);
                let b = SystemSpec::benchmark(id).input_bound;
                assert!(a
                    .dataset
                    .inputs
                    .iter()
                    .flatten()
                    .all(|u| u.abs() <= b + 1e-12));
                // nonconstant inputs
                let first = a.dataset.inputs[0][0];
                assert!(
                    a.dataset.inputs.iter().any(|u| (u[0] - first).abs() > 1e-6),
                    "{m} {id}"
                );
            }
        }
    }

    fn tracker_for(id: SystemId) -> (Tracker, Vec<CandidateRows>) {
        let (spec, dict, cfg, cert) = setup(id);
        let req = AcquireRequest {
            method: MethodId::IgpeDopt,
            spec: &spec,
            dict: &dict,
            seed: 0,
            budget: 4,
            cfg: &cfg,
            cert: &cert,
        };
        let lib = Library::simulate(&spec, generate_library(&spec, 0, 16, 12), cfg.dt);
        let (frame, w) = tracker_frame(&lib, &req).unwrap();
        let rows = lib
            .valid()
            .iter()
            .map(|&i| candidate_rows(lib.segment(i), &dict, &w, cert.eps).unwrap())
            .collect();
        (Tracker::new(frame), rows)
    }

    #[test]
    fn zero_weights_score_zero() {
        let (mut t, rows) = tracker_for(SystemId::Duffing);
        t.append(&rows[0]);
        for r in &rows {
            assert_eq!(t.score(r, &IgpeWeights::zero()), 0.0);
        }
    }

    #[test]
    fn repeated_segment_scores_no_better_than_on_empty_data() {
        let (empty, rows) = tracker_for(SystemId::Vdp);
        let w = IgpeWeights::default();
        let mut t = empty.clone();
        t.append(&rows[2]);
        let terms = t.terms(&rows[2]);
        assert_eq!(terms.novelty, 0.0);
        assert!(terms.cluster_penalty > 0.0);
        assert!(t.score(&rows[2], &w) <= empty.score(&rows[2], &w));
    }

    #[test]
    fn dominating_candidate_scores_higher() {
        let w = IgpeWeights::default();
        let a = ScoreTerms {
            d_state_min: 0.2,
            d_lift_logdet: 1.0,
            d_lift_eff_rank: 0.5,
            d_reg_min: 0.1,
            novelty: 0.3,
            d_u_var: 0.05,
            cluster_penalty: 0.1,
        };
        let b = ScoreTerms {
            d_state_min: 0.1,
            d_lift_logdet: 0.8,
            d_lift_eff_rank: 0.4,
            d_reg_min: 0.05,
            novelty: 0.2,
            d_u_var: 0.01,
            cluster_penalty: 0.1,
        };
        assert!(a.score(&w) > b.score(&w));
    }

    #[test]
    fn tracker_values_match_full_report_after_appends() {
        let (spec, dict, _, cert) = setup(SystemId::Lorenz);
        let (mut t, rows) = tracker_for(SystemId::Lorenz);
        let lib = Library::simulate(&spec, generate_library(&spec, 0, 16, 12), 0.01);
        let mut d = Dataset::new(3, 1);
        for k in 0..5 {
            t.append(&rows[k]);
            d.append(lib.segment(lib.valid()[k]));
        }
        let r = full_report(&d, &dict, &cert).unwrap();
        let v = t.values();
        assert!((v.state_min - r.c_state).abs() < 1e-8);
        assert!(
            (v.reg_min - r.c_reg).abs() < 1e-8,
            "{} vs {}",
            v.reg_min,
            r.c_reg
        );
    }
}
