//! Incremental certificate tracking for myopic segment scoring.
//!
//! Layer spectra are computed from running moment sums of the rows, shifted
//! and scaled by fixed library-pooled statistics, so appending a candidate
//! costs one small eigen-decomposition per layer instead of a full report.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificates::{angle, extend_direction_set, Whitening};
use crate::linalg::sym_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IgpeWeights {
    pub state_min: f64,
    pub lift_logdet: f64,
    pub lift_eff_rank: f64,
    pub reg_min: f64,
    pub novelty: f64,
    pub u_var: f64,
    pub cluster: f64,
}

impl Default for IgpeWeights {
    fn default() -> Self {
        Self {
            state_min: 0.75,
            lift_logdet: 0.80,
            lift_eff_rank: 0.35,
            reg_min: 0.35,
            novelty: 0.30,
            u_var: 0.10,
            cluster: 0.25,
        }
    }
}

impl IgpeWeights {
    pub fn zero() -> Self {
        Self::uniform(0.0)
    }

    pub fn uniform(w: f64) -> Self {
        Self {
            state_min: w,
            lift_logdet: w,
            lift_eff_rank: w,
            reg_min: w,
            novelty: w,
            u_var: w,
            cluster: w,
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            state_min: self.state_min * f,
            lift_logdet: self.lift_logdet * f,
            lift_eff_rank: self.lift_eff_rank * f,
            reg_min: self.reg_min * f,
            novelty: self.novelty * f,
            u_var: self.u_var * f,
            cluster: self.cluster * f,
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.state_min,
            self.lift_logdet,
            self.lift_eff_rank,
            self.reg_min,
            self.novelty,
            self.u_var,
            self.cluster,
        ]
        .iter()
        .all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// Running sums of `z = (row - shift) / scale`.
#[derive(Debug, Clone)]
struct Moments {
    shift: Vec<f64>,
    scale: Vec<f64>,
    n: usize,
    s1: DVector<f64>,
    s2: DMatrix<f64>,
}

impl Moments {
    fn new(shift: Vec<f64>, scale: Vec<f64>) -> Self {
        let p = shift.len();
        Self {
            shift,
            scale,
            n: 0,
            s1: DVector::zeros(p),
            s2: DMatrix::zeros(p, p),
        }
    }

    fn add(&mut self, row: &[f64]) {
        let z = DVector::from_iterator(
            row.len(),
            row.iter()
                .zip(&self.shift)
                .zip(&self.scale)
                .map(|((v, m), s)| (v - m) / s),
        );
        self.s1 += &z;
        self.s2.ger(1.0, &z, &z, 1.0);
        self.n += 1;
    }

    /// Raw-unit population variance of each column.
    fn variances(&self) -> Vec<f64> {
        if self.n == 0 {
            return vec![0.0; self.shift.len()];
        }
        let n = self.n as f64;
        (0..self.shift.len())
            .map(|j| {
                let m = self.s1[j] / n;
                (self.s2[(j, j)] / n - m * m).max(0.0) * self.scale[j] * self.scale[j]
            })
            .collect()
    }

    /// Eigenvalues of the active correlation matrix and the inactive-column count.
    fn spectrum(&self, var_threshold: f64) -> (Vec<f64>, usize) {
        let p = self.shift.len();
        if self.n < 2 {
            return (Vec::new(), p);
        }
        let n = self.n as f64;
        let var = self.variances();
        let active: Vec<usize> = (0..p)
            .filter(|&j| var[j] >= var_threshold && var[j] > 0.0)
            .collect();
        let m = &self.s1 / n;
        let cov = |i: usize, j: usize| self.s2[(i, j)] / n - m[i] * m[j];
        let sd: Vec<f64> = active
            .iter()
            .map(|&j| cov(j, j).max(f64::MIN_POSITIVE).sqrt())
            .collect();
        let corr = DMatrix::from_fn(active.len(), active.len(), |a, b| {
            cov(active[a], active[b]) / (sd[a] * sd[b])
        });
        (sym_eigenvalues(&corr), p - active.len())
    }
}

/// Layer quantities entering the score differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerValues {
    pub state_min: f64,
    pub lift_logdet: f64,
    pub lift_eff_rank: f64,
    pub reg_min: f64,
    pub u_var: f64,
}

fn min_eig((ev, inactive): &(Vec<f64>, usize)) -> f64 {
    if *inactive > 0 || ev.is_empty() {
        0.0
    } else {
        ev[0].max(0.0)
    }
}

/// `exp` of the Shannon entropy of the normalized eigenvalue distribution.
pub fn effective_rank(ev: &[f64]) -> f64 {
    let total: f64 = ev.iter().map(|l| l.max(0.0)).sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let h: f64 = ev
        .iter()
        .map(|l| l.max(0.0) / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    h.exp()
}

/// Precomputed per-candidate rows in tracker coordinates.
#[derive(Debug, Clone)]
pub struct CandidateRows {
    pub states: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    /// Whitened states in the scoring frame.
    pub points: Vec<Vec<f64>>,
    /// Whitened unit displacement directions (zero displacements dropped).
    pub dirs: Vec<Vec<f64>>,
}

impl CandidateRows {
    pub fn new(
        states: Vec<Vec<f64>>,
        next_states: &[Vec<f64>],
        psi: Vec<Vec<f64>>,
        phi: Vec<Vec<f64>>,
        frame: &Whitening,
        eps: f64,
    ) -> Self {
        let points = frame.apply_rows(&states);
        let dirs = states
            .iter()
            .zip(next_states)
            .filter_map(|(x, xn)| {
                let d: Vec<f64> = xn.iter().zip(x).map(|(a, b)| a - b).collect();
                let w = frame.apply_linear(&d);
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm > eps).then(|| w.iter().map(|v| v / norm).collect())
            })
            .collect();
        Self {
            states,
            psi,
            phi,
            points,
            dirs,
        }
    }
}

/// Pooled reference statistics fixing the tracker coordinates.
#[derive(Debug, Clone)]
pub struct TrackerFrame {
    pub x_shift: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub psi_shift: Vec<f64>,
    pub psi_scale: Vec<f64>,
    pub phi_shift: Vec<f64>,
    pub phi_scale: Vec<f64>,
    pub n_u: usize,
    pub input_bound: f64,
    /// Finest angular resolution for novelty.
    pub delta: f64,
    /// Smallest scale for the clustering penalty.
    pub radius: f64,
    pub var_threshold: f64,
    /// Floor in the log-determinant.
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    frame: TrackerFrame,
    x: Moments,
    psi: Moments,
    phi: Moments,
    values: LayerValues,
    dirs: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    counts: Vec<usize>,
    max_count: usize,
}

/// Score components for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTerms {
    pub d_state_min: f64,
    pub d_lift_logdet: f64,
    pub d_lift_eff_rank: f64,
    pub d_reg_min: f64,
    pub novelty: f64,
    pub d_u_var: f64,
    pub cluster_penalty: f64,
}

impl ScoreTerms {
    pub fn score(&self, w: &IgpeWeights) -> f64 {
        w.state_min * self.d_state_min
            + w.lift_logdet * self.d_lift_logdet
            + w.lift_eff_rank * self.d_lift_eff_rank
            + w.reg_min * self.d_reg_min
            + w.novelty * self.novelty
            + w.u_var * self.d_u_var
            - w.cluster * self.cluster_penalty
    }
}

impl Tracker {
    pub fn new(frame: TrackerFrame) -> Self {
        let x = Moments::new(frame.x_shift.clone(), frame.x_scale.clone());
        let psi = Moments::new(frame.psi_shift.clone(), frame.psi_scale.clone());
        let phi = Moments::new(frame.phi_shift.clone(), frame.phi_scale.clone());
        let mut t = Self {
            values: LayerValues {
                state_min: 0.0,
                lift_logdet: 0.0,
                lift_eff_rank: 0.0,
                reg_min: 0.0,
                u_var: 0.0,
            },
            frame,
            x,
            psi,
            phi,
            dirs: Vec::new(),
            points: Vec::new(),
            counts: Vec::new(),
            max_count: 0,
        };
        t.values = t.layer_values(&t.x, &t.psi, &t.phi);
        t
    }

    pub fn values(&self) -> LayerValues {
        self.values
    }

    pub fn len(&self) -> usize {
        self.x.n
    }

    pub fn is_empty(&self) -> bool {
        self.x.n == 0
    }

    fn layer_values(&self, x: &Moments, psi: &Moments, phi: &Moments) -> LayerValues {
        let th = self.frame.var_threshold;
        let xs = x.spectrum(th);
        let ps = psi.spectrum(th);
        let rs = phi.spectrum(th);
        let eps = self.frame.eps;
        let lift_logdet =
            ps.0.iter().map(|l| (l.max(0.0) + eps).ln()).sum::<f64>() + ps.1 as f64 * eps.ln();
        let var = phi.variances();
        let d = var.len() - self.frame.n_u;
        let b2 = self.frame.input_bound * self.frame.input_bound;
        let u_var = if self.frame.n_u == 0 {
            0.0
        } else {
            var[d..].iter().sum::<f64>() / (self.frame.n_u as f64 * b2)
        };
        LayerValues {
            state_min: min_eig(&xs),
            lift_logdet,
            lift_eff_rank: effective_rank(&ps.0),
            reg_min: min_eig(&rs),
            u_var,
        }
    }

    fn novelty(&self, cand: &CandidateRows) -> f64 {
        if self.dirs.is_empty() {
            return 1.0;
        }
        if cand.dirs.is_empty() {
            return 0.0;
        }
        let delta = self.frame.delta;
        let total: f64 = cand
            .dirs
            .iter()
            .map(|d| {
                let nearest = self
                    .dirs
                    .iter()
                    .map(|a| angle(a, d))
                    .fold(f64::INFINITY, f64::min);
                (nearest - delta).max(0.0) / PI
            })
            .sum();
        total / cand.dirs.len() as f64
    }

    /// Ball counts after appending `cand`: (updated existing counts, counts of the new points).
    fn counts_with(&self, cand: &CandidateRows) -> (Vec<usize>, Vec<usize>) {
        let r2 = self.frame.radius * self.frame.radius;
        let close = |a: &[f64], b: &[f64]| {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() <= r2
        };
        let mut old = self.counts.clone();
        let mut new = vec![1usize; cand.points.len()];
        for (j, q) in cand.points.iter().enumerate() {
            for (i, p) in self.points.iter().enumerate() {
                if close(p, q) {
                    old[i] += 1;
                    new[j] += 1;
                }
            }
            for k in (j + 1)..cand.points.len() {
                if close(q, &cand.points[k]) {
                    new[j] += 1;
                    new[k] += 1;
                }
            }
        }
        (old, new)
    }

    pub fn terms(&self, cand: &CandidateRows) -> ScoreTerms {
        let mut x = self.x.clone();
        let mut psi = self.psi.clone();
        let mut phi = self.phi.clone();
        for k in 0..cand.states.len() {
            x.add(&cand.states[k]);
            psi.add(&cand.psi[k]);
            phi.add(&cand.phi[k]);
        }
        let after = self.layer_values(&x, &psi, &phi);
        let before = self.values;
        let (old, new) = self.counts_with(cand);
        let max_after = old.iter().chain(&new).copied().max().unwrap_or(0);
        let cluster_penalty =
            max_after.saturating_sub(self.max_count) as f64 / cand.points.len().max(1) as f64;
        ScoreTerms {
            d_state_min: after.state_min - before.state_min,
            d_lift_logdet: after.lift_logdet - before.lift_logdet,
            d_lift_eff_rank: after.lift_eff_rank - before.lift_eff_rank,
            d_reg_min: after.reg_min - before.reg_min,
            novelty: self.novelty(cand),
            d_u_var: after.u_var - before.u_var,
            cluster_penalty,
        }
    }

    pub fn score(&self, cand: &CandidateRows, w: &IgpeWeights) -> f64 {
        self.terms(cand).score(w)
    }

    pub fn append(&mut self, cand: &CandidateRows) {
        let (old, new) = self.counts_with(cand);
        for k in 0..cand.states.len() {
            self.x.add(&cand.states[k]);
            self.psi.add(&cand.psi[k]);
            self.phi.add(&cand.phi[k]);
        }
        self.values = self.layer_values(&self.x, &self.psi, &self.phi);
        extend_direction_set(&mut self.dirs, &cand.dirs, self.frame.delta);
        self.counts = old;
        self.counts.extend(new);
        self.points.extend(cand.points.iter().cloned());
        self.max_count = self.counts.iter().copied().max().unwrap_or(0);
    }
}
