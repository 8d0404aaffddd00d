//! Centering, active-column screening and scaling.
//!
//! `M = 1 mu^T + Zbar D` on the active columns. Scales use the population
//! (1/N) convention so that `(1/N) Zbar^T Zbar` is the column correlation
//! matrix of the active columns.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Layer, Result};
use crate::linalg::singular_values;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Absolute threshold on raw column variance.
    pub var_threshold: f64,
    /// Relative singular-value cutoff for the numerical rank.
    pub rank_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            var_threshold: 1e-10,
            rank_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDesign {
    /// N x active_dim.
    pub zbar: DMatrix<f64>,
    /// Column means of all p raw columns.
    pub mu: Vec<f64>,
    /// Column standard deviations of all p raw columns.
    pub scale: Vec<f64>,
    pub active_mask: Vec<bool>,
    pub active_dim: usize,
    pub active_rank: usize,
    pub var_threshold: f64,
    /// Singular values of `zbar`, descending.
    pub singular_values: Vec<f64>,
}

impl StandardizedDesign {
    pub fn n(&self) -> usize {
        self.zbar.nrows()
    }

    pub fn p(&self) -> usize {
        self.active_mask.len()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.active_mask[j]).collect()
    }

    /// Eigenvalues of `(1/N) Zbar^T Zbar` in ascending order, via the singular values.
    pub fn gram_spectrum(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut ev: Vec<f64> = self.singular_values.iter().map(|s| s * s / n).collect();
        ev.resize(self.active_dim, 0.0);
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Standardizes a raw row `m_row` (length p) onto the active columns.
    pub fn apply_row(&self, m_row: &[f64]) -> Vec<f64> {
        self.active_indices()
            .into_iter()
            .map(|j| (m_row[j] - self.mu[j]) / self.scale[j])
            .collect()
    }
}

pub fn standardize(m: &DMatrix<f64>, thresholds: &Thresholds) -> Result<StandardizedDesign> {
    let (n, p) = m.shape();
    if n < 2 {
        return Err(Error::usage(format!(
            "standardize needs N >= 2 rows, got {n}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::usage("standardize input contains nonfinite entries"));
    }
    let nf = n as f64;
    let mut mu = Vec::with_capacity(p);
    let mut scale = Vec::with_capacity(p);
    let mut active_mask = Vec::with_capacity(p);
    for j in 0..p {
        let col = m.column(j);
        let mean = col.sum() / nf;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
        mu.push(mean);
        scale.push(var.sqrt());
        active_mask.push(var >= thresholds.var_threshold && var > 0.0);
    }
    let active: Vec<usize> = (0..p).filter(|&j| active_mask[j]).collect();
    if active.is_empty() {
        return Err(Error::degenerate(
            Layer::Regression,
            format!(
                "all {p} columns have variance below {}",
                thresholds.var_threshold
            ),
        ));
    }
    let zbar = DMatrix::from_fn(n, active.len(), |i, k| {
        let j = active[k];
        (m[(i, j)] - mu[j]) / scale[j]
    });
    let sv = singular_values(&zbar);
    let active_rank = rank_from_singular_values(&sv, thresholds.rank_tol);
    Ok(StandardizedDesign {
        active_dim: active.len(),
        zbar,
        mu,
        scale,
        active_mask,
        active_rank,
        var_threshold: thresholds.var_threshold,
        singular_values: sv,
    })
}

/// Count of singular values above `rank_tol * sigma_max`.
pub fn active_rank(zbar: &DMatrix<f64>, rank_tol: f64) -> usize {
    rank_from_singular_values(&singular_values(zbar), rank_tol)
}

fn rank_from_singular_values(sv: &[f64], rank_tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}
