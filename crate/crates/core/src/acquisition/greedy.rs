//! Greedy log-determinant and minimum-eigenvalue block selection.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{logdet_spd, sym_min_eigenvalue};

/// `Phi_i^T Phi_i` for each block.
pub fn information_blocks(blocks: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    blocks.iter().map(|b| b.tr_mul(b)).collect()
}

fn accumulate(p: usize, info: &[DMatrix<f64>], set: &[usize], eps: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(p, p) * eps;
    for &i in set {
        m += &info[i];
    }
    m
}

/// `F(S) = log det(eps I + sum_{i in S} M_i)` on information blocks `M_i`.
pub fn dopt_objective(info: &[DMatrix<f64>], set: &[usize], eps: f64) -> f64 {
    let p = info.first().map_or(0, DMatrix::nrows);
    logdet_spd(&accumulate(p, info, set, eps))
}

/// Greedy selection maximizing a set function of the accumulated information.
fn greedy_by(
    info: &[DMatrix<f64>],
    budget: usize,
    eps: f64,
    value: impl Fn(&DMatrix<f64>) -> f64,
) -> Vec<usize> {
    let Some(p) = info.first().map(DMatrix::nrows) else {
        return Vec::new();
    };
    let budget = budget.min(info.len());
    let mut acc = DMatrix::identity(p, p) * eps;
    let mut chosen = vec![false; info.len()];
    let mut out = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in info.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            let v = value(&(&acc + m));
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (i, _) = best.expect("budget <= candidates");
        chosen[i] = true;
        acc += &info[i];
        out.push(i);
    }
    out
}

/// Greedy D-optimal selection over regression blocks `Phi_i`; ties go to the lowest index.
pub fn greedy_dopt(blocks: &[DMatrix<f64>], budget: usize, eps: f64) -> Vec<usize> {
    greedy_dopt_info(&information_blocks(blocks), budget, eps)
}

pub fn greedy_dopt_info(info: &[DMatrix<f64>], budget: usize, eps: f64) -> Vec<usize> {
    greedy_by(info, budget, eps, logdet_spd)
}

/// Greedy E-optimal selection: maximizes `lambda_min(eps I + sum M_i)`.
pub fn greedy_eopt_info(info: &[DMatrix<f64>], budget: usize, eps: f64) -> Vec<usize> {
    greedy_by(info, budget, eps, sym_min_eigenvalue)
}

/// Row count, column sums and cross-product sums of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub n: usize,
    pub s1: DVector<f64>,
    pub s2: DMatrix<f64>,
}

impl BlockStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            n: 0,
            s1: DVector::zeros(p),
            s2: DMatrix::zeros(p, p),
        }
    }

    pub fn of(block: &DMatrix<f64>) -> Self {
        Self {
            n: block.nrows(),
            s1: block.row_sum().transpose(),
            s2: block.tr_mul(block),
        }
    }

    pub fn merged(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            s1: &self.s1 + &other.s1,
            s2: &self.s2 + &other.s2,
        }
    }

    /// `Zbar^T Zbar` of the pooled rows standardized by their own mean and population
    /// standard deviation; columns with variance below `var_threshold` are zero.
    pub fn standardized_information(&self, var_threshold: f64) -> DMatrix<f64> {
        let p = self.s1.len();
        if self.n == 0 {
            return DMatrix::zeros(p, p);
        }
        let n = self.n as f64;
        let m = &self.s1 / n;
        let cov = |i: usize, j: usize| self.s2[(i, j)] / n - m[i] * m[j];
        let sd: Vec<f64> = (0..p)
            .map(|j| {
                let v = cov(j, j);
                if v >= var_threshold && v > 0.0 {
                    v.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        DMatrix::from_fn(p, p, |i, j| {
            if sd[i] == 0.0 || sd[j] == 0.0 {
                0.0
            } else {
                n * cov(i, j) / (sd[i] * sd[j])
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `log det(eps I + G)`
    D,
    /// `lambda_min(eps I + G)`
    E,
}

/// Greedy selection where `G` is the information of the union standardized on itself,
/// the coordinates the regression certificate is computed in.
pub fn greedy_standardized(
    blocks: &[DMatrix<f64>],
    budget: usize,
    eps: f64,
    var_threshold: f64,
    criterion: Criterion,
) -> Vec<usize> {
    let Some(p) = blocks.first().map(DMatrix::ncols) else {
        return Vec::new();
    };
    let stats: Vec<BlockStats> = blocks.iter().map(BlockStats::of).collect();
    let value = |s: &BlockStats| {
        let g = s.standardized_information(var_threshold) + DMatrix::identity(p, p) * eps;
        match criterion {
            Criterion::D => logdet_spd(&g),
            Criterion::E => sym_min_eigenvalue(&g),
        }
    };
    let budget = budget.min(blocks.len());
    let mut acc = BlockStats::zeros(p);
    let mut chosen = vec![false; blocks.len()];
    let mut out = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(usize, f64)> = None;
        for (i, st) in stats.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            let v = value(&acc.merged(st));
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (i, _) = best.expect("budget <= candidates");
        chosen[i] = true;
        acc = acc.merged(&stats[i]);
        out.push(i);
    }
    out
}
