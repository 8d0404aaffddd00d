//! EDMDc regression in active standardized coordinates.
//!
//! The regression `Ybar = Phibar Kbar + E` is solved on active columns only.
//! With `lambda = 0` the solve is a rank-revealing pseudoinverse and a
//! rank-deficient design is flagged rather than regularized.

pub mod theory;

use nalgebra::{DMatrix, DVector};

use crate::dataset::Dataset;
use crate::error::{Error, Layer, Result};
use crate::lifting::{build_design, Dictionary, LiftedDesign};
use crate::linalg::pinv;
use crate::standardize::{standardize, StandardizedDesign, Thresholds};

/// Means, scales and activity of the raw columns of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub mu: Vec<f64>,
    pub scale: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ColumnStats {
    fn of(s: &StandardizedDesign) -> Self {
        Self {
            mu: s.mu.clone(),
            scale: s.scale.clone(),
            mask: s.active_mask.clone(),
        }
    }

    fn active(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&j| self.mask[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdmdcModel {
    /// `active_dim(Phi) x active_dim(Y)` in standardized coordinates.
    pub kbar: DMatrix<f64>,
    pub phi_stats: ColumnStats,
    pub y_stats: ColumnStats,
    pub lambda: f64,
    pub dict: Dictionary,
    pub n_u: usize,
    /// Set when `lambda = 0` and the active design was rank deficient.
    pub rank_deficient: bool,
}

/// Affine lifted dynamics `z+ = A z + B u + c` in raw lifted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl LiftedLinearModel {
    pub fn step(&self, z: &DVector<f64>, u: &[f64]) -> DVector<f64> {
        &self.a * z + &self.b * DVector::from_column_slice(u) + &self.c
    }
}

pub fn fit(
    design: &LiftedDesign,
    dict: &Dictionary,
    lambda: f64,
    th: &Thresholds,
) -> Result<EdmdcModel> {
    if design.d_psi != dict.d_psi() {
        return Err(Error::Dimension {
            expected: dict.d_psi(),
            got: design.d_psi,
            context: "design vs dictionary",
        });
    }
    let (kbar, phi_s, y_s, rank_deficient) = fit_matrices(&design.phi, &design.y, lambda, th)?;
    Ok(EdmdcModel {
        kbar,
        phi_stats: ColumnStats::of(&phi_s),
        y_stats: ColumnStats::of(&y_s),
        lambda,
        dict: dict.clone(),
        n_u: design.n_u,
        rank_deficient,
    })
}

/// Ridge/least-squares solve on the active standardized parts of `phi` and `y`.
pub fn fit_matrices(
    phi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    th: &Thresholds,
) -> Result<(DMatrix<f64>, StandardizedDesign, StandardizedDesign, bool)> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::usage("lambda must be finite and nonnegative"));
    }
    if phi.nrows() != y.nrows() {
        return Err(Error::Dimension {
            expected: phi.nrows(),
            got: y.nrows(),
            context: "rows of Y vs Phi",
        });
    }
    let phi_s = standardize(phi, th).map_err(|e| e.in_layer(Layer::Regression))?;
    let y_s = standardize(y, th).map_err(|e| e.in_layer(Layer::Target))?;
    let z = &phi_s.zbar;
    let rank_deficient = phi_s.active_rank < phi_s.active_dim;
    let kbar = if lambda == 0.0 {
        pinv(z, th.rank_tol) * &y_s.zbar
    } else {
        let p = z.ncols();
        let g = z.tr_mul(z) + DMatrix::identity(p, p) * lambda;
        let rhs = z.tr_mul(&y_s.zbar);
        g.cholesky()
            .ok_or_else(|| {
                Error::degenerate(Layer::Regression, "ridge system not positive definite")
            })?
            .solve(&rhs)
    };
    if kbar.iter().any(|v| !v.is_finite()) {
        return Err(Error::degenerate(
            Layer::Regression,
            "nonfinite coefficients",
        ));
    }
    Ok((kbar, phi_s, y_s, rank_deficient))
}

impl EdmdcModel {
    pub fn d_psi(&self) -> usize {
        self.dict.d_psi()
    }

    /// De-standardized affine lifted dynamics.
    pub fn lifted_linear(&self) -> LiftedLinearModel {
        let d = self.d_psi();
        let p = d + self.n_u;
        let phi_act = self.phi_stats.active();
        let y_act = self.y_stats.active();
        let mut coef = DMatrix::zeros(d, p);
        let mut c = DVector::from_column_slice(&self.y_stats.mu);
        for (a, &j) in y_act.iter().enumerate() {
            for (b, &i) in phi_act.iter().enumerate() {
                let w = self.y_stats.scale[j] * self.kbar[(b, a)] / self.phi_stats.scale[i];
                coef[(j, i)] = w;
                c[j] -= w * self.phi_stats.mu[i];
            }
        }
        LiftedLinearModel {
            a: coef.columns(0, d).clone_owned(),
            b: coef.columns(d, self.n_u).clone_owned(),
            c,
        }
    }

    /// Predicted next lifted vector for a raw regressor row `[psi(x); u]`.
    pub fn predict_lifted(&self, phi_row: &[f64]) -> Vec<f64> {
        let lin = self.lifted_linear();
        let d = self.d_psi();
        let z = DVector::from_column_slice(&phi_row[..d]);
        lin.step(&z, &phi_row[d..]).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepErrors {
    pub lift_rmse: f64,
    pub state_rmse: f64,
}

/// Entrywise RMS one-step errors in raw lifted coordinates and on the state block.
pub fn one_step_errors(model: &EdmdcModel, dataset: &Dataset) -> Result<OneStepErrors> {
    let design = build_design(dataset, &model.dict)?;
    Ok(one_step_errors_on(model, &design))
}

pub fn one_step_errors_on(model: &EdmdcModel, design: &LiftedDesign) -> OneStepErrors {
    let lin = model.lifted_linear();
    let n = design.n();
    let d = design.d_psi;
    let n_x = model.dict.n_x;
    let pred = &design.psi * lin.a.transpose()
        + &design.u * lin.b.transpose()
        + DMatrix::from_fn(n, d, |_, j| lin.c[j]);
    let resid = &design.y - pred;
    let lift_ss: f64 = resid.iter().map(|v| v * v).sum();
    let state_ss: f64 = resid.columns(0, n_x).iter().map(|v| v * v).sum();
    OneStepErrors {
        lift_rmse: (lift_ss / (n * d) as f64).sqrt(),
        state_rmse: (state_ss / (n * n_x) as f64).sqrt(),
    }
}
