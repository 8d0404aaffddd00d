//! Open-loop prediction and closed-loop tracking on an identified lifted model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::acquisition::{sample_held_inputs, sample_initial_states};
use crate::edmdc::{EdmdcModel, LiftedLinearModel};
use crate::error::{Error, Result};
use crate::systems::{rk4_step, simulate_segment, SystemId, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub pred_horizon: usize,
    pub ctrl_horizon: usize,
    pub n_eval_rollouts: usize,
    /// Steps each random evaluation input is held for.
    pub input_hold: usize,
    /// Setpoint; `None` uses the per-system default.
    pub reference: Option<Vec<f64>>,
    /// Closed-loop initial state; `None` draws it from the initial box.
    pub ctrl_initial: Option<Vec<f64>>,
    /// Weight on the coordinate monomials.
    pub q_weight: f64,
    pub r_weight: f64,
    pub failure_threshold: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            pred_horizon: 200,
            ctrl_horizon: 100,
            n_eval_rollouts: 5,
            input_hold: 12,
            reference: None,
            ctrl_initial: None,
            q_weight: 1.0,
            r_weight: 0.1,
            failure_threshold: 1e6,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pred_horizon == 0 || self.ctrl_horizon == 0 || self.n_eval_rollouts == 0 {
            return Err(Error::Config(
                "horizons and n_eval_rollouts must be at least 1".into(),
            ));
        }
        if !(self.failure_threshold > 0.0) || !(self.r_weight > 0.0) || !(self.q_weight >= 0.0) {
            return Err(Error::Config(
                "failure_threshold and r_weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn reference_for(&self, spec: &SystemSpec) -> Vec<f64> {
        self.reference
            .clone()
            .unwrap_or_else(|| default_reference(spec))
    }
}

/// Non-equilibrium setpoints inside the sampling boxes.
pub fn default_reference(spec: &SystemSpec) -> Vec<f64> {
    match spec.id {
        SystemId::Duffing | SystemId::Vdp => vec![0.5, 0.0],
        SystemId::Lorenz => vec![-8.0, -8.0, 27.0],
        SystemId::Linear => vec![0.0; spec.n_x],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskResult {
    pub open_loop_rmse: f64,
    pub tracking_rmse: f64,
    pub prediction_failed: bool,
    pub control_failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// Predicted states for steps `1..=len`; truncated at a failure.
    pub states: Vec<Vec<f64>>,
    pub failed: bool,
}

/// Lifts `x0` once and iterates the lifted affine map, reading states from the coordinate monomials.
pub fn open_loop_predict(
    model: &EdmdcModel,
    x0: &[f64],
    inputs: &[Vec<f64>],
    horizon: usize,
    failure_threshold: f64,
) -> Result<Rollout> {
    if horizon > inputs.len() {
        return Err(Error::usage(format!(
            "horizon {horizon} exceeds {} inputs",
            inputs.len()
        )));
    }
    let lin = model.lifted_linear();
    let n_x = model.dict.n_x;
    let mut z = DVector::from_vec(model.dict.lift(x0)?);
    let mut states = Vec::with_capacity(horizon);
    for u in &inputs[..horizon] {
        z = lin.step(&z, u);
        if z.iter()
            .any(|v| !v.is_finite() || v.abs() > failure_threshold)
        {
            return Ok(Rollout {
                states,
                failed: true,
            });
        }
        states.push(z.rows(0, n_x).iter().copied().collect());
    }
    Ok(Rollout {
        states,
        failed: false,
    })
}

fn rms_error(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    let ss: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum();
    (ss / pred.len().max(1) as f64).sqrt()
}

/// Mean over fresh rollouts of the RMS state error; `(rmse, failed)`.
pub fn open_loop_rmse(
    model: &EdmdcModel,
    spec: &SystemSpec,
    task: &TaskConfig,
    dt: f64,
    seed: u64,
) -> Result<(f64, bool)> {
    let h = task.pred_horizon;
    let x0s = sample_initial_states(spec, seed, 0, task.n_eval_rollouts);
    let mut total = 0.0;
    for (r, x0) in x0s.iter().enumerate() {
        let inputs = sample_held_inputs(spec, seed, r as u64, h, task.input_hold);
        let truth = simulate_segment(spec, x0, &inputs, dt)?;
        let pred = open_loop_predict(model, x0, &inputs, h, task.failure_threshold)?;
        if pred.failed {
            return Ok((task.failure_threshold, true));
        }
        total += rms_error(&pred.states, &truth.states[1..]);
    }
    let rmse = total / x0s.len() as f64;
    if !rmse.is_finite() || rmse > task.failure_threshold {
        return Ok((task.failure_threshold, true));
    }
    Ok((rmse, false))
}

/// Solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dare {
    pub p: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub iterations: usize,
    /// Relative residual `|A'PA - P - A'PB (R + B'PB)^-1 B'PA + Q| / max(|P|, 1)`.
    pub residual: f64,
}

/// Structure-preserving doubling for `P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<Dare> {
    let n = a.nrows();
    if !a.is_square()
        || b.nrows() != n
        || q.shape() != (n, n)
        || r.shape() != (b.ncols(), b.ncols())
    {
        return Err(Error::usage("DARE dimension mismatch"));
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::usage("R must be invertible"))?;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut ak = a.clone();
    let mut gk = b * &r_inv * b.transpose();
    let mut hk = q.clone();
    let mut iterations = 0;
    for it in 1..=100 {
        iterations = it;
        let w = (&eye + &gk * &hk)
            .try_inverse()
            .ok_or_else(|| Error::usage("doubling step singular"))?;
        let a_next = &ak * &w * &ak;
        let g_next = &gk + &ak * &w * &gk * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w * &ak;
        let change = (&h_next - &hk).norm() / h_next.norm().max(1.0);
        ak = a_next;
        gk = 0.5 * (&g_next + g_next.transpose());
        hk = 0.5 * (&h_next + h_next.transpose());
        if !hk.iter().all(|v| v.is_finite()) {
            break;
        }
        if change < 1e-13 {
            break;
        }
    }
    let p = hk;
    let s = r + b.transpose() * &p * b;
    let gain = s
        .clone()
        .try_inverse()
        .map(|si| si * b.transpose() * &p * a)
        .unwrap_or_else(|| DMatrix::from_element(b.ncols(), n, f64::NAN));
    let res = a.transpose() * &p * a - &p - a.transpose() * &p * b * &gain + q;
    let residual = res.norm() / p.norm().max(1.0);
    Ok(Dare {
        p,
        gain,
        iterations,
        residual,
    })
}

/// LQR gain on the identified lifted pair with weight on the coordinate monomials.
pub fn lifted_lqr(lin: &LiftedLinearModel, n_x: usize, task: &TaskConfig) -> Option<DMatrix<f64>> {
    let d = lin.a.nrows();
    let m = lin.b.ncols();
    let q = DMatrix::from_fn(d, d, |i, j| {
        if i == j && i < n_x {
            task.q_weight
        } else {
            0.0
        }
    });
    let r = DMatrix::identity(m, m) * task.r_weight;
    let dare = solve_dare(&lin.a, &lin.b, &q, &r).ok()?;
    let ok = dare.residual < 1e-6 && dare.gain.iter().all(|v| v.is_finite());
    ok.then_some(dare.gain)
}

/// Closed loop on the true simulator under `u = -K (psi(x) - psi(x_ref))`, clipped; `(rmse, failed)`.
pub fn tracking_control(
    model: &EdmdcModel,
    spec: &SystemSpec,
    task: &TaskConfig,
    dt: f64,
    seed: u64,
) -> Result<(f64, bool)> {
    let n_x = spec.n_x;
    let lin = model.lifted_linear();
    let Some(k) = lifted_lqr(&lin, n_x, task) else {
        return Ok((task.failure_threshold, true));
    };
    let x_ref = task.reference_for(spec);
    let z_ref = DVector::from_vec(model.dict.lift(&x_ref)?);
    let mut x = match &task.ctrl_initial {
        Some(x0) => x0.clone(),
        None => sample_initial_states(spec, seed, 1, 1).remove(0),
    };
    let b = spec.input_bound;
    let mut ss = 0.0;
    for _ in 0..task.ctrl_horizon {
        let z = DVector::from_vec(model.dict.lift(&x)?);
        let u: Vec<f64> = (-&k * (z - &z_ref))
            .iter()
            .map(|v| v.clamp(-b, b))
            .collect();
        if u.iter().any(|v| !v.is_finite()) {
            return Ok((task.failure_threshold, true));
        }
        x = match rk4_step(spec, &x, &u, dt) {
            Ok(x) => x,
            Err(Error::Divergence { .. }) => return Ok((task.failure_threshold, true)),
            Err(e) => return Err(e),
        };
        ss += x
            .iter()
            .zip(&x_ref)
            .map(|(a, r)| (a - r).powi(2))
            .sum::<f64>();
    }
    let rmse = (ss / task.ctrl_horizon as f64).sqrt();
    if !rmse.is_finite() || rmse > task.failure_threshold {
        return Ok((task.failure_threshold, true));
    }
    Ok((rmse, false))
}

pub fn evaluate_tasks(
    model: &EdmdcModel,
    spec: &SystemSpec,
    task: &TaskConfig,
    dt: f64,
    seed: u64,
) -> Result<TaskResult> {
    task.validate()?;
    let (open_loop_rmse, prediction_failed) = open_loop_rmse(model, spec, task, dt, seed)?;
    let (tracking_rmse, control_failed) = tracking_control(model, spec, task, dt, seed)?;
    Ok(TaskResult {
        open_loop_rmse,
        tracking_rmse,
        prediction_failed,
        control_failed,
    })
}
