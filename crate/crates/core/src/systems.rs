//! Controlled benchmark systems and their fixed-step RK4 simulation.
//!
//! Inputs are held constant over each integration step (zero-order hold).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemId {
    Duffing,
    Vdp,
    Lorenz,
    /// Linear test system `x' = A x + B u`.
    Linear,
}

impl SystemId {
    pub const BENCHMARKS: [SystemId; 3] = [SystemId::Duffing, SystemId::Vdp, SystemId::Lorenz];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Duffing => "duffing",
            SystemId::Vdp => "vdp",
            SystemId::Lorenz => "lorenz",
            SystemId::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "duffing" => Some(SystemId::Duffing),
            "vdp" | "vanderpol" | "van-der-pol" => Some(SystemId::Vdp),
            "lorenz" => Some(SystemId::Lorenz),
            "linear" => Some(SystemId::Linear),
            _ => None,
        }
    }
}

impl std::fmt::Display for SystemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Right-hand-side parameterization.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// `x'' = -delta x' - alpha x - beta x^3 + u`
    Duffing {
        delta: f64,
        alpha: f64,
        beta: f64,
    },
    /// `x'' = mu (1 - x^2) x' - x + u`
    VanDerPol {
        mu: f64,
    },
    /// Lorenz-63 with the input entering the second equation.
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    Linear {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub id: SystemId,
    pub dynamics: Dynamics,
    pub n_x: usize,
    pub n_u: usize,
    /// Componentwise amplitude limit for admissible inputs.
    pub input_bound: f64,
    /// Axis-aligned box initial conditions are drawn from, one `(lo, hi)` per state.
    pub init_box: Vec<(f64, f64)>,
}

impl SystemSpec {
    pub fn duffing() -> Self {
        Self::from_dynamics(
            SystemId::Duffing,
            Dynamics::Duffing {
                delta: 0.5,
                alpha: -1.0,
                beta: 1.0,
            },
            2.0,
            vec![(-2.0, 2.0), (-2.0, 2.0)],
        )
        .expect("default duffing spec is valid")
    }

    pub fn vdp() -> Self {
        Self::from_dynamics(
            SystemId::Vdp,
            Dynamics::VanDerPol { mu: 1.0 },
            2.0,
            vec![(-2.0, 2.0), (-2.0, 2.0)],
        )
        .expect("default vdp spec is valid")
    }

    pub fn lorenz() -> Self {
        Self::from_dynamics(
            SystemId::Lorenz,
            Dynamics::Lorenz {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
            },
            20.0,
            vec![(-20.0, 20.0), (-25.0, 25.0), (5.0, 45.0)],
        )
        .expect("default lorenz spec is valid")
    }

    pub fn benchmark(id: SystemId) -> Self {
        match id {
            SystemId::Duffing => Self::duffing(),
            SystemId::Vdp => Self::vdp(),
            SystemId::Lorenz => Self::lorenz(),
            SystemId::Linear => Self::linear(
                DMatrix::from_element(1, 1, -1.0),
                DMatrix::from_element(1, 1, 1.0),
                1.0,
                vec![(-1.0, 1.0)],
            )
            .expect("scalar linear spec is valid"),
        }
    }

    pub fn linear(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        input_bound: f64,
        init_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() {
            return Err(Error::usage(
                "linear system needs square A and B with matching rows",
            ));
        }
        Self::from_dynamics(
            SystemId::Linear,
            Dynamics::Linear { a, b },
            input_bound,
            init_box,
        )
    }

    pub fn from_dynamics(
        id: SystemId,
        dynamics: Dynamics,
        input_bound: f64,
        init_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let (n_x, n_u, params): (usize, usize, Vec<f64>) = match &dynamics {
            Dynamics::Duffing { delta, alpha, beta } => (2, 1, vec![*delta, *alpha, *beta]),
            Dynamics::VanDerPol { mu } => (2, 1, vec![*mu]),
            Dynamics::Lorenz { sigma, rho, beta } => (3, 1, vec![*sigma, *rho, *beta]),
            Dynamics::Linear { a, b } => (
                a.nrows(),
                b.ncols(),
                a.iter().chain(b.iter()).copied().collect(),
            ),
        };
        let expected = match id {
            SystemId::Duffing => matches!(dynamics, Dynamics::Duffing { .. }),
            SystemId::Vdp => matches!(dynamics, Dynamics::VanDerPol { .. }),
            SystemId::Lorenz => matches!(dynamics, Dynamics::Lorenz { .. }),
            SystemId::Linear => matches!(dynamics, Dynamics::Linear { .. }),
        };
        if !expected {
            return Err(Error::usage(format!(
                "dynamics do not match system id {id}"
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::usage(format!("{id}: nonfinite system parameter")));
        }
        if !(input_bound > 0.0 && input_bound.is_finite()) {
            return Err(Error::usage(format!("{id}: input_bound must be positive")));
        }
        if init_box.len() != n_x || init_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::usage(format!(
                "{id}: init_box must give {n_x} ordered ranges"
            )));
        }
        Ok(Self {
            id,
            dynamics,
            n_x,
            n_u,
            input_bound,
            init_box,
        })
    }

    /// The unforced equilibrium used as a fixed-point check.
    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.n_x]
    }
}

/// Continuous-time right-hand side `x' = f(x, u)`.
pub fn vector_field(spec: &SystemSpec, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_dims(spec, x, u)?;
    let mut out = vec![0.0; spec.n_x];
    eval_field(spec, x, u, &mut out);
    Ok(out)
}

fn check_dims(spec: &SystemSpec, x: &[f64], u: &[f64]) -> Result<()> {
    if x.len() != spec.n_x {
        return Err(Error::Dimension {
            expected: spec.n_x,
            got: x.len(),
            context: "state",
        });
    }
    if u.len() != spec.n_u {
        return Err(Error::Dimension {
            expected: spec.n_u,
            got: u.len(),
            context: "input",
        });
    }
    Ok(())
}

fn eval_field(spec: &SystemSpec, x: &[f64], u: &[f64], out: &mut [f64]) {
    match &spec.dynamics {
        Dynamics::Duffing { delta, alpha, beta } => {
            out[0] = x[1];
            out[1] = -delta * x[1] - alpha * x[0] - beta * x[0].powi(3) + u[0];
        }
        Dynamics::VanDerPol { mu } => {
            out[0] = x[1];
            out[1] = mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
        }
        Dynamics::Lorenz { sigma, rho, beta } => {
            out[0] = sigma * (x[1] - x[0]);
            out[1] = x[0] * (rho - x[2]) - x[1] + u[0];
            out[2] = x[0] * x[1] - beta * x[2];
        }
        Dynamics::Linear { a, b } => {
            for (i, o) in out.iter_mut().enumerate() {
                let ax: f64 = (0..spec.n_x).map(|j| a[(i, j)] * x[j]).sum();
                let bu: f64 = (0..spec.n_u).map(|j| b[(i, j)] * u[j]).sum();
                *o = ax + bu;
            }
        }
    }
}

/// One classical fourth-order Runge-Kutta step with `u` held over the step.
pub fn rk4_step(spec: &SystemSpec, x: &[f64], u: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_dims(spec, x, u)?;
    if !(dt > 0.0) {
        return Err(Error::usage("dt must be positive"));
    }
    let next = rk4_unchecked(spec, x, u, dt);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::Divergence {
            step: 0,
            state: next,
        })
    }
}

fn rk4_unchecked(spec: &SystemSpec, x: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    eval_field(spec, x, u, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    eval_field(spec, &tmp, u, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    eval_field(spec, &tmp, u, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    eval_field(spec, &tmp, u, &mut k4);

    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `inputs.len() + 1` states.
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least x0")
    }
}

/// Integrates `inputs.len()` RK4 steps from `x0`.
pub fn simulate_segment(
    spec: &SystemSpec,
    x0: &[f64],
    inputs: &[Vec<f64>],
    dt: f64,
) -> Result<Trajectory> {
    check_dims(spec, x0, &vec![0.0; spec.n_u])?;
    if !(dt > 0.0) {
        return Err(Error::usage("dt must be positive"));
    }
    let tol = spec.input_bound * (1.0 + 1e-12);
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.to_vec());
    for (k, u) in inputs.iter().enumerate() {
        check_dims(spec, x0, u)?;
        if u.iter().any(|v| !(v.abs() <= tol)) {
            return Err(Error::usage(format!(
                "input {u:?} at step {k} exceeds bound {}",
                spec.input_bound
            )));
        }
        let next = rk4_unchecked(spec, &states[k], u, dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k,
                state: states[k].clone(),
            });
        }
        states.push(next);
    }
    Ok(Trajectory {
        states,
        inputs: inputs.to_vec(),
        dt,
    })
}
