use std::fmt;
use std::sync::Arc;

use super::SimulationError;

type DriftFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type InputFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// Control-affine plant `ẋ = f(x) + g(x)u` given as closures.
#[derive(Clone)]
pub struct CustomAffine {
    state_dim: usize,
    input_dim: usize,
    drift: Arc<DriftFn>,
    input: Arc<InputFn>,
}

impl CustomAffine {
    /// `drift(x, out)` writes `f(x)`; `input(x, u, out)` adds `g(x)u` to `out`.
    pub fn new(
        state_dim: usize,
        input_dim: usize,
        drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        input: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            state_dim,
            input_dim,
            drift: Arc::new(drift),
            input: Arc::new(input),
        }
    }
}

impl fmt::Debug for CustomAffine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomAffine")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum DynamicsModel {
    /// Planar robot with heading: `ẋ = R(x₃)[v₁, v₂, ω]ᵀ`.
    OmniRobot,
    /// `ẋ = u` in `n` dimensions.
    SingleIntegrator { n: usize },
    Custom(CustomAffine),
}

impl DynamicsModel {
    pub fn state_dim(&self) -> usize {
        match self {
            DynamicsModel::OmniRobot => 3,
            DynamicsModel::SingleIntegrator { n } => *n,
            DynamicsModel::Custom(c) => c.state_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            DynamicsModel::OmniRobot => 3,
            DynamicsModel::SingleIntegrator { n } => *n,
            DynamicsModel::Custom(c) => c.input_dim,
        }
    }

    /// `out = f(x) + g(x)u + d`.
    #[inline]
    pub fn rhs(&self, x: &[f64], u: &[f64], d: &[f64], out: &mut [f64]) {
        match self {
            DynamicsModel::OmniRobot => {
                let (s, c) = x[2].sin_cos();
                out[0] = c * u[0] - s * u[1] + d[0];
                out[1] = s * u[0] + c * u[1] + d[1];
                out[2] = u[2] + d[2];
            }
            DynamicsModel::SingleIntegrator { .. } => {
                for ((o, ui), di) in out.iter_mut().zip(u).zip(d) {
                    *o = ui + di;
                }
            }
            DynamicsModel::Custom(c) => {
                (c.drift)(x, out);
                (c.input)(x, u, out);
                for (o, di) in out.iter_mut().zip(d) {
                    *o += di;
                }
            }
        }
    }
}

/// Reusable RK4 stepper with its own scratch space.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` by one step with `u` and `d` held constant.
    #[inline]
    pub fn step(&mut self, model: &DynamicsModel, x: &mut [f64], u: &[f64], d: &[f64], dt: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        model.rhs(x, u, d, k1);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        model.rhs(tmp, u, d, k2);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        model.rhs(tmp, u, d, k3);
        for i in 0..x.len() {
            tmp[i] = x[i] + dt * k3[i];
        }
        model.rhs(tmp, u, d, k4);
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// One RK4 step of `ẋ = f(x) + g(x)u + d` from `x`.
pub fn step_dynamics(
    model: &DynamicsModel,
    x: &[f64],
    u: &[f64],
    d: &[f64],
    dt: f64,
) -> Result<Vec<f64>, SimulationError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimulationError::InvalidParameter("dt must be positive"));
    }
    let n = model.state_dim();
    for (expected, got) in [(n, x.len()), (model.input_dim(), u.len()), (n, d.len())] {
        if expected != got {
            return Err(SimulationError::DimensionMismatch { expected, got });
        }
    }
    let mut next = x.to_vec();
    Rk4::new(n).step(model, &mut next, u, d, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(SimulationError::NumericalBlowup { t: dt });
    }
    Ok(next)
}
