//! Closed-form funnel controller.
//!
//! Each state dimension is pushed towards the centre of its tube cross-section
//! with a logarithmic barrier on the normalized error. The law only reads the
//! state and the tube boundaries; it never sees the plant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tubes::Tube;

/// Normalized errors are clamped to `±(1 - ERROR_GUARD)` before the logarithm.
pub const ERROR_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("degenerate funnel: lower {lower} is not below upper {upper}")]
    Degenerate { lower: f64, upper: f64 },
    #[error("state left its funnel in dimension {dim} at t = {t} (normalized error {error})")]
    FunnelViolation { dim: usize, t: f64, error: f64 },
    #[error("gain {index} must be positive and finite, got {value}")]
    InvalidGain { index: usize, value: f64 },
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Per-dimension gains `κ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ControllerGains(Vec<f64>);

impl ControllerGains {
    pub fn new(kappa: Vec<f64>) -> Result<Self, ControlError> {
        if let Some((index, &value)) = kappa
            .iter()
            .enumerate()
            .find(|(_, k)| !(k.is_finite() && **k > 0.0))
        {
            return Err(ControlError::InvalidGain { index, value });
        }
        Ok(Self(kappa))
    }

    pub fn uniform(kappa: f64, dims: usize) -> Result<Self, ControlError> {
        Self::new(vec![kappa; dims])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ControllerGains {
    type Error = ControlError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ControllerGains> for Vec<f64> {
    fn from(g: ControllerGains) -> Self {
        g.0
    }
}

/// Intermediate quantities of the control law in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelState {
    /// Normalized error after clamping, in `(-1, 1)`.
    pub e: f64,
    /// `ln((1 + e) / (1 - e))`.
    pub epsilon: f64,
    /// `4 / ((1 - e²)(γ_U - γ_L))`.
    pub xi: f64,
    pub u: f64,
    /// The unclamped error was outside `(-1, 1)`.
    pub violated: bool,
}

/// `(x - centre) / half-width`; `0` at the centre, `±1` on the boundaries.
pub fn normalized_error(x: f64, lower: f64, upper: f64) -> Result<f64, ControlError> {
    if !(lower < upper) {
        return Err(ControlError::Degenerate { lower, upper });
    }
    Ok(raw_error(x, lower, upper))
}

#[inline]
fn raw_error(x: f64, lower: f64, upper: f64) -> f64 {
    (x - 0.5 * (upper + lower)) / (0.5 * (upper - lower))
}

/// Control law with the numerical guard; never fails for `lower < upper`.
#[inline]
pub fn funnel_state(x: f64, lower: f64, upper: f64, kappa: f64) -> FunnelState {
    let raw = raw_error(x, lower, upper);
    let violated = !(raw > -1.0 && raw < 1.0);
    let e = if raw.is_nan() {
        0.0
    } else {
        raw.clamp(-1.0 + ERROR_GUARD, 1.0 - ERROR_GUARD)
    };
    let epsilon = ((1.0 + e) / (1.0 - e)).ln();
    let xi = 4.0 / ((1.0 - e * e) * (upper - lower));
    FunnelState {
        e,
        epsilon,
        xi,
        u: -kappa * xi * epsilon,
        violated,
    }
}

/// Control input for one dimension; the state must lie strictly inside the funnel.
pub fn control_input(x: f64, lower: f64, upper: f64, kappa: f64) -> Result<f64, ControlError> {
    let e = normalized_error(x, lower, upper)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(ControlError::InvalidGain { index: 0, value: kappa });
    }
    if !(e > -1.0 && e < 1.0) {
        return Err(ControlError::FunnelViolation { dim: 0, t: f64::NAN, error: e });
    }
    Ok(funnel_state(x, lower, upper, kappa).u)
}

/// Maps the per-dimension control vector to the plant's input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelMap {
    /// Inputs are the per-dimension controls.
    #[default]
    Identity,
    /// The first two controls are rotated into the body frame by `R(θ)ᵀ`,
    /// with `θ = x[heading]`; the rest pass through.
    InverseRotation { heading: usize },
}

impl ChannelMap {
    pub fn apply(&self, x: &[f64], u: &mut [f64]) {
        if let ChannelMap::InverseRotation { heading } = *self {
            let (s, c) = x[heading].sin_cos();
            let (a, b) = (u[0], u[1]);
            u[0] = c * a + s * b;
            u[1] = -s * a + c * b;
        }
    }
}

/// Gains plus channel map.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    gains: ControllerGains,
    channel_map: ChannelMap,
}

impl Controller {
    pub fn new(gains: ControllerGains, channel_map: ChannelMap) -> Self {
        Self { gains, channel_map }
    }

    pub fn gains(&self) -> &ControllerGains {
        &self.gains
    }

    pub fn channel_map(&self) -> ChannelMap {
        self.channel_map
    }

    /// Writes the plant input for state `x` and funnel `bounds` into `u`.
    ///
    /// Returns the normalized error of the first violated dimension, if any; the
    /// input is still computed from the clamped error.
    #[inline]
    pub fn evaluate(&self, x: &[f64], bounds: &[(f64, f64)], u: &mut [f64]) -> Option<(usize, f64)> {
        let mut first = None;
        for (k, ((&xk, &(lo, hi)), &kappa)) in x.iter().zip(bounds).zip(self.gains.as_slice()).enumerate() {
            let f = funnel_state(xk, lo, hi, kappa);
            if f.violated && first.is_none() {
                first = Some((k, raw_error(xk, lo, hi)));
            }
            u[k] = f.u;
        }
        self.channel_map.apply(x, u);
        first
    }
}

/// Input vector for `state` against the tube at time `t`.
///
/// Past the horizon the terminal cross-section is used.
pub fn control_vector(
    state: &[f64],
    tube: &Tube,
    t: f64,
    gains: &ControllerGains,
    channel_map: ChannelMap,
) -> Result<Vec<f64>, ControlError> {
    let n = tube.ndim();
    for got in [state.len(), gains.len()] {
        if got != n {
            return Err(ControlError::DimensionMismatch { expected: n, got });
        }
    }
    let mut bounds = Vec::with_capacity(n);
    tube.bounds_clamped(t, &mut bounds);
    if let Some(&(lower, upper)) = bounds.iter().find(|(lo, hi)| !(lo < hi)) {
        return Err(ControlError::Degenerate { lower, upper });
    }
    let mut u = vec![0.0; n];
    let ctl = Controller::new(gains.clone(), channel_map);
    match ctl.evaluate(state, &bounds, &mut u) {
        Some((dim, error)) => Err(ControlError::FunnelViolation { dim, t, error }),
        None => Ok(u),
    }
}
