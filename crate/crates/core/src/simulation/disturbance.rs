use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimulationError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceProcess {
    /// Fresh uniform sample on `[-d_max, d_max]` every step.
    #[default]
    Uniform,
    /// Fresh normal sample with `σ = d_max / 3`, redrawn until inside the bound.
    TruncatedNormal,
    /// One uniform sample drawn at the start and held for the whole run.
    ConstantBias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    /// Componentwise bound, in state units per second.
    pub d_max: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub process: DisturbanceProcess,
}

impl DisturbanceSpec {
    pub fn none(dims: usize) -> Self {
        Self {
            d_max: vec![0.0; dims],
            seed: 0,
            process: DisturbanceProcess::Uniform,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.d_max.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(SimulationError::InvalidParameter(
                "disturbance bounds must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// Sample stream for one agent.
///
/// The generator is seeded from the spec's seed and switched to stream `stream`
/// (normally the agent id), so agents draw independent, schedule-free samples.
#[derive(Debug, Clone)]
pub struct Disturbance {
    d_max: Vec<f64>,
    process: DisturbanceProcess,
    rng: ChaCha8Rng,
    bias: Vec<f64>,
}

impl Disturbance {
    pub fn new(spec: &DisturbanceSpec, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        let bias = match spec.process {
            DisturbanceProcess::ConstantBias => spec
                .d_max
                .iter()
                .map(|&d| if d > 0.0 { rng.random_range(-d..=d) } else { 0.0 })
                .collect(),
            _ => Vec::new(),
        };
        Self {
            d_max: spec.d_max.clone(),
            process: spec.process,
            rng,
            bias,
        }
    }

    pub fn sample(&mut self, out: &mut [f64]) {
        match self.process {
            DisturbanceProcess::Uniform => {
                for (o, &d) in out.iter_mut().zip(&self.d_max) {
                    *o = if d > 0.0 { self.rng.random_range(-d..=d) } else { 0.0 };
                }
            }
            DisturbanceProcess::TruncatedNormal => {
                for (o, &d) in out.iter_mut().zip(&self.d_max) {
                    *o = if d > 0.0 {
                        let n = Normal::new(0.0, d / 3.0).expect("positive sigma");
                        loop {
                            let v = n.sample(&mut self.rng);
                            if v.abs() <= d {
                                break v;
                            }
                        }
                    } else {
                        0.0
                    };
                }
            }
            DisturbanceProcess::ConstantBias => out.copy_from_slice(&self.bias),
        }
    }
}
