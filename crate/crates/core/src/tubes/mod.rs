//! Spatiotemporal tubes: per-dimension lower/upper boundary curves over a time horizon.
//!
//! A [`Tube`] is built from an initial set towards a target set
//! ([`build_reachability_tube`]), bent around static obstacles
//! ([`circumvent_obstacles`]) and checked against the four tube properties
//! ([`verify_tube`]): arena containment, start in the initial set, end in the
//! target set, and obstacle disjointness at all times.

mod build;
mod circumvent;
pub mod curve;
mod verify;

pub use build::{build_reachability_tube, build_transit_tube, WidthPolicy};
pub use circumvent::{circumvent_obstacles, Clearance, Obstacle, ObstacleSet};
pub use verify::{verify_tube, Check, ValidityReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, HyperRect, Interval};
use crate::AgentId;
use curve::Curve;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TubeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("horizon must satisfy 0 <= start < end, got [{start}, {end}]")]
    InvalidHorizon { start: f64, end: f64 },
    #[error("time {t} outside tube horizon [{start}, {end}]")]
    OutsideHorizon { t: f64, start: f64, end: f64 },
    #[error("degenerate tube in dimension {dim} at t = {t}")]
    Degenerate { dim: usize, t: f64 },
    #[error("malformed boundary profile in dimension {dim}: {reason}")]
    MalformedProfile { dim: usize, reason: String },
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("no collision-free corridor around obstacle {obstacle} during [{t_lo:.6}, {t_hi:.6}] s")]
    Blocked {
        obstacle: String,
        t_lo: f64,
        t_hi: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// One time slice of a boundary profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub lower: Curve,
    pub upper: Curve,
}

impl Segment {
    pub fn new(t_start: f64, t_end: f64, lower: Curve, upper: Curve) -> Self {
        Self {
            t_start,
            t_end,
            lower,
            upper,
        }
    }

    /// Segment with both boundaries constant.
    pub fn frozen(t_start: f64, t_end: f64, interval: Interval) -> Self {
        Self::new(
            t_start,
            t_end,
            Curve::constant(interval.lo()),
            Curve::constant(interval.hi()),
        )
    }
}

/// Lower/upper boundaries of one tube dimension as ordered, gap-free segments.
///
/// Segment `i` owns `[t_start, t_end)`; the final segment also owns its end point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryProfile {
    segments: Vec<Segment>,
}

impl BoundaryProfile {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub(crate) fn segments_mut(&mut self) -> &mut [Segment] {
        &mut self.segments
    }

    #[inline]
    pub fn segment_at(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    #[inline]
    pub fn bounds(&self, t: f64) -> (f64, f64) {
        let s = self.segment_at(t);
        (s.lower.value(t), s.upper.value(t))
    }

    #[inline]
    pub fn slopes(&self, t: f64) -> (f64, f64) {
        let s = self.segment_at(t);
        (s.lower.slope(t), s.upper.slope(t))
    }

    /// Segments clipped to `[t0, t1]`, curves untouched.
    pub fn slice(&self, t0: f64, t1: f64) -> Vec<Segment> {
        self.segments
            .iter()
            .filter(|s| s.t_end > t0 && s.t_start < t1)
            .map(|s| {
                let mut c = s.clone();
                c.t_start = c.t_start.max(t0);
                c.t_end = c.t_end.min(t1);
                c
            })
            .collect()
    }

    fn validate(&self, dim: usize, start: f64, end: f64) -> Result<(), TubeError> {
        let bad = |reason: &str| TubeError::MalformedProfile {
            dim,
            reason: reason.to_string(),
        };
        let first = self.segments.first().ok_or_else(|| bad("no segments"))?;
        if first.t_start != start {
            return Err(bad("first segment does not start at the tube start"));
        }
        if self.segments.last().map(|s| s.t_end) != Some(end) {
            return Err(bad("last segment does not end at the horizon"));
        }
        for w in self.segments.windows(2) {
            if w[0].t_end != w[1].t_start {
                return Err(bad("gap or overlap between segments"));
            }
        }
        if self
            .segments
            .iter()
            .any(|s| !(s.t_start <= s.t_end) || !s.t_start.is_finite() || !s.t_end.is_finite())
        {
            return Err(bad("segment with reversed or non-finite time range"));
        }
        Ok(())
    }
}

/// Spatiotemporal tube of one agent, evaluable on `[start_time, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    agent: AgentId,
    t_start: f64,
    horizon: f64,
    dims: Vec<BoundaryProfile>,
}

impl Tube {
    pub fn new(
        agent: AgentId,
        t_start: f64,
        horizon: f64,
        dims: Vec<BoundaryProfile>,
    ) -> Result<Self, TubeError> {
        let tube = Self {
            agent,
            t_start,
            horizon,
            dims,
        };
        tube.validate()?;
        Ok(tube)
    }

    /// Checks the structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<(), TubeError> {
        if !(self.t_start >= 0.0 && self.t_start < self.horizon && self.horizon.is_finite()) {
            return Err(TubeError::InvalidHorizon {
                start: self.t_start,
                end: self.horizon,
            });
        }
        if self.dims.is_empty() {
            return Err(GeometryError::Empty.into());
        }
        for (k, p) in self.dims.iter().enumerate() {
            p.validate(k, self.t_start, self.horizon)?;
        }
        Ok(())
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn start_time(&self) -> f64 {
        self.t_start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn profiles(&self) -> &[BoundaryProfile] {
        &self.dims
    }

    pub fn profile(&self, k: usize) -> &BoundaryProfile {
        &self.dims[k]
    }

    pub(crate) fn profile_mut(&mut self, k: usize) -> &mut BoundaryProfile {
        &mut self.dims[k]
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.t_start <= t && t <= self.horizon
    }

    /// Cross-section `[γ_L(t), γ_U(t)]` in every dimension.
    pub fn cross_section(&self, t: f64) -> Result<HyperRect, TubeError> {
        if !self.contains_time(t) {
            return Err(TubeError::OutsideHorizon {
                t,
                start: self.t_start,
                end: self.horizon,
            });
        }
        let dims = self
            .dims
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let (lo, hi) = p.bounds(t);
                Interval::new(lo, hi).map_err(|_| TubeError::Degenerate { dim: k, t })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HyperRect::new(dims)?)
    }

    /// Raw bounds with `t` clamped into the horizon, so the terminal cross-section
    /// is held after the horizon. No validity checks.
    #[inline]
    pub fn bounds_clamped(&self, t: f64, out: &mut Vec<(f64, f64)>) {
        let t = t.clamp(self.t_start, self.horizon);
        out.clear();
        out.extend(self.dims.iter().map(|p| p.bounds(t)));
    }

    /// Cross-section with `t` clamped into the horizon.
    pub fn cross_section_clamped(&self, t: f64) -> Result<HyperRect, TubeError> {
        self.cross_section(t.clamp(self.t_start, self.horizon))
    }

    /// Analytic boundary slopes `(dγ_L/dt, dγ_U/dt)` per dimension.
    pub fn slopes(&self, t: f64) -> Vec<(f64, f64)> {
        self.dims.iter().map(|p| p.slopes(t)).collect()
    }

    /// Largest boundary slope magnitude seen on a grid of spacing `dt`.
    pub fn peak_slew(&self, dt: f64) -> f64 {
        crate::scan::grid(self.t_start, self.horizon, dt)
            .flat_map(|t| self.slopes(t))
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }

    /// Constant tube at `rect` over `[t_start, horizon]`.
    pub fn constant(
        agent: AgentId,
        rect: &HyperRect,
        t_start: f64,
        horizon: f64,
    ) -> Result<Self, TubeError> {
        let dims = rect
            .dims()
            .iter()
            .map(|i| BoundaryProfile::new(vec![Segment::frozen(t_start, horizon, *i)]))
            .collect();
        Tube::new(agent, t_start, horizon, dims)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tube serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, TubeError> {
        let tube: Tube = serde_json::from_str(s)
            .map_err(|e| TubeError::MalformedProfile {
                dim: 0,
                reason: e.to_string(),
            })?;
        tube.validate()?;
        Ok(tube)
    }
}
