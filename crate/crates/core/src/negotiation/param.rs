use serde::{Deserialize, Serialize};

use super::{CollisionInterval, NegotiationError, NegotiationParams};
use crate::geometry::HyperRect;
use crate::tubes::{
    build_transit_tube, circumvent_obstacles, BoundaryProfile, Clearance, ObstacleSet, Segment,
    Tube, WidthPolicy,
};
use crate::AgentId;

/// What an agent needs to rebuild the tail of its tube after a freeze.
#[derive(Debug, Clone)]
pub struct ReplanContext {
    pub target: HyperRect,
    pub arena: HyperRect,
    pub obstacles: ObstacleSet,
    pub clearance: Clearance,
    pub width_policy: WidthPolicy,
}

/// One applied freeze-and-replan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezeRecord {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Time at which the frozen cross-section was taken (`t_lo - delta`, clamped at 0).
    pub freeze_at: f64,
    pub frozen: HyperRect,
    /// Replanned tube on `[t_hi, horizon]` from `frozen` to the target.
    pub tail: Tube,
}

/// Tube after zero or more freezes, with the history that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterizedTube {
    base: Tube,
    freezes: Vec<FreezeRecord>,
    current: Tube,
}

impl ParameterizedTube {
    pub fn new(base: Tube) -> Self {
        Self {
            current: base.clone(),
            base,
            freezes: Vec::new(),
        }
    }

    /// Effective tube, used for every evaluation.
    pub fn tube(&self) -> &Tube {
        &self.current
    }

    pub fn base(&self) -> &Tube {
        &self.base
    }

    pub fn freezes(&self) -> &[FreezeRecord] {
        &self.freezes
    }

    pub fn agent(&self) -> AgentId {
        self.current.agent()
    }

    pub fn horizon(&self) -> f64 {
        self.current.horizon()
    }

    pub fn is_parameterized(&self) -> bool {
        !self.freezes.is_empty()
    }

    /// `R3` for an untouched tube, `R̂3` once it has been parameterized.
    pub fn label(&self) -> String {
        if self.is_parameterized() {
            format!("R\u{302}{}", self.agent())
        } else {
            format!("R{}", self.agent())
        }
    }

    /// Checks the stored tubes after deserialization.
    pub fn validate(&self) -> Result<(), crate::tubes::TubeError> {
        self.base.validate()?;
        self.current.validate()?;
        self.freezes.iter().try_for_each(|f| f.tail.validate())
    }
}

/// Freezes `tube` over `interval` and replans its tail.
///
/// The result equals the input before the blend window `[t_lo - blend, t_lo)`,
/// cross-fades into the frozen box `R(t_lo - delta)` over that window, holds the
/// frozen box on `[t_lo, t_hi]`, and follows a freshly built, obstacle-circumvented
/// tube from the frozen box to the target on `(t_hi, horizon]`. The tail starts at the
/// frozen box with zero slope, so the exit joint is C¹ without blending.
pub fn parameterize_tube(
    tube: &ParameterizedTube,
    interval: &CollisionInterval,
    ctx: &ReplanContext,
    params: &NegotiationParams,
) -> Result<ParameterizedTube, NegotiationError> {
    let cur = tube.tube();
    let agent = cur.agent();
    let tube_err = |source| NegotiationError::Tube { agent, source };
    let (t_lo, t_hi) = (interval.t_lo, interval.t_hi);
    let (t_start, horizon) = (cur.start_time(), cur.horizon());
    if t_lo <= t_start {
        return Err(NegotiationError::CollisionAtStart { agent });
    }
    if t_hi >= horizon {
        return Err(NegotiationError::CannotReplan {
            agent,
            t_hi,
            horizon,
        });
    }

    let freeze_at = (t_lo - params.delta).max(t_start);
    let frozen = cur.cross_section(freeze_at).map_err(tube_err)?;
    let target = ctx.width_policy.apply(&ctx.target).map_err(tube_err)?;
    let tail = build_transit_tube(
        agent,
        &frozen,
        &target,
        t_hi,
        horizon,
        &ctx.arena,
        WidthPolicy::Full,
    )
    .map_err(tube_err)?;
    let tail = circumvent_obstacles(&tail, &ctx.obstacles, &ctx.arena, &ctx.clearance, params.dt_check)
        .map_err(tube_err)?;

    let blend_start = (t_lo - params.blend).max(t_start);
    let dims = (0..cur.ndim())
        .map(|k| {
            let profile = cur.profile(k);
            let fz = frozen.dim(k);
            let mut segments = Vec::new();
            if params.blend > 0.0 && blend_start < t_lo {
                segments.extend(profile.slice(t_start, blend_start));
                segments.extend(profile.slice(blend_start, t_lo).into_iter().map(|s| {
                    Segment::new(
                        s.t_start,
                        s.t_end,
                        s.lower.blend_into(blend_start, t_lo, fz.lo()),
                        s.upper.blend_into(blend_start, t_lo, fz.hi()),
                    )
                }));
            } else {
                segments.extend(profile.slice(t_start, t_lo));
            }
            segments.push(Segment::frozen(t_lo, t_hi, *fz));
            segments.extend(tail.profile(k).segments().iter().cloned());
            BoundaryProfile::new(segments)
        })
        .collect();
    let current = Tube::new(agent, t_start, horizon, dims).map_err(tube_err)?;

    let mut freezes = tube.freezes.clone();
    freezes.push(FreezeRecord {
        t_lo,
        t_hi,
        freeze_at,
        frozen,
        tail,
    });
    Ok(ParameterizedTube {
        base: tube.base.clone(),
        freezes,
        current,
    })
}
