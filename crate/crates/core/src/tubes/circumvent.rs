//! Obstacle circumvention.
//!
//! For every time window in which the tube cross-section meets an obstacle, one
//! detour dimension is picked and both boundaries of that dimension are shifted
//! by a smoothstep bump: full shift over the blocking window, ramps over the
//! padding on either side. The dimension/side with the smallest shift that keeps
//! the tube inside the arena wins. When a shift runs into another obstacle, that
//! obstacle joins the detour: the hold window widens to cover it and the shift
//! clears both. Rounds repeat until no window remains.

use serde::{Deserialize, Serialize};

use super::curve::Term;
use super::{Tube, TubeError};
use crate::geometry::{GeometryError, HyperRect};
use crate::{scan, AgentId};

const MAX_ROUNDS: usize = 16;
/// Ramp length as a fraction of the blocking window.
const PAD_FRACTION: f64 = 0.1;
/// Lower bound on ramp length as a fraction of the tube duration.
const MIN_RAMP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub name: String,
    pub rect: HyperRect,
}

impl Obstacle {
    pub fn new(name: impl Into<String>, rect: HyperRect) -> Self {
        Self {
            name: name.into(),
            rect,
        }
    }
}

/// Static obstacles seen by one agent. Obstacles may overlap one another.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObstacleSet {
    pub agent: AgentId,
    pub obstacles: Vec<Obstacle>,
}

impl ObstacleSet {
    pub fn new(agent: AgentId, obstacles: Vec<Obstacle>) -> Self {
        Self { agent, obstacles }
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Obstacle> {
        self.obstacles.iter()
    }
}

/// Margin kept between a detoured boundary and the obstacle it avoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clearance {
    /// Fraction of the arena span of each dimension.
    ArenaFraction { fraction: f64 },
    /// Absolute margin per dimension.
    PerDim { margins: Vec<f64> },
}

impl Default for Clearance {
    fn default() -> Self {
        Clearance::ArenaFraction { fraction: 0.02 }
    }
}

impl Clearance {
    pub fn resolve(&self, arena: &HyperRect) -> Result<Vec<f64>, TubeError> {
        let margins = match self {
            Clearance::ArenaFraction { fraction } => {
                arena.dims().iter().map(|i| fraction * i.width()).collect()
            }
            Clearance::PerDim { margins } => {
                if margins.len() != arena.ndim() {
                    return Err(GeometryError::DimensionMismatch {
                        left: margins.len(),
                        right: arena.ndim(),
                    }
                    .into());
                }
                margins.clone()
            }
        };
        if margins.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(TubeError::InvalidParameter("clearance must be finite and non-negative"));
        }
        Ok(margins)
    }
}

#[inline]
fn section_hits(tube: &Tube, t: f64, rect: &HyperRect) -> bool {
    tube.profiles().iter().zip(rect.dims()).all(|(p, o)| {
        let (lo, hi) = p.bounds(t);
        lo <= o.hi() && o.lo() <= hi
    })
}

pub(crate) fn blocking_windows(tube: &Tube, rect: &HyperRect, dt: f64) -> Vec<(f64, f64)> {
    scan::windows(tube.start_time(), tube.horizon(), dt, |t| section_hits(tube, t, rect))
}

struct Detour {
    dim: usize,
    bump: Term,
}

/// Bump of fixed dimension and side that clears a group of obstacles over a window.
struct Attempt {
    bump: Term,
    /// Obstacles the shifted tube still meets, with the first and last hit times.
    hits: Vec<(usize, f64, f64)>,
}

/// Smallest shift of dimension `k` clearing `group` over `window`, or `None` when
/// it would leave the arena or the window cannot be padded.
#[allow(clippy::too_many_arguments)]
fn attempt(
    tube: &Tube,
    group: &[usize],
    (w0, w1): (f64, f64),
    k: usize,
    downward: bool,
    arena: &HyperRect,
    margins: &[f64],
    all: &ObstacleSet,
    dt: f64,
) -> Option<Attempt> {
    let (ta, tb) = (tube.start_time(), tube.horizon());
    let pad = (PAD_FRACTION * (w1 - w0)).max(MIN_RAMP_FRACTION * (tb - ta));
    let rise_start = (w0 - pad).max(ta);
    let fall_end = (w1 + pad).min(tb);
    if rise_start >= w0 || fall_end <= w1 {
        return None;
    }
    let samples: Vec<f64> = scan::grid(rise_start, fall_end, dt).chain([w0, w1]).collect();
    let (mut hold_lo, mut hold_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut span_lo, mut span_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &t in &samples {
        let (lo, hi) = tube.profile(k).bounds(t);
        span_lo = span_lo.min(lo);
        span_hi = span_hi.max(hi);
        if (w0..=w1).contains(&t) {
            hold_lo = hold_lo.min(lo);
            hold_hi = hold_hi.max(hi);
        }
    }
    let a = arena.dim(k);
    let eps = 1e-9 * a.width();
    let amplitude = if downward {
        let edge = group.iter().map(|&g| all.obstacles[g].rect.dim(k).lo()).fold(f64::INFINITY, f64::min);
        let s = (edge - margins[k]) - hold_hi - eps;
        (s < 0.0 && span_lo + s >= a.lo()).then_some(s)?
    } else {
        let edge = group.iter().map(|&g| all.obstacles[g].rect.dim(k).hi()).fold(f64::NEG_INFINITY, f64::max);
        let s = (edge + margins[k]) - hold_lo + eps;
        (s > 0.0 && span_hi + s <= a.hi()).then_some(s)?
    };
    let bump = Term::Bump {
        rise_start,
        rise_end: w0,
        fall_start: w1,
        fall_end,
        amplitude,
    };
    let mut hits: Vec<(usize, f64, f64)> = Vec::new();
    for &t in &samples {
        let shift = bump.value(t);
        for (i, o) in all.iter().enumerate() {
            let meets = tube.profiles().iter().enumerate().zip(o.rect.dims()).all(|((j, p), oi)| {
                let (mut lo, mut hi) = p.bounds(t);
                if j == k {
                    lo += shift;
                    hi += shift;
                }
                lo <= oi.hi() && oi.lo() <= hi
            });
            if meets {
                match hits.iter_mut().find(|h| h.0 == i) {
                    Some(h) => {
                        h.1 = h.1.min(t);
                        h.2 = h.2.max(t);
                    }
                    None => hits.push((i, t, t)),
                }
            }
        }
    }
    Some(Attempt { bump, hits })
}

/// Widens `(t1, t2)` while the tube, ignoring dimension `k`, still meets `rect`.
fn cross_extent(tube: &Tube, rect: &HyperRect, k: usize, (t1, t2): (f64, f64), dt: f64) -> (f64, f64) {
    let meets = |t: f64| {
        tube.profiles().iter().zip(rect.dims()).enumerate().all(|(j, (p, o))| {
            let (lo, hi) = p.bounds(t);
            j == k || (lo <= o.hi() && o.lo() <= hi)
        })
    };
    let (ta, tb) = (tube.start_time(), tube.horizon());
    let mut a = t1;
    while a > ta && meets((a - dt).max(ta)) {
        a = (a - dt).max(ta);
    }
    let mut b = t2;
    while b < tb && meets((b + dt).min(tb)) {
        b = (b + dt).min(tb);
    }
    (a, b)
}

fn bump_amplitude(b: &Term) -> f64 {
    match b {
        Term::Bump { amplitude, .. } => *amplitude,
        _ => unreachable!("detours are bumps"),
    }
}

fn plan_detour(
    tube: &Tube,
    obstacle: usize,
    window: (f64, f64),
    arena: &HyperRect,
    margins: &[f64],
    all: &ObstacleSet,
    dt: f64,
) -> Result<Detour, TubeError> {
    let blocked = || TubeError::Blocked {
        obstacle: all.obstacles[obstacle].name.clone(),
        t_lo: window.0,
        t_hi: window.1,
    };
    let mut fallback: Option<Detour> = None;
    let mut best: Option<Detour> = None;
    for k in 0..tube.ndim() {
        for downward in [true, false] {
            // Obstacles the shifted tube runs into join the group and widen the
            // hold window until the detour is clean or no longer fits.
            let mut group = vec![obstacle];
            let mut w = window;
            let mut first = true;
            for _ in 0..=2 * all.len() {
                let Some(at) = attempt(tube, &group, w, k, downward, arena, margins, all, dt) else {
                    break;
                };
                if first {
                    let amp = bump_amplitude(&at.bump).abs();
                    if fallback.as_ref().is_none_or(|f| amp < bump_amplitude(&f.bump).abs()) {
                        fallback = Some(Detour { dim: k, bump: at.bump.clone() });
                    }
                    first = false;
                }
                let fresh: Vec<_> = at.hits.iter().filter(|h| !group.contains(&h.0)).collect();
                if at.hits.is_empty() {
                    let amp = bump_amplitude(&at.bump).abs();
                    if best.as_ref().is_none_or(|b| amp < bump_amplitude(&b.bump).abs()) {
                        best = Some(Detour { dim: k, bump: at.bump });
                    }
                    break;
                }
                if fresh.is_empty() && at.hits.iter().all(|h| h.1 >= w.0 && h.2 <= w.1) {
                    break;
                }
                for h in &at.hits {
                    if !group.contains(&h.0) {
                        group.push(h.0);
                    }
                    let (a, b) = cross_extent(tube, &all.obstacles[h.0].rect, k, (h.1, h.2), dt);
                    w = (w.0.min(a), w.1.max(b));
                }
            }
        }
    }
    best.or(fallback).ok_or_else(blocked)
}

fn apply(tube: &mut Tube, detour: Detour) {
    let (from, to) = match detour.bump {
        Term::Bump {
            rise_start,
            fall_end,
            ..
        } => (rise_start, fall_end),
        _ => unreachable!("detours are bumps"),
    };
    for seg in tube.profile_mut(detour.dim).segments_mut() {
        if seg.t_end >= from && seg.t_start <= to {
            seg.lower.push(detour.bump.clone());
            seg.upper.push(detour.bump.clone());
        }
    }
}

/// Bends `tube` around every obstacle in `obstacles`.
///
/// The returned tube is disjoint from each obstacle at every grid time of spacing
/// `dt_check` (refined by bisection) and keeps the start/end boxes and arena
/// containment of the input. A tube that never meets an obstacle is returned unchanged.
pub fn circumvent_obstacles(
    tube: &Tube,
    obstacles: &ObstacleSet,
    arena: &HyperRect,
    clearance: &Clearance,
    dt_check: f64,
) -> Result<Tube, TubeError> {
    if !(dt_check > 0.0 && dt_check.is_finite()) {
        return Err(TubeError::InvalidParameter("dt_check must be positive"));
    }
    if arena.ndim() != tube.ndim() {
        return Err(GeometryError::DimensionMismatch {
            left: arena.ndim(),
            right: tube.ndim(),
        }
        .into());
    }
    for o in obstacles.iter() {
        if o.rect.ndim() != tube.ndim() {
            return Err(GeometryError::DimensionMismatch {
                left: o.rect.ndim(),
                right: tube.ndim(),
            }
            .into());
        }
    }
    let margins = clearance.resolve(arena)?;

    let mut out = tube.clone();
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for (i, obstacle) in obstacles.iter().enumerate() {
            for window in blocking_windows(&out, &obstacle.rect, dt_check) {
                let detour = plan_detour(&out, i, window, arena, &margins, obstacles, dt_check)?;
                apply(&mut out, detour);
                changed = true;
            }
        }
        if !changed {
            return Ok(out);
        }
    }
    for obstacle in obstacles.iter() {
        if let Some(&(t_lo, t_hi)) = blocking_windows(&out, &obstacle.rect, dt_check).first() {
            return Err(TubeError::Blocked {
                obstacle: obstacle.name.clone(),
                t_lo,
                t_hi,
            });
        }
    }
    Ok(out)
}
