use serde::{Deserialize, Serialize};

use super::{ObstacleSet, Tube, TubeError};
use crate::geometry::{GeometryError, HyperRect};
use crate::scan;

/// Outcome of one tube property check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub ok: bool,
    /// First violating time, refined by bisection.
    pub first_violation: Option<f64>,
    /// Name of the offending obstacle, when applicable.
    pub witness: Option<String>,
}

impl Check {
    fn pass() -> Self {
        Self {
            ok: true,
            first_violation: None,
            witness: None,
        }
    }

    fn fail(t: f64, witness: Option<String>) -> Self {
        Self {
            ok: false,
            first_violation: Some(t),
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// Cross-section is a non-degenerate box inside the arena at all times.
    pub arena: Check,
    /// Cross-section at the tube start lies in the initial set.
    pub start: Check,
    /// Cross-section at the horizon lies in the target set.
    pub end: Check,
    /// Cross-section never meets an obstacle.
    pub obstacles: Check,
}

impl ValidityReport {
    pub fn all_ok(&self) -> bool {
        self.arena.ok && self.start.ok && self.end.ok && self.obstacles.ok
    }
}

fn in_arena(tube: &Tube, arena: &HyperRect, t: f64) -> bool {
    tube.profiles().iter().zip(arena.dims()).all(|(p, a)| {
        let (lo, hi) = p.bounds(t);
        a.lo() <= lo && lo < hi && hi <= a.hi()
    })
}

fn hits(tube: &Tube, rect: &HyperRect, t: f64) -> bool {
    tube.profiles().iter().zip(rect.dims()).all(|(p, o)| {
        let (lo, hi) = p.bounds(t);
        lo <= o.hi() && o.lo() <= hi
    })
}

/// Checks the four tube properties on a grid of spacing `dt_check` over the
/// tube's horizon, refining the first violation of each by bisection.
pub fn verify_tube(
    tube: &Tube,
    start: &HyperRect,
    target: &HyperRect,
    arena: &HyperRect,
    obstacles: &ObstacleSet,
    dt_check: f64,
) -> Result<ValidityReport, TubeError> {
    if !(dt_check > 0.0 && dt_check.is_finite()) {
        return Err(TubeError::InvalidParameter("dt_check must be positive"));
    }
    for r in [start, target, arena]
        .into_iter()
        .chain(obstacles.iter().map(|o| &o.rect))
    {
        if r.ndim() != tube.ndim() {
            return Err(GeometryError::DimensionMismatch {
                left: r.ndim(),
                right: tube.ndim(),
            }
            .into());
        }
    }
    let (t0, t1) = (tube.start_time(), tube.horizon());

    let arena_check = match scan::first_hit(t0, t1, dt_check, |t| !in_arena(tube, arena, t)) {
        Some(t) => Check::fail(t, None),
        None => Check::pass(),
    };
    let boxed = |t: f64, set: &HyperRect| match tube.cross_section(t) {
        Ok(cs) if set.contains_unchecked(&cs) => Check::pass(),
        _ => Check::fail(t, None),
    };
    let start_check = boxed(t0, start);
    let end_check = boxed(t1, target);

    let obstacle_check = obstacles
        .iter()
        .filter_map(|o| {
            scan::first_hit(t0, t1, dt_check, |t| hits(tube, &o.rect, t)).map(|t| (t, &o.name))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map_or_else(Check::pass, |(t, name)| Check::fail(t, Some(name.clone())));

    Ok(ValidityReport {
        arena: arena_check,
        start: start_check,
        end: end_check,
        obstacles: obstacle_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tubes::{build_reachability_tube, Obstacle, WidthPolicy};
    use crate::AgentId;

    fn rect(b: &[[f64; 2]]) -> HyperRect {
        HyperRect::from_bounds(b).unwrap()
    }

    #[test]
    fn valid_tube_passes() {
        let arena = rect(&[[0.0, 10.0], [0.0, 10.0]]);
        let s = rect(&[[0.0, 1.0], [0.0, 1.0]]);
        let t = rect(&[[9.0, 10.0], [9.0, 10.0]]);
        let tube = build_reachability_tube(AgentId(0), &s, &t, 5.0, &arena, WidthPolicy::Full).unwrap();
        let r = verify_tube(&tube, &s, &t, &arena, &ObstacleSet::default(), 5e-4).unwrap();
        assert!(r.all_ok());
    }

    #[test]
    fn wrong_start_detected_at_zero() {
        let arena = rect(&[[0.0, 10.0]]);
        let tube = build_reachability_tube(
            AgentId(0),
            &rect(&[[0.0, 2.0]]),
            &rect(&[[9.0, 10.0]]),
            5.0,
            &arena,
            WidthPolicy::Full,
        )
        .unwrap();
        let r = verify_tube(
            &tube,
            &rect(&[[0.0, 1.0]]),
            &rect(&[[9.0, 10.0]]),
            &arena,
            &ObstacleSet::default(),
            0.01,
        )
        .unwrap();
        assert!(!r.start.ok);
        assert_eq!(r.start.first_violation, Some(0.0));
        assert!(r.end.ok && r.arena.ok && r.obstacles.ok);
    }

    #[test]
    fn straight_tube_through_obstacle_has_witness() {
        // Straight tube from below O2 to above it; centre line x = 7.75.
        let arena = rect(&[[0.0, 10.0], [0.0, 10.0]]);
        let s = rect(&[[7.5, 8.0], [5.0, 5.5]]);
        let t = rect(&[[7.5, 8.0], [9.5, 10.0]]);
        let tube = build_reachability_tube(AgentId(3), &s, &t, 200.0, &arena, WidthPolicy::Full).unwrap();
        let obs = ObstacleSet::new(
            AgentId(3),
            vec![Obstacle::new("O2", rect(&[[7.5, 8.0], [7.5, 8.5]]))],
        );
        let r = verify_tube(&tube, &s, &t, &arena, &obs, 0.02).unwrap();
        assert!(!r.obstacles.ok);
        assert_eq!(r.obstacles.witness.as_deref(), Some("O2"));
        let tw = r.obstacles.first_violation.unwrap();
        // Upper boundary 5.5 + 4.5 s(t/200) reaches 7.5 where s = 4/9.
        let cs = tube.cross_section(tw).unwrap();
        assert!((cs.dim(1).hi() - 7.5).abs() < 1e-6);
        assert!(cs.intersects(&obs.obstacles[0].rect).unwrap());
        assert!(r.arena.ok && r.end.ok && r.start.ok);
    }
}
