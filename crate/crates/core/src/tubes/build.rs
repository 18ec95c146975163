use serde::{Deserialize, Serialize};

use super::curve::{Curve, Term};
use super::{BoundaryProfile, Segment, Tube, TubeError};
use crate::geometry::{GeometryError, HyperRect, Interval};
use crate::AgentId;

/// How wide the tube is at its two ends.
///
/// In between, each boundary is a cubic smoothstep from its start value to its
/// end value, so the width interpolates between the two end widths.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidthPolicy {
    /// Tube starts as the full initial set and ends as the full target set.
    #[default]
    Full,
    /// Both end boxes are shrunk by `fraction` of their width on each side.
    Inset { fraction: f64 },
}

impl WidthPolicy {
    /// End box this policy assigns to the set `r`.
    pub fn apply(&self, r: &HyperRect) -> Result<HyperRect, TubeError> {
        let dims = r
            .dims()
            .iter()
            .map(|i| self.end_interval(i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HyperRect::new(dims)?)
    }

    fn end_interval(&self, i: &Interval) -> Result<Interval, TubeError> {
        match *self {
            WidthPolicy::Full => Ok(*i),
            WidthPolicy::Inset { fraction } => {
                if !(0.0..0.5).contains(&fraction) {
                    return Err(TubeError::InvalidParameter("inset fraction must lie in [0, 0.5)"));
                }
                let m = fraction * i.width();
                Ok(Interval::new(i.lo() + m, i.hi() - m)?)
            }
        }
    }
}

/// Reachability tube from `start` at `t = 0` to `target` at `t = t_p`.
pub fn build_reachability_tube(
    agent: AgentId,
    start: &HyperRect,
    target: &HyperRect,
    t_p: f64,
    arena: &HyperRect,
    policy: WidthPolicy,
) -> Result<Tube, TubeError> {
    build_transit_tube(agent, start, target, 0.0, t_p, arena, policy)
}

/// Reachability tube over an arbitrary window `[t0, t1]` of absolute time.
pub fn build_transit_tube(
    agent: AgentId,
    start: &HyperRect,
    target: &HyperRect,
    t0: f64,
    t1: f64,
    arena: &HyperRect,
    policy: WidthPolicy,
) -> Result<Tube, TubeError> {
    if !(t1 > t0 && t0 >= 0.0 && t1.is_finite()) {
        return Err(TubeError::InvalidHorizon { start: t0, end: t1 });
    }
    for r in [start, target] {
        if r.ndim() != arena.ndim() {
            return Err(GeometryError::DimensionMismatch {
                left: r.ndim(),
                right: arena.ndim(),
            }
            .into());
        }
    }
    if !arena.contains_unchecked(start) {
        return Err(TubeError::Infeasible(format!(
            "initial set of agent {agent} lies outside the arena"
        )));
    }
    if !arena.contains_unchecked(target) {
        return Err(TubeError::Infeasible(format!(
            "target set of agent {agent} lies outside the arena"
        )));
    }

    let dims = start
        .dims()
        .iter()
        .zip(target.dims())
        .map(|(s, g)| {
            let s = policy.end_interval(s)?;
            let g = policy.end_interval(g)?;
            let boundary = |from: f64, to: f64| {
                if from == to {
                    Curve::constant(from)
                } else {
                    Curve::new(vec![Term::Smoothstep { t0, t1, from, to }])
                }
            };
            Ok(BoundaryProfile::new(vec![Segment::new(
                t0,
                t1,
                boundary(s.lo(), g.lo()),
                boundary(s.hi(), g.hi()),
            )]))
        })
        .collect::<Result<Vec<_>, TubeError>>()?;
    Tube::new(agent, t0, t1, dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(b: &[[f64; 2]]) -> HyperRect {
        HyperRect::from_bounds(b).unwrap()
    }

    #[test]
    fn identical_sets_give_constant_tube() {
        let s = rect(&[[2.0, 3.0]]);
        let arena = rect(&[[0.0, 10.0]]);
        let tube = build_reachability_tube(AgentId(0), &s, &s, 7.0, &arena, WidthPolicy::Full).unwrap();
        for t in [0.0, 1.0, 3.5, 7.0] {
            assert_eq!(tube.cross_section(t).unwrap(), s);
        }
    }

    #[test]
    fn smoothstep_midpoint() {
        let arena = rect(&[[0.0, 10.0]]);
        let tube = build_reachability_tube(
            AgentId(0),
            &rect(&[[0.0, 1.0]]),
            &rect(&[[9.0, 10.0]]),
            10.0,
            &arena,
            WidthPolicy::Full,
        )
        .unwrap();
        assert_eq!(tube.cross_section(5.0).unwrap(), rect(&[[4.5, 5.5]]));
    }

    #[test]
    fn case_study_agent_one_endpoints() {
        let arena = rect(&[[0.0, 10.0], [0.0, 10.0]]);
        let s = rect(&[[5.0, 5.5], [9.5, 10.0]]);
        let t = rect(&[[9.5, 10.0], [9.0, 9.5]]);
        let tube = build_reachability_tube(AgentId(1), &s, &t, 200.0, &arena, WidthPolicy::Full).unwrap();
        assert!(s.contains(&tube.cross_section(0.0).unwrap()).unwrap());
        assert!(t.contains(&tube.cross_section(200.0).unwrap()).unwrap());
        for k in 0..=200 {
            assert!(arena.contains(&tube.cross_section(k as f64).unwrap()).unwrap());
        }
    }

    #[test]
    fn inset_policy_shrinks_ends() {
        let arena = rect(&[[0.0, 10.0]]);
        let tube = build_reachability_tube(
            AgentId(0),
            &rect(&[[0.0, 1.0]]),
            &rect(&[[9.0, 10.0]]),
            10.0,
            &arena,
            WidthPolicy::Inset { fraction: 0.1 },
        )
        .unwrap();
        assert_eq!(tube.cross_section(0.0).unwrap(), rect(&[[0.1, 0.9]]));
        assert!(rect(&[[9.0, 10.0]]).contains(&tube.cross_section(10.0).unwrap()).unwrap());
    }

    #[test]
    fn rejects_sets_outside_arena() {
        let arena = rect(&[[0.0, 10.0]]);
        let err = build_reachability_tube(
            AgentId(0),
            &rect(&[[-1.0, 1.0]]),
            &rect(&[[9.0, 10.0]]),
            10.0,
            &arena,
            WidthPolicy::Full,
        );
        assert!(matches!(err, Err(TubeError::Infeasible(_))));
        let err = build_reachability_tube(
            AgentId(0),
            &rect(&[[0.0, 1.0]]),
            &rect(&[[9.0, 10.0]]),
            0.0,
            &arena,
            WidthPolicy::Full,
        );
        assert!(matches!(err, Err(TubeError::InvalidHorizon { .. })));
    }
}
