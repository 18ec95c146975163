//! Scalar boundary curves built from a small set of C¹ primitives.
//!
//! A [`Curve`] is the sum of its [`Term`]s, each evaluated in absolute time.
//! Terms stay constant outside their active window, so adding a term to a
//! segment never disturbs the curve away from that window.

use serde::{Deserialize, Serialize};

/// Cubic smoothstep `3τ² − 2τ³` on `[0, 1]`, clamped outside.
#[inline]
pub fn smoothstep(tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    tau * tau * (3.0 - 2.0 * tau)
}

#[inline]
pub fn smoothstep_slope(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    6.0 * tau * (1.0 - tau)
}

/// Ramp weight rising from 0 at `t0` to 1 at `t1`, with its time derivative.
#[inline]
fn ramp(t: f64, t0: f64, t1: f64) -> (f64, f64) {
    if t <= t0 {
        (0.0, 0.0)
    } else if t >= t1 {
        (1.0, 0.0)
    } else {
        let span = t1 - t0;
        let tau = (t - t0) / span;
        (smoothstep(tau), smoothstep_slope(tau) / span)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Constant {
        value: f64,
    },
    /// `slope · (t - t0)`; unbounded, mostly useful for hand-built tubes.
    Linear { t0: f64, slope: f64 },
    /// `from` before `t0`, `to` after `t1`, smoothstep in between.
    Smoothstep { t0: f64, t1: f64, from: f64, to: f64 },
    /// Zero outside `[rise_start, fall_end]`, `amplitude` on `[rise_end, fall_start]`.
    Bump {
        rise_start: f64,
        rise_end: f64,
        fall_start: f64,
        fall_end: f64,
        amplitude: f64,
    },
    /// Smoothstep cross-fade from the curve `from` to the constant `to` over `[t0, t1]`.
    Blend {
        t0: f64,
        t1: f64,
        from: Vec<Term>,
        to: f64,
    },
}

impl Term {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { value } => value,
            Term::Linear { t0, slope } => slope * (t - t0),
            Term::Smoothstep { t0, t1, from, to } => {
                let w = ramp(t, t0, t1).0;
                (1.0 - w) * from + w * to
            }
            Term::Bump {
                rise_start,
                rise_end,
                fall_start,
                fall_end,
                amplitude,
            } => {
                let up = ramp(t, rise_start, rise_end).0;
                let down = ramp(t, fall_start, fall_end).0;
                amplitude * (up - down)
            }
            Term::Blend {
                t0,
                t1,
                ref from,
                to,
            } => {
                let (w, _) = ramp(t, t0, t1);
                if w == 1.0 {
                    to
                } else {
                    (1.0 - w) * sum_value(from, t) + w * to
                }
            }
        }
    }

    pub fn slope(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { .. } => 0.0,
            Term::Linear { slope, .. } => slope,
            Term::Smoothstep { t0, t1, from, to } => (to - from) * ramp(t, t0, t1).1,
            Term::Bump {
                rise_start,
                rise_end,
                fall_start,
                fall_end,
                amplitude,
            } => {
                let up = ramp(t, rise_start, rise_end).1;
                let down = ramp(t, fall_start, fall_end).1;
                amplitude * (up - down)
            }
            Term::Blend {
                t0,
                t1,
                ref from,
                to,
            } => {
                let (w, dw) = ramp(t, t0, t1);
                if w == 1.0 {
                    0.0
                } else {
                    let f = sum_value(from, t);
                    (1.0 - w) * sum_slope(from, t) + dw * (to - f)
                }
            }
        }
    }
}

fn sum_value(terms: &[Term], t: f64) -> f64 {
    terms.iter().map(|term| term.value(t)).sum()
}

fn sum_slope(terms: &[Term], t: f64) -> f64 {
    terms.iter().map(|term| term.slope(t)).sum()
}

/// Sum of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve {
    terms: Vec<Term>,
}

impl Curve {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(vec![Term::Constant { value }])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn push(&mut self, term: Term) {
        self.terms.push(term);
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        sum_value(&self.terms, t)
    }

    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        sum_slope(&self.terms, t)
    }

    /// Cross-fade of this curve into the constant `to` over `[t0, t1]`.
    pub fn blend_into(&self, t0: f64, t1: f64, to: f64) -> Curve {
        Curve::new(vec![Term::Blend {
            t0,
            t1,
            from: self.terms.clone(),
            to,
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(c: &Curve, t: f64) -> f64 {
        let h = 1e-6;
        (c.value(t + h) - c.value(t - h)) / (2.0 * h)
    }

    #[test]
    fn smoothstep_midpoint_and_ends() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(-3.0), 0.0);
        assert_eq!(smoothstep(4.0), 1.0);
    }

    #[test]
    fn smoothstep_term_interpolates() {
        let c = Curve::new(vec![Term::Smoothstep {
            t0: 0.0,
            t1: 10.0,
            from: 0.0,
            to: 9.0,
        }]);
        assert_eq!(c.value(5.0), 4.5);
        assert_eq!(c.value(0.0), 0.0);
        assert_eq!(c.value(10.0), 9.0);
        assert_eq!(c.slope(0.0), 0.0);
        assert_eq!(c.slope(10.0), 0.0);
    }

    #[test]
    fn bump_shape() {
        let c = Curve::new(vec![
            Term::Constant { value: 1.0 },
            Term::Bump {
                rise_start: 1.0,
                rise_end: 2.0,
                fall_start: 4.0,
                fall_end: 5.0,
                amplitude: -2.0,
            },
        ]);
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(3.0), -1.0);
        assert_eq!(c.value(6.0), 1.0);
        assert_eq!(c.value(1.5), 0.0);
    }

    #[test]
    fn analytic_slopes_match_finite_differences() {
        let base = vec![
            Term::Smoothstep {
                t0: 0.0,
                t1: 10.0,
                from: 1.0,
                to: 4.0,
            },
            Term::Bump {
                rise_start: 2.0,
                rise_end: 3.0,
                fall_start: 5.0,
                fall_end: 7.0,
                amplitude: 0.7,
            },
        ];
        let c = Curve::new(base.clone());
        let b = c.blend_into(4.0, 6.0, 2.5);
        for k in 1..100 {
            let t = k as f64 * 0.1 + 0.0123;
            assert!((fd(&c, t) - c.slope(t)).abs() < 1e-6, "t={t}");
            assert!((fd(&b, t) - b.slope(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn blend_endpoints() {
        let c = Curve::new(vec![Term::Smoothstep {
            t0: 0.0,
            t1: 10.0,
            from: 0.0,
            to: 10.0,
        }]);
        let b = c.blend_into(2.0, 4.0, 7.0);
        assert_eq!(b.value(2.0), c.value(2.0));
        assert_eq!(b.value(4.0), 7.0);
        assert_eq!(b.slope(4.0), 0.0);
        assert!((b.slope(2.0) - c.slope(2.0)).abs() < 1e-12);
    }
}
