//! Uniform time-grid scans with bisection refinement of predicate transitions.

/// Bisection tolerance for locating transition instants, in seconds.
pub const BISECTION_TOL: f64 = 1e-6;

/// Uniform grid over `[t0, t1]` whose spacing does not exceed `dt`; both ends included.
pub fn grid(t0: f64, t1: f64, dt: f64) -> impl Iterator<Item = f64> + Clone {
    let span = (t1 - t0).max(0.0);
    let n = if span == 0.0 {
        0
    } else {
        (span / dt).ceil().max(1.0) as usize
    };
    (0..=n).map(move |k| {
        if k == n {
            t1
        } else {
            t0 + span * (k as f64 / n as f64)
        }
    })
}

/// Refines a transition between `off` (predicate false) and `on` (predicate true),
/// returning the time on the `on` side within [`BISECTION_TOL`].
pub fn bisect<F: Fn(f64) -> bool>(mut off: f64, mut on: f64, pred: &F) -> f64 {
    while (on - off).abs() > BISECTION_TOL {
        let mid = 0.5 * (off + on);
        if pred(mid) {
            on = mid;
        } else {
            off = mid;
        }
    }
    on
}

/// Maximal time windows in `[t0, t1]` where `pred` holds, located on the grid and
/// refined by bisection at each end.
pub fn windows<F: Fn(f64) -> bool>(t0: f64, t1: f64, dt: f64, pred: F) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    let mut open: Option<f64> = None;
    let mut last_on = t0;
    for t in grid(t0, t1, dt) {
        let hit = pred(t);
        match (prev, hit) {
            (None, true) => open = Some(t),
            (Some((tp, false)), true) => open = Some(bisect(tp, t, &pred)),
            (Some((tp, true)), false) => {
                let end = bisect(t, tp, &pred);
                out.push((open.take().unwrap_or(tp), end));
            }
            _ => {}
        }
        if hit {
            last_on = t;
        }
        prev = Some((t, hit));
    }
    if let Some(start) = open {
        out.push((start, last_on));
    }
    out
}

/// First time in `[t0, t1]` where `pred` holds, refined by bisection.
pub fn first_hit<F: Fn(f64) -> bool>(t0: f64, t1: f64, dt: f64, pred: F) -> Option<f64> {
    let mut prev: Option<f64> = None;
    for t in grid(t0, t1, dt) {
        if pred(t) {
            return Some(match prev {
                None => t,
                Some(tp) => bisect(tp, t, &pred),
            });
        }
        prev = Some(t);
    }
    None
}
