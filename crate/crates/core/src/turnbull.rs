//! Maximal intersections (Turnbull innermost intervals) of the brackets.
//!
//! The nonparametric estimate of the baseline cumulative hazard can only
//! place mass on these intervals, so their right endpoints become the
//! support of every fitted [`StepCumHazard`](crate::hazard::StepCumHazard).

use crate::data::IntervalDataset;
use crate::error::{Error, Result};

/// One maximal intersection `(left, right]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalIntersection {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    // at a tied time a right endpoint closes before a left endpoint opens
    Right,
    Left,
}

/// Innermost intervals `(l, u]` with `l` a left endpoint, `u` a finite right
/// endpoint and no endpoint strictly between them, sorted by position.
pub fn maximal_intersections(data: &IntervalDataset) -> Result<Vec<MaximalIntersection>> {
    let mut ends: Vec<(f64, Side)> = Vec::with_capacity(2 * data.n());
    for o in data.observations() {
        ends.push((o.left, Side::Left));
        if !o.is_right_censored() {
            ends.push((o.right, Side::Right));
        }
    }
    ends.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    for pair in ends.windows(2) {
        if let [(l, Side::Left), (u, Side::Right)] = pair {
            if l < u {
                out.push(MaximalIntersection {
                    left: *l,
                    right: *u,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoFiniteIntervals);
    }
    Ok(out)
}

/// Right endpoints of the maximal intersections, the hazard support.
pub fn support_points(data: &IntervalDataset) -> Result<Vec<f64>> {
    Ok(maximal_intersections(data)?
        .into_iter()
        .map(|mi| mi.right)
        .collect())
}
