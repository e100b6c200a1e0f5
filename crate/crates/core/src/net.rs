//! Greedy metric nets: small subsets that approximate a ground set to
//! within a chosen resolution.
//!
//! A `delta`-net of a ground set satisfies two properties: every ground
//! point has a net point within `delta` (covering), and distinct net
//! points are more than `delta` apart (packing). Some callers must force
//! specific points into the net (a depot, a previous net); forcing can
//! break packing between forced points, which is tolerated and recorded.

use serde::{Deserialize, Serialize};

use crate::cmp::{approx_gt, approx_le};
use crate::graph::MetricGraph;

/// A net over a ground set, with its resolution and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Net {
    /// Sorted ground set the net was drawn from.
    pub ground: Vec<usize>,
    /// Net resolution; `0.0` selects every ground point.
    pub delta: f64,
    /// Sorted selected points (a subset of `ground` plus forced points).
    pub selected: Vec<usize>,
    /// True when forced points violate pairwise packing at `delta`.
    pub packing_waived: bool,
}

impl Net {
    pub fn contains(&self, v: usize) -> bool {
        self.selected.binary_search(&v).is_ok()
    }
}

/// Builds a `delta`-net of `ground` greedily: forced points first, then
/// remaining ground points in ascending id, each kept iff it is more than
/// `delta` from everything kept so far.
pub fn build_net(g: &MetricGraph, ground: &[usize], delta: f64, must_contain: &[usize]) -> Net {
    let mut ground: Vec<usize> = ground.to_vec();
    ground.sort_unstable();
    ground.dedup();

    let mut selected: Vec<usize> = Vec::new();
    let mut packing_waived = false;
    for &f in must_contain {
        if selected.contains(&f) {
            continue;
        }
        if selected.iter().any(|&s| approx_le(g.distance(s, f), delta)) {
            packing_waived = true;
        }
        selected.push(f);
    }
    if delta > 0.0 {
        for &v in &ground {
            if selected.contains(&v) {
                continue;
            }
            if selected.iter().all(|&s| approx_gt(g.distance(s, v), delta)) {
                selected.push(v);
            }
        }
    } else {
        for &v in &ground {
            if !selected.contains(&v) {
                selected.push(v);
            }
        }
    }
    selected.sort_unstable();

    let net = Net { ground, delta, selected, packing_waived };
    debug_assert!(net_covers(g, &net));
    net
}

/// Checks the covering property: every ground point within `delta` of the
/// net (always true for `delta = 0` since the whole ground is selected).
pub fn net_covers(g: &MetricGraph, net: &Net) -> bool {
    net.ground.iter().all(|&v| {
        net.contains(v)
            || net
                .selected
                .iter()
                .any(|&s| approx_le(g.distance(s, v), net.delta))
    })
}

/// Checks the packing property: pairwise distances above `delta`. Forced
/// points may violate this; callers consult `packing_waived`.
pub fn net_packs(g: &MetricGraph, net: &Net) -> bool {
    let s = &net.selected;
    for (i, &u) in s.iter().enumerate() {
        for &v in &s[i + 1..] {
            if !approx_gt(g.distance(u, v), net.delta) {
                return false;
            }
        }
    }
    true
}
