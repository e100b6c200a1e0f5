//! Hub covers of shortest paths, one per ladder scale.
//!
//! At scale `r` the cover must hit every canonical shortest path whose
//! length lies in `(r, c*r/2]`. Covers are built greedily (always take the
//! vertex lying on the most uncovered paths, smallest id on ties) and then
//! minimalized by dropping redundant hubs in descending id order, so the
//! result is deterministic and inclusion-minimal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmp::in_half_open;
use crate::graph::MetricGraph;
use crate::scale::ScaleParams;

/// The canonical shortest paths that a single scale must cover.
#[derive(Debug, Clone)]
pub struct PathBucket {
    /// Scale radius `r`; lengths covered are in `(r, c*r/2]`.
    pub r: f64,
    /// One canonical path per unordered vertex pair in the length window.
    pub paths: Vec<Vec<usize>>,
}

/// Hub sets for every scale of the radius ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverLadder {
    /// `hubs[i]` is the sorted hub set for scale `i`.
    pub hubs: Vec<Vec<usize>>,
    /// Scale radii, parallel to `hubs`.
    pub radii: Vec<f64>,
}

impl CoverLadder {
    /// All hubs of all scales, sorted and deduplicated.
    pub fn all_hubs(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.hubs.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Collects the canonical paths with length in `(r, c*r/2]`.
pub fn enumerate_paths(g: &MetricGraph, r: f64, c: f64) -> PathBucket {
    let n = g.vertex_count();
    let hi = c * r / 2.0;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .filter(|&(u, v)| in_half_open(g.distance(u, v), r, hi))
        .collect();
    let paths = pairs
        .into_par_iter()
        .map(|(u, v)| g.path(u, v).expect("connected graph"))
        .collect();
    PathBucket { r, paths }
}

/// Greedy cover of one bucket, minimalized. Returns a sorted hub set.
pub fn build_cover(g: &MetricGraph, bucket: &PathBucket) -> Vec<usize> {
    let n = g.vertex_count();
    let m = bucket.paths.len();
    if m == 0 {
        return Vec::new();
    }
    // vertex -> indices of paths through it (endpoints count).
    let mut through: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in bucket.paths.iter().enumerate() {
        for &v in p {
            through[v].push(i);
        }
    }
    let mut covered = vec![false; m];
    let mut remaining = m;
    let mut hubs: Vec<usize> = Vec::new();
    while remaining > 0 {
        let mut best = 0usize;
        let mut best_gain = 0usize;
        for (v, via) in through.iter().enumerate() {
            let gain = via.iter().filter(|&&i| !covered[i]).count();
            if gain > best_gain {
                best_gain = gain;
                best = v;
            }
        }
        debug_assert!(best_gain > 0, "every path has at least one vertex");
        hubs.push(best);
        for &i in &through[best] {
            if !covered[i] {
                covered[i] = true;
                remaining -= 1;
            }
        }
    }
    hubs.sort_unstable();
    // Minimalization: drop hubs whose paths are all covered elsewhere,
    // scanning in descending id order.
    let mut keep: Vec<usize> = hubs.clone();
    for &h in hubs.iter().rev() {
        let without: Vec<usize> = keep.iter().copied().filter(|&x| x != h).collect();
        let ok = bucket
            .paths
            .iter()
            .all(|p| p.iter().any(|v| without.binary_search(v).is_ok()));
        if ok {
            keep = without;
        }
    }
    keep
}

/// Builds the full ladder of covers for a canonically scaled graph.
///
/// The bottom scale has no paths to cover (all distances exceed `c/2 * r_0`)
/// and the top scale has none either (the window starts above the
/// diameter), so both end hub sets are empty.
pub fn build_ladder(g: &MetricGraph, params: &ScaleParams) -> CoverLadder {
    let buckets: Vec<PathBucket> = (0..=params.r_max_index)
        .map(|i| enumerate_paths(g, params.radius(i), params.c))
        .collect();
    let hubs: Vec<Vec<usize>> = buckets.par_iter().map(|b| build_cover(g, b)).collect();
    let radii = (0..=params.r_max_index).map(|i| params.radius(i)).collect();
    debug_assert!(hubs.first().is_none_or(|h| h.is_empty()));
    debug_assert!(hubs.last().is_none_or(|h| h.is_empty()));
    CoverLadder { hubs, radii }
}

/// Largest number of scale-`i` hubs inside any ball of diameter `c * r_i`,
/// for each scale: the empirical local sparsity of the ladder.
pub fn measure_sparsity(g: &MetricGraph, ladder: &CoverLadder, c: f64) -> Vec<usize> {
    ladder
        .hubs
        .iter()
        .zip(&ladder.radii)
        .map(|(hubs, &r)| {
            (0..g.vertex_count())
                .map(|v| {
                    let ball = g.ball(v, c * r / 2.0);
                    hubs.iter().filter(|h| ball.contains(h)).count()
                })
                .max()
                .unwrap_or(0)
        })
        .collect()
}
