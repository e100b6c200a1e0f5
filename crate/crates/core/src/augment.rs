//! Depot augmentation: pendant copies that pin depots into the hub
//! structure.
//!
//! Before building the cover ladder for a routing instance, every depot
//! gets a block of pendant leaves at each relevant radius. The pendants
//! create enough shortest paths through the depot that the greedy covers
//! select it as a hub at every scale between the smallest radius above the
//! minimum distance and the graph diameter, so depots never end up buried
//! inside non-trivial towns. Pendants are leaves, so distances between
//! original vertices are unchanged; they carry no demand and are excluded
//! from coverage downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::approx_gt;
use crate::graph::{Edge, MetricGraph, Role};
use crate::scale::ScaleParams;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("depot {0} out of range for a graph on {1} vertices")]
    DepotOutOfRange(usize, usize),
    #[error("no depots given")]
    NoDepots,
    #[error("cluster-count hint must be positive")]
    BadHint,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// One pendant leaf hanging off a depot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Pendant {
    pub id: usize,
    pub depot: usize,
    pub radius: f64,
}

/// An augmented instance: the widened graph plus bookkeeping for which
/// vertices are pendants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Augmentation {
    pub graph: MetricGraph,
    /// Sorted, deduplicated depot ids (original vertices).
    pub depots: Vec<usize>,
    pub pendants: Vec<Pendant>,
    /// Vertex count of the graph before augmentation; pendants are
    /// exactly the ids at or above this.
    pub original_n: usize,
}

impl Augmentation {
    pub fn is_pendant(&self, v: usize) -> bool {
        v >= self.original_n
    }
    /// Original (non-pendant) vertex ids.
    pub fn original_vertices(&self) -> impl Iterator<Item = usize> {
        0..self.original_n
    }
}

/// Attaches pendant blocks to each depot of a scaled graph.
///
/// Radii run over the ladder scales whose radius exceeds half the scale
/// base (so pendant edges are never the new minimum distance) up to the
/// first radius strictly above the diameter. Each (depot, radius) pair
/// gets `(eta_hint + |depots|)^2` copies.
pub fn augment_depots(
    g: &MetricGraph,
    depots: &[usize],
    eta_hint: usize,
    params: &ScaleParams,
) -> Result<Augmentation, AugmentError> {
    let n = g.vertex_count();
    let mut depots: Vec<usize> = depots.to_vec();
    depots.sort_unstable();
    depots.dedup();
    if depots.is_empty() {
        return Err(AugmentError::NoDepots);
    }
    if eta_hint == 0 {
        return Err(AugmentError::BadHint);
    }
    if let Some(&d) = depots.iter().find(|&&d| d >= n) {
        return Err(AugmentError::DepotOutOfRange(d, n));
    }

    let c = params.c;
    let mut lo = 0usize;
    while !approx_gt(params.radius(lo), c / 2.0) {
        lo += 1;
    }
    let diam = g.diameter();
    let mut hi = 0usize;
    while !approx_gt(params.radius(hi), diam) {
        hi += 1;
    }
    let copies = (eta_hint + depots.len()).pow(2);

    let mut edges: Vec<Edge> = g.edges().to_vec();
    let mut pendants = Vec::new();
    let mut next = n;
    for &s in &depots {
        for i in lo..=hi {
            let r = params.radius(i);
            for _ in 0..copies {
                edges.push(Edge { u: s, v: next, w: r });
                pendants.push(Pendant { id: next, depot: s, radius: r });
                next += 1;
            }
        }
    }
    let graph = MetricGraph::new(next, edges, Role::Augmented)?;
    Ok(Augmentation { graph, depots, pendants, original_n: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmp::approx_eq;
    use crate::cover::build_ladder;
    use crate::graph::graph_from_edges;
    use crate::scale::canonical_scale;
    use crate::towns::build_towns;

    fn scaled_star() -> (MetricGraph, ScaleParams) {
        let g = graph_from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], Role::Guest);
        canonical_scale(&g, 8.0).unwrap()
    }

    #[test]
    fn star_pendant_block() {
        // Star with depot at the hub: radii 8 and 16, four copies each.
        let (g, p) = scaled_star();
        let aug = augment_depots(&g, &[0], 1, &p).unwrap();
        assert_eq!(aug.pendants.len(), 8);
        assert_eq!(aug.graph.vertex_count(), 12);
        let radii: Vec<f64> = aug.pendants.iter().map(|q| q.radius).collect();
        assert_eq!(radii.iter().filter(|&&r| r == 8.0).count(), 4);
        assert_eq!(radii.iter().filter(|&&r| r == 16.0).count(), 4);
        assert!(aug.pendants.iter().all(|q| q.depot == 0));
        assert!(aug.is_pendant(4) && !aug.is_pendant(3));
    }

    #[test]
    fn zero_hint_is_rejected() {
        let (g, p) = scaled_star();
        assert!(matches!(augment_depots(&g, &[0], 0, &p), Err(AugmentError::BadHint)));
    }

    #[test]
    fn original_distances_preserved() {
        let g = graph_from_edges(
            5,
            &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (3, 4, 1.0), (4, 0, 2.5)],
            Role::Guest,
        );
        let (g, p) = canonical_scale(&g, 8.0).unwrap();
        let aug = augment_depots(&g, &[0, 3], 1, &p).unwrap();
        for u in 0..5 {
            for v in 0..5 {
                assert!(approx_eq(aug.graph.distance(u, v), g.distance(u, v)));
            }
        }
    }

    #[test]
    fn pendant_count_scales_with_depots() {
        let (g, p) = scaled_star();
        let aug = augment_depots(&g, &[1, 2], 1, &p).unwrap();
        // (1 + 2)^2 = 9 copies per depot per radius, radii 8 and 16.
        assert_eq!(aug.pendants.len(), 9 * 2 * 2);
    }

    #[test]
    fn depot_becomes_hub_at_every_pendant_scale() {
        let (g, p) = scaled_star();
        let aug = augment_depots(&g, &[0], 1, &p).unwrap();
        let p = p.refreshed_for(&aug.graph);
        assert_eq!(p.r_max_index, 5);
        let ladder = build_ladder(&aug.graph, &p);
        assert_eq!(ladder.hubs[0], Vec::<usize>::new());
        for i in 1..=4 {
            assert_eq!(ladder.hubs[i], vec![0], "scale {i}");
        }
        assert_eq!(ladder.hubs[5], Vec::<usize>::new());
    }

    #[test]
    fn depot_sits_only_in_trivial_towns() {
        let (g, p) = scaled_star();
        let aug = augment_depots(&g, &[0], 1, &p).unwrap();
        let p = p.refreshed_for(&aug.graph);
        let ladder = build_ladder(&aug.graph, &p);
        let tree = build_towns(&aug.graph, &ladder, &p).unwrap();
        for t in &tree.towns {
            if t.contains(0) {
                assert!(
                    t.is_singleton() || t.vertices.len() == aug.graph.vertex_count(),
                    "depot inside non-trivial town {:?}",
                    t.vertices
                );
            }
        }
    }
}
