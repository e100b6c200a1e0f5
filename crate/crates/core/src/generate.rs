//! Deterministic instance families.
//!
//! Three graph families exercise the hub machinery from different
//! directions: stars of stars (one dominant interchange per branch),
//! grid strips with highways (a long thin mesh with two shortcuts), and
//! cluster trees (tight clusters far apart). All of them keep local
//! detail much finer than global structure, so covers stay sparse and
//! towns actually form. Generation is reproducible: the same family
//! parameters and seed always build the same graph.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{graph_from_edges, MetricGraph, Role};

/// The built-in instance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    StarOfStars,
    GridWithHighways,
    ClusterTree,
}

impl Family {
    pub const ALL: [Family; 3] =
        [Family::StarOfStars, Family::GridWithHighways, Family::ClusterTree];

    pub fn name(&self) -> &'static str {
        match self {
            Family::StarOfStars => "star-of-stars",
            Family::GridWithHighways => "grid-with-highways",
            Family::ClusterTree => "cluster-tree",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "star-of-stars" => Ok(Family::StarOfStars),
            "grid-with-highways" => Ok(Family::GridWithHighways),
            "cluster-tree" | "random-cluster-tree" => Ok(Family::ClusterTree),
            other => Err(format!(
                "unknown family {other:?}; expected star-of-stars, grid-with-highways, or cluster-tree"
            )),
        }
    }
}

/// A hub vertex with `satellites` long spokes, each satellite carrying
/// its own short-spoke star of `leaves` leaves. `n = 1 + s * (1 + leaves)`.
pub fn star_of_stars(satellites: usize, leaves: usize, seed: u64) -> MetricGraph {
    assert!(satellites >= 1 && leaves >= 1, "need at least one satellite and leaf");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let long = [6.0, 7.0, 8.0];
    let short = [0.75, 1.0, 1.25];
    let mut edges = Vec::new();
    let mut next = 1usize;
    for _ in 0..satellites {
        let sat = next;
        next += 1;
        edges.push((0, sat, *long.choose(&mut rng).unwrap()));
        for _ in 0..leaves {
            edges.push((sat, next, *short.choose(&mut rng).unwrap()));
            next += 1;
        }
    }
    graph_from_edges(next, &edges, Role::Guest)
}

/// A four-row strip grid of `cols` columns with two long shortcut edges
/// along the outer rows. `n = 4 * cols`.
pub fn grid_with_highways(cols: usize, seed: u64) -> MetricGraph {
    assert!(cols >= 2, "need at least two columns");
    let rows = 4usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = [1.0, 1.25];
    let at = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((at(r, c), at(r, c + 1), *step.choose(&mut rng).unwrap()));
            }
            if r + 1 < rows {
                edges.push((at(r, c), at(r + 1, c), *step.choose(&mut rng).unwrap()));
            }
        }
    }
    // Two highways: straight shots along the outer rows, cheaper than
    // walking the strip, so long shortest paths funnel through them.
    let span = (cols - 1) as f64;
    edges.push((at(0, 0), at(0, cols - 1), 0.75 * span));
    edges.push((at(rows - 1, 0), at(rows - 1, cols - 1), 0.75 * span));
    graph_from_edges(rows * cols, &edges, Role::Guest)
}

/// `clusters` tight clusters of `cluster_size` vertices each, joined by
/// long edges along a random tree over the clusters. Cluster members hang
/// off a gateway vertex; gateways carry the long edges.
/// `n = clusters * cluster_size`.
pub fn cluster_tree(clusters: usize, cluster_size: usize, seed: u64) -> MetricGraph {
    assert!(clusters >= 1 && cluster_size >= 1, "need clusters and members");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let short = [1.0, 1.25, 1.5];
    let long = [40.0, 44.0, 48.0];
    let gateway = |k: usize| k * cluster_size;
    let mut edges = Vec::new();
    for k in 0..clusters {
        for m in 1..cluster_size {
            edges.push((gateway(k), gateway(k) + m, *short.choose(&mut rng).unwrap()));
        }
        if k > 0 {
            let parent = rng.gen_range(0..k);
            edges.push((gateway(parent), gateway(k), *long.choose(&mut rng).unwrap()));
        }
    }
    if clusters == 1 && cluster_size == 1 {
        // A single vertex has no edges; callers get the trivial graph.
        return graph_from_edges(1, &[], Role::Guest);
    }
    graph_from_edges(clusters * cluster_size, &edges, Role::Guest)
}

/// Builds a family member of roughly `size_hint` vertices, with the
/// shape parameters drawn from the seed.
pub fn generate(family: Family, size_hint: usize, seed: u64) -> MetricGraph {
    let size_hint = size_hint.max(4);
    match family {
        Family::StarOfStars => {
            let satellites = 2 + (seed % 3) as usize;
            let leaves = ((size_hint.saturating_sub(1)) / satellites).saturating_sub(1).max(1);
            star_of_stars(satellites, leaves, seed)
        }
        Family::GridWithHighways => grid_with_highways((size_hint / 4).max(2), seed),
        Family::ClusterTree => {
            let clusters = 3 + (seed % 3) as usize;
            let size = (size_hint / clusters).max(2);
            cluster_tree(clusters, size, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::build_ladder;
    use crate::scale::canonical_scale;
    use crate::towns::build_towns;

    #[test]
    fn generation_is_reproducible() {
        for family in Family::ALL {
            let a = generate(family, 40, 7);
            let b = generate(family, 40, 7);
            assert_eq!(a.vertex_count(), b.vertex_count());
            let ea = a.edges();
            let eb = b.edges();
            assert_eq!(ea.len(), eb.len());
            for (x, y) in ea.iter().zip(eb) {
                assert_eq!((x.u, x.v), (y.u, y.v));
                assert_eq!(x.w, y.w);
            }
        }
    }

    #[test]
    fn sizes_come_out_exact() {
        assert_eq!(star_of_stars(3, 12, 1).vertex_count(), 40);
        assert_eq!(star_of_stars(3, 52, 1).vertex_count(), 160);
        assert_eq!(grid_with_highways(10, 1).vertex_count(), 40);
        assert_eq!(grid_with_highways(40, 1).vertex_count(), 160);
        assert_eq!(cluster_tree(4, 10, 1).vertex_count(), 40);
        assert_eq!(cluster_tree(4, 40, 1).vertex_count(), 160);
    }

    #[test]
    fn families_survive_the_ladder_machinery() {
        for family in Family::ALL {
            for seed in 0..3 {
                let g = generate(family, 24, seed);
                let (g, p) = canonical_scale(&g, 8.0).unwrap();
                let ladder = build_ladder(&g, &p);
                let tree = build_towns(&g, &ladder, &p)
                    .unwrap_or_else(|e| panic!("{}: {e}", family.name()));
                assert!(!tree.towns.is_empty());
            }
        }
    }

    #[test]
    fn cluster_towns_actually_form() {
        let g = cluster_tree(4, 6, 11);
        let (g, p) = canonical_scale(&g, 8.0).unwrap();
        let ladder = build_ladder(&g, &p);
        let tree = build_towns(&g, &ladder, &p).unwrap();
        // Each cluster should appear as a proper multi-vertex town.
        let proper = tree
            .towns
            .iter()
            .filter(|t| !t.is_singleton() && t.vertices.len() < g.vertex_count())
            .count();
        assert!(proper >= 4, "only {proper} proper towns");
    }

    #[test]
    fn names_round_trip() {
        for family in Family::ALL {
            assert_eq!(family.name().parse::<Family>().unwrap(), family);
        }
    }
}
