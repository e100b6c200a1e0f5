//! Town decomposition: the laminar cluster family induced by a cover ladder.
//!
//! A town at scale `i` is the radius-`r_i` ball around any vertex that is
//! more than `2 r_i` away from every scale-`i` hub. On a canonically scaled
//! graph this produces singletons at the bottom scale and the whole vertex
//! set at the top, and every town is both small (diameter at most `r_i`)
//! and isolated (distance more than `r_i` to the rest of the graph). Towns
//! generated at several scales with the same vertex set are merged, keeping
//! the smallest generating scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::{approx_gt, approx_le};
use crate::cover::CoverLadder;
use crate::graph::MetricGraph;
use crate::scale::ScaleParams;

#[derive(Debug, Error)]
pub enum TownError {
    #[error("town at scale {level} around {center} violates {what}: {value} vs {bound}")]
    Internal {
        level: usize,
        center: usize,
        what: &'static str,
        value: f64,
        bound: f64,
    },
}

/// One town: a cluster that is small at its scale and far from everything
/// else.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Town {
    /// Sorted vertex set.
    pub vertices: Vec<usize>,
    /// Smallest ladder scale at which this vertex set arises as a town.
    pub level: usize,
    /// Exact diameter of the vertex set in the ambient graph.
    pub diameter: f64,
    /// Core hubs: town vertices that are hubs at any ladder scale. Empty
    /// for singleton towns.
    pub core_hubs: Vec<usize>,
}

impl Town {
    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }
}

/// The laminar family of towns, wired into a rooted tree by containment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TownTree {
    pub towns: Vec<Town>,
    /// Parent index per town; the root points to itself.
    pub parent: Vec<usize>,
    /// Children indices per town, sorted by smallest vertex.
    pub children: Vec<Vec<usize>>,
    pub root: usize,
}

impl TownTree {
    /// Index of the leaf town (singleton) for each vertex.
    pub fn leaf_of(&self, v: usize) -> usize {
        self.towns
            .iter()
            .position(|t| t.is_singleton() && t.vertices[0] == v)
            .expect("every vertex has a singleton town")
    }

    /// Towns from `t` up to the root, inclusive.
    pub fn ancestors_inclusive(&self, mut t: usize) -> Vec<usize> {
        let mut out = vec![t];
        while self.parent[t] != t {
            t = self.parent[t];
            out.push(t);
        }
        out
    }

    /// The town subtree rooted at `t`, preorder.
    pub fn subtree(&self, t: usize) -> Vec<usize> {
        let mut out = vec![t];
        let mut stack = vec![t];
        while let Some(x) = stack.pop() {
            for &c in &self.children[x] {
                out.push(c);
                stack.push(c);
            }
        }
        out
    }
}

fn set_diameter(g: &MetricGraph, set: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for (i, &u) in set.iter().enumerate() {
        for &v in &set[i + 1..] {
            d = d.max(g.distance(u, v));
        }
    }
    d
}

fn set_isolation(g: &MetricGraph, set: &[usize]) -> f64 {
    let inside = |v: usize| set.binary_search(&v).is_ok();
    let mut d = f64::INFINITY;
    for &u in set {
        for v in 0..g.vertex_count() {
            if !inside(v) {
                d = d.min(g.distance(u, v));
            }
        }
    }
    d
}

/// Builds the town tree of a scaled graph from its cover ladder.
pub fn build_towns(
    g: &MetricGraph,
    ladder: &CoverLadder,
    params: &ScaleParams,
) -> Result<TownTree, TownError> {
    let n = g.vertex_count();
    // Generate towns scale by scale, deduplicating identical vertex sets
    // and keeping the smallest generating scale.
    let mut sets: Vec<(Vec<usize>, usize)> = Vec::new();
    for (i, hubs) in ladder.hubs.iter().enumerate() {
        let r = params.radius(i);
        for v in 0..n {
            let to_hubs = g.distance_to_set(v, hubs);
            if !approx_gt(to_hubs, 2.0 * r) {
                continue;
            }
            let town = g.ball(v, r);
            // Each new town must be small and isolated at its scale; a
            // failure here means the cover upstream is broken.
            let diam = set_diameter(g, &town);
            if !approx_le(diam, r) {
                return Err(TownError::Internal {
                    level: i,
                    center: v,
                    what: "diameter bound",
                    value: diam,
                    bound: r,
                });
            }
            if town.len() < n {
                let iso = set_isolation(g, &town);
                if !approx_gt(iso, r) {
                    return Err(TownError::Internal {
                        level: i,
                        center: v,
                        what: "isolation bound",
                        value: iso,
                        bound: r,
                    });
                }
            }
            if !sets.iter().any(|(s, _)| *s == town) {
                sets.push((town, i));
            }
        }
    }
    // The root town (everything) always arises at the top scale, where the
    // hub set is empty.
    debug_assert!(sets.iter().any(|(s, _)| s.len() == n));

    let towns: Vec<Town> = sets
        .into_iter()
        .map(|(vertices, level)| {
            let diameter = set_diameter(g, &vertices);
            Town { vertices, level, diameter, core_hubs: Vec::new() }
        })
        .collect();
    let mut tree = wire_tree(towns)?;
    build_core_hubs(&mut tree, ladder);
    Ok(tree)
}

/// Wires a laminar family into a containment tree.
fn wire_tree(mut towns: Vec<Town>) -> Result<TownTree, TownError> {
    // Sort by size ascending (then smallest vertex) so parents follow
    // children and the ordering is canonical.
    towns.sort_by(|a, b| {
        a.vertices
            .len()
            .cmp(&b.vertices.len())
            .then(a.vertices.cmp(&b.vertices))
    });
    let k = towns.len();
    let is_subset = |a: &[usize], b: &[usize]| a.iter().all(|v| b.binary_search(v).is_ok());
    let mut parent: Vec<usize> = (0..k).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            if towns[j].vertices.len() > towns[i].vertices.len()
                && is_subset(&towns[i].vertices, &towns[j].vertices)
            {
                parent[i] = j;
                break;
            }
        }
    }
    let root = k - 1;
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..k {
        if i != root {
            children[parent[i]].push(i);
        }
    }
    for ch in &mut children {
        ch.sort_by_key(|&c| towns[c].vertices[0]);
    }
    Ok(TownTree { towns, parent, children, root })
}

/// Fills in `core_hubs`: for every non-singleton town, the town vertices
/// that are hubs at any ladder scale.
pub fn build_core_hubs(tree: &mut TownTree, ladder: &CoverLadder) {
    let all = ladder.all_hubs();
    for t in &mut tree.towns {
        if t.is_singleton() {
            t.core_hubs = Vec::new();
        } else {
            t.core_hubs = t
                .vertices
                .iter()
                .copied()
                .filter(|v| all.binary_search(v).is_ok())
                .collect();
        }
    }
}
