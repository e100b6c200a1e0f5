//! Weighted undirected graphs with an exact all-pairs distance oracle.
//!
//! Construction validates the graph (positive weights, connectivity) and
//! eagerly computes per-source shortest-path trees, so a [`MetricGraph`] is
//! immutable afterwards and safe to share across threads. Canonical paths
//! are pinned down by a deterministic tie-break: among equal-length
//! predecessors of a vertex, the smallest id wins, and the canonical path of
//! an unordered pair is extracted from the smaller endpoint as source.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

use crate::cmp::{approx_eq, approx_le};

/// Dense distance matrices are precomputed up to this vertex count; larger
/// graphs fall back to uncached per-call searches.
pub const DENSE_LIMIT: usize = 5000;

const NO_PRED: u32 = u32::MAX;

/// What a graph instance represents in a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// An input graph, in whatever units it arrived.
    Guest,
    /// A guest graph with depot guard pendants attached.
    Augmented,
    /// A host graph produced by one of the embeddings.
    Host,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("edge ({u}, {v}) out of range for {n} vertices")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("edge ({u}, {v}) has non-positive weight {w}")]
    BadWeight { u: usize, v: usize, w: f64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("graph is not connected (vertex {0} unreachable from 0)")]
    Disconnected(usize),
    #[error("no path between {0} and {1}")]
    Unreachable(usize, usize),
    #[error("vertex {0} out of range for {1} vertices")]
    VertexOutOfRange(usize, usize),
    #[error("malformed graph text: {0}")]
    Parse(String),
}

/// An undirected edge with a positive length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Immutable weighted graph plus its distance oracle.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
    role: Role,
    /// Flat n*n distance matrix (dense mode only).
    dist: Vec<f64>,
    /// Flat n*n canonical predecessor matrix: `pred[s*n + v]` is the vertex
    /// before `v` on the canonical shortest path from `s`.
    pred: Vec<u32>,
}

/// Wire form: only the defining data travels; adjacency and the distance
/// oracle are rebuilt (and the graph re-validated) on the way in.
#[derive(Serialize, Deserialize)]
struct GraphWire {
    n: usize,
    edges: Vec<Edge>,
    role: Role,
}

impl Serialize for MetricGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphWire { n: self.n, edges: self.edges.clone(), role: self.role }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = GraphWire::deserialize(d)?;
        MetricGraph::new(wire.n, wire.edges, wire.role).map_err(serde::de::Error::custom)
    }
}

/// Result of one Dijkstra run with canonical predecessors.
struct SourceTree {
    dist: Vec<f64>,
    pred: Vec<u32>,
}

fn dijkstra(n: usize, adj: &[Vec<(usize, f64)>], s: usize) -> SourceTree {
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    let mut heap: BinaryHeap<Reverse<(ordered::F64, usize)>> = BinaryHeap::new();
    heap.push(Reverse((ordered::F64(0.0), s)));
    while let Some(Reverse((ordered::F64(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((ordered::F64(nd), v)));
            }
        }
    }
    // Canonical predecessors are derived after the fact: the smallest
    // neighbor id that attains the optimal distance. This makes the choice
    // independent of heap pop order.
    let mut pred = vec![NO_PRED; n];
    for v in 0..n {
        if v == s || dist[v].is_infinite() {
            continue;
        }
        let mut best = NO_PRED;
        for &(p, w) in &adj[v] {
            if approx_eq(dist[p] + w, dist[v]) && (p as u32) < best {
                best = p as u32;
            }
        }
        pred[v] = best;
    }
    SourceTree { dist, pred }
}

mod ordered {
    /// Total order on finite f64 for the Dijkstra heap.
    #[derive(PartialEq, PartialOrd)]
    pub struct F64(pub f64);
    impl Eq for F64 {}
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for F64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).expect("distances are finite")
        }
    }
}

impl MetricGraph {
    /// Builds a graph, validates it, and precomputes the distance oracle.
    pub fn new(n: usize, edges: Vec<Edge>, role: Role) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            if e.u >= n || e.v >= n {
                return Err(GraphError::EdgeOutOfRange { u: e.u, v: e.v, n });
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(e.u));
            }
            if !e.w.is_finite() || e.w <= 0.0 {
                return Err(GraphError::BadWeight { u: e.u, v: e.v, w: e.w });
            }
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        // Deterministic adjacency order: by neighbor id, then weight.
        for nb in &mut adj {
            nb.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        }
        let g = {
            let mut g = MetricGraph {
                n,
                edges,
                adj,
                role,
                dist: Vec::new(),
                pred: Vec::new(),
            };
            if n <= DENSE_LIMIT {
                let trees: Vec<SourceTree> = (0..n)
                    .into_par_iter()
                    .map(|s| dijkstra(n, &g.adj, s))
                    .collect();
                let mut dist = vec![0.0; n * n];
                let mut pred = vec![NO_PRED; n * n];
                for (s, t) in trees.into_iter().enumerate() {
                    dist[s * n..(s + 1) * n].copy_from_slice(&t.dist);
                    pred[s * n..(s + 1) * n].copy_from_slice(&t.pred);
                }
                g.dist = dist;
                g.pred = pred;
            }
            g
        };
        // Connectivity: everything must be reachable from vertex 0.
        let d0: Vec<f64> = if g.dist.is_empty() {
            dijkstra(n, &g.adj, 0).dist
        } else {
            g.dist[0..n].to_vec()
        };
        if let Some(v) = d0.iter().position(|d| d.is_infinite()) {
            return Err(GraphError::Disconnected(v));
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    /// Shortest-path distance between two vertices.
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        debug_assert!(u < self.n && v < self.n);
        if self.dist.is_empty() {
            dijkstra(self.n, &self.adj, u).dist[v]
        } else {
            self.dist[u * self.n + v]
        }
    }

    /// The canonical shortest path between `u` and `v`, as a vertex list
    /// starting at `u`. For `u == v` this is `[u]`. The path is extracted
    /// from the smaller endpoint as source so that the unordered pair has a
    /// single canonical path, reported in the requested direction.
    pub fn path(&self, u: usize, v: usize) -> Result<Vec<usize>, GraphError> {
        if u >= self.n {
            return Err(GraphError::VertexOutOfRange(u, self.n));
        }
        if v >= self.n {
            return Err(GraphError::VertexOutOfRange(v, self.n));
        }
        if u == v {
            return Ok(vec![u]);
        }
        let (s, t, forward) = if u <= v { (u, v, true) } else { (v, u, false) };
        let pred_row: Vec<u32> = if self.pred.is_empty() {
            dijkstra(self.n, &self.adj, s).pred
        } else {
            self.pred[s * self.n..(s + 1) * self.n].to_vec()
        };
        let mut path = vec![t];
        let mut cur = t;
        while cur != s {
            let p = pred_row[cur];
            if p == NO_PRED {
                return Err(GraphError::Unreachable(u, v));
            }
            cur = p as usize;
            path.push(cur);
        }
        if forward {
            path.reverse();
        }
        Ok(path)
    }

    /// Closed metric ball: all vertices within distance `r` of `v`.
    pub fn ball(&self, v: usize, r: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&u| approx_le(self.distance(v, u), r))
            .collect()
    }

    /// Distance from `v` to the nearest vertex of `set`; infinite if empty.
    pub fn distance_to_set(&self, v: usize, set: &[usize]) -> f64 {
        set.iter()
            .map(|&u| self.distance(v, u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                d = d.max(self.distance(u, v));
            }
        }
        d
    }

    /// Smallest distance between two distinct vertices.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                d = d.min(self.distance(u, v));
            }
        }
        d
    }

    /// Same graph under a different role tag.
    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Parses the line-oriented text format: a `n m` header, then one
    /// `u v w` line per edge, 0-indexed.
    pub fn parse_text(text: &str, role: Role) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| GraphError::Parse("empty file".into()))?;
        let mut it = header.split_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Parse(format!("bad header {header:?}")))?;
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GraphError::Parse(format!("bad header {header:?}")))?;
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let mut f = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<f64, GraphError> {
                t.and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| GraphError::Parse(format!("bad edge line {}: {line:?}", i + 2)))
            };
            let u = parse(f.next())? as usize;
            let v = parse(f.next())? as usize;
            let w = parse(f.next())?;
            edges.push(Edge { u, v, w });
        }
        if edges.len() != m {
            return Err(GraphError::Parse(format!(
                "header promised {m} edges, found {}",
                edges.len()
            )));
        }
        MetricGraph::new(n, edges, role)
    }

    /// Writes the text format parsed by [`MetricGraph::parse_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.u, e.v, e.w));
        }
        out
    }
}

/// Convenience constructor used throughout the tests.
pub fn graph_from_edges(n: usize, edges: &[(usize, usize, f64)], role: Role) -> MetricGraph {
    MetricGraph::new(
        n,
        edges.iter().map(|&(u, v, w)| Edge { u, v, w }).collect(),
        role,
    )
    .expect("valid test graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> MetricGraph {
        // a=0, b=1, c=2, d=3 around a unit square.
        graph_from_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
            Role::Guest,
        )
    }

    #[test]
    fn distances_on_cycle_with_heavy_chord() {
        // 4-cycle with weights 1,1,1,10: the heavy edge is never used.
        let g = graph_from_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 10.0)],
            Role::Guest,
        );
        assert!(approx_eq(g.distance(0, 3), 3.0));
        assert_eq!(g.path(0, 3).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn tie_break_picks_smallest_predecessor() {
        let g = square();
        // Two length-2 paths a-b-c and a-d-c; the canonical one goes via b=1.
        assert_eq!(g.path(0, 2).unwrap(), vec![0, 1, 2]);
        // Reverse direction is the same path reversed.
        assert_eq!(g.path(2, 0).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn trivial_path_is_single_vertex() {
        let g = square();
        assert_eq!(g.path(2, 2).unwrap(), vec![2]);
    }

    #[test]
    fn ball_includes_boundary() {
        let g = square();
        let b = g.ball(0, 1.0);
        assert_eq!(b, vec![0, 1, 3]);
        assert_eq!(g.ball(0, 2.0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn path_length_matches_distance() {
        let g = square();
        for u in 0..4 {
            for v in 0..4 {
                let p = g.path(u, v).unwrap();
                let len: f64 = p.windows(2).map(|w| g.distance(w[0], w[1])).sum();
                assert!(approx_eq(len, g.distance(u, v)));
            }
        }
    }

    #[test]
    fn rejects_disconnected_and_bad_edges() {
        assert!(matches!(
            MetricGraph::new(
                4,
                vec![Edge { u: 0, v: 1, w: 1.0 }],
                Role::Guest
            ),
            Err(GraphError::Disconnected(_))
        ));
        assert!(matches!(
            MetricGraph::new(2, vec![Edge { u: 0, v: 1, w: 0.0 }], Role::Guest),
            Err(GraphError::BadWeight { .. })
        ));
        assert!(matches!(
            MetricGraph::new(2, vec![Edge { u: 0, v: 0, w: 1.0 }], Role::Guest),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(MetricGraph::new(0, vec![], Role::Guest), Err(GraphError::Empty)));
    }

    #[test]
    fn text_round_trip() {
        let g = square();
        let text = g.to_text();
        let h = MetricGraph::parse_text(&text, Role::Guest).unwrap();
        assert_eq!(h.vertex_count(), 4);
        assert_eq!(h.to_text(), text);
    }

    #[test]
    fn triangle_inequality_holds() {
        let g = graph_from_edges(
            5,
            &[
                (0, 1, 2.5),
                (1, 2, 1.0),
                (2, 3, 4.0),
                (3, 4, 0.5),
                (4, 0, 3.0),
                (1, 3, 2.0),
            ],
            Role::Guest,
        );
        for u in 0..5 {
            for v in 0..5 {
                for w in 0..5 {
                    assert!(approx_le(g.distance(u, v), g.distance(u, w) + g.distance(w, v)));
                }
            }
        }
    }
}
