//! Embedding a scaled metric graph into a low-treewidth host.
//!
//! The host graph keeps the guest's vertices (plus any augmentation
//! pendants) and rewires them: inside each town, vertices either hang off
//! a star center or connect to a small net of the town's core hubs, and
//! across towns all traffic is funneled through hub nets. Host distances
//! never drop below guest distances, and the additive error is controlled
//! by the net resolutions.
//!
//! `diameter` embeds a whole graph at once with error proportional to the
//! diameter; `depot` embeds around one or more depots with error
//! proportional to depot distance.

pub mod depot;
pub mod diameter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::{approx_ge, approx_le};
use crate::graph::{GraphError, MetricGraph, Role};
use crate::net::build_net;
use crate::towns::TownTree;
use crate::tree_decomp::{TreeDecompError, TreeDecomposition};

#[derive(Debug, Error)]
pub enum EmbedError {
    /// A town too large to flatten has no hub to route through. This
    /// indicates a broken ladder or town structure upstream.
    #[error("town {0} needs a hub net but contains no hubs")]
    NoCoreHubs(usize),
    #[error("host graph rejected: {0}")]
    Graph(#[from] GraphError),
    #[error("host decomposition rejected: {0}")]
    Decomp(#[from] TreeDecompError),
    /// Augmentation or scaling failed before the embedding proper.
    #[error("{0}")]
    Setup(String),
}

/// Accumulates host edges and decomposition bags while the town recursion
/// runs. Bags are wired parent-first; `parent[i] == i` marks a root.
#[derive(Debug, Default)]
pub struct HostSketch {
    pub edges: Vec<(usize, usize, f64)>,
    pub bags: Vec<Vec<usize>>,
    pub parent: Vec<usize>,
}

impl HostSketch {
    pub fn push_bag(&mut self, contents: Vec<usize>, parent: Option<usize>) -> usize {
        let id = self.bags.len();
        self.bags.push(contents);
        self.parent.push(parent.unwrap_or(id));
        id
    }

    pub fn edge(&mut self, u: usize, v: usize, w: f64) {
        if u != v {
            self.edges.push((u.min(v), u.max(v), w));
        }
    }
}

/// Embeds the subtree of towns under `town` and returns the id of the
/// piece's root bag.
///
/// Towns whose diameter is at most `epsilon * delta` flatten into a star
/// on their smallest vertex; larger towns connect every member to an
/// `(epsilon * diameter)`-net of their core hubs and recurse into their
/// children. Bag contents accumulate top-down so that every edge written
/// here ends up inside some bag of the piece.
#[allow(clippy::too_many_arguments)]
pub fn embed_town_subtree(
    g: &MetricGraph,
    tree: &TownTree,
    town: usize,
    epsilon: f64,
    delta: f64,
    inherited: &[usize],
    sketch: &mut HostSketch,
    parent_bag: Option<usize>,
) -> Result<usize, EmbedError> {
    let t = &tree.towns[town];
    if t.is_singleton() || approx_le(t.diameter, epsilon * delta) {
        // Star: the smallest vertex absorbs the whole town.
        let center = t.vertices[0];
        let mut hub_bag = inherited.to_vec();
        hub_bag.push(center);
        let b0 = sketch.push_bag(hub_bag.clone(), parent_bag);
        for &v in &t.vertices[1..] {
            sketch.edge(center, v, g.distance(center, v));
            let mut leaf = hub_bag.clone();
            leaf.push(v);
            sketch.push_bag(leaf, Some(b0));
        }
        return Ok(b0);
    }

    // Big town: route everything through a net of the core hubs.
    if t.core_hubs.is_empty() {
        return Err(EmbedError::NoCoreHubs(town));
    }
    let net = build_net(g, &t.core_hubs, epsilon * t.diameter, &[]);
    for &v in &t.vertices {
        for &h in &net.selected {
            sketch.edge(v, h, g.distance(v, h));
        }
    }
    let mut contents = inherited.to_vec();
    contents.extend_from_slice(&net.selected);
    contents.sort_unstable();
    contents.dedup();
    let bag = sketch.push_bag(contents.clone(), parent_bag);
    for &child in &tree.children[town] {
        embed_town_subtree(g, tree, child, epsilon, delta, &contents, sketch, Some(bag))?;
    }
    Ok(bag)
}

/// Builds the host graph from a sketch: edges deduplicated (keeping the
/// smallest weight) over the full vertex range.
pub fn assemble_host(n: usize, sketch: &HostSketch) -> Result<MetricGraph, EmbedError> {
    let mut edges = sketch.edges.clone();
    edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
    edges.dedup_by(|next, kept| (next.0, next.1) == (kept.0, kept.1));
    let edges = edges
        .into_iter()
        .map(|(u, v, w)| crate::graph::Edge { u, v, w })
        .collect();
    Ok(MetricGraph::new(n, edges, Role::Host)?)
}

/// Turns a sketch's bags into a rooted decomposition and validates it
/// against the host graph.
pub fn assemble_decomposition(
    sketch: &HostSketch,
    root: usize,
    host: &MetricGraph,
) -> Result<TreeDecomposition, EmbedError> {
    let td = TreeDecomposition::new(sketch.bags.clone(), sketch.parent.clone(), root);
    td.validate(host)?;
    Ok(td)
}

/// One distortion violation: a vertex pair whose host distance escapes
/// the allowed corridor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub u: usize,
    pub v: usize,
    pub guest: f64,
    pub host: f64,
    pub allowed: f64,
}

/// All-pairs audit of an embedding against a per-pair upper bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub checked_pairs: usize,
    /// Largest `d_H - d_G` seen.
    pub max_additive_error: f64,
    /// Largest `(d_H - d_G) / allowed` seen; at most 1 when clean.
    pub worst_slack: f64,
    pub violations: Vec<Violation>,
}

impl DistortionReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d_G <= d_H <= d_G + allowed(u, v)` for every guest pair drawn
/// from `vertices`.
pub fn audit_pairs(
    guest: &MetricGraph,
    host: &MetricGraph,
    vertices: &[usize],
    allowed: impl Fn(usize, usize) -> f64,
) -> DistortionReport {
    let mut report = DistortionReport {
        checked_pairs: 0,
        max_additive_error: 0.0,
        worst_slack: 0.0,
        violations: Vec::new(),
    };
    for (i, &u) in vertices.iter().enumerate() {
        for &v in &vertices[i + 1..] {
            let dg = guest.distance(u, v);
            let dh = host.distance(u, v);
            let bound = allowed(u, v);
            report.checked_pairs += 1;
            report.max_additive_error = report.max_additive_error.max(dh - dg);
            if bound > 0.0 {
                report.worst_slack = report.worst_slack.max((dh - dg) / bound);
            }
            if !approx_ge(dh, dg) || !approx_le(dh, dg + bound) {
                report.violations.push(Violation { u, v, guest: dg, host: dh, allowed: bound });
            }
        }
    }
    report
}
