//! Whole-graph embedding with additive error proportional to the
//! diameter.
//!
//! The town tree is flattened from the root down: every town small
//! relative to `epsilon * delta` becomes a star, and every larger town
//! wires its members to a net of its core hubs. The host distance between
//! any two vertices then exceeds the guest distance by at most
//! `4 * epsilon * delta` (the construction itself stays within half of
//! that; the audit checks the stated bound).

use serde::{Deserialize, Serialize};

use crate::embed::{
    assemble_decomposition, assemble_host, audit_pairs, embed_town_subtree, DistortionReport,
    EmbedError, HostSketch,
};
use crate::graph::MetricGraph;
use crate::towns::TownTree;
use crate::tree_decomp::TreeDecomposition;

/// A finished whole-graph embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiameterEmbedding {
    pub host: MetricGraph,
    pub td: TreeDecomposition,
    pub epsilon: f64,
    /// The diameter proxy the star threshold and error bound refer to.
    pub delta: f64,
}

/// Embeds a scaled graph into a host whose distances overshoot by at most
/// `4 * epsilon * delta`.
pub fn embed_bounded_diameter(
    g: &MetricGraph,
    tree: &TownTree,
    epsilon: f64,
    delta: f64,
) -> Result<DiameterEmbedding, EmbedError> {
    let mut sketch = HostSketch::default();
    let root = embed_town_subtree(g, tree, tree.root, epsilon, delta, &[], &mut sketch, None)?;
    let host = assemble_host(g.vertex_count(), &sketch)?;
    let td = assemble_decomposition(&sketch, root, &host)?;
    Ok(DiameterEmbedding { host, td, epsilon, delta })
}

/// All-pairs distortion audit against the `4 * epsilon * delta` corridor.
pub fn audit_bounded_diameter(g: &MetricGraph, emb: &DiameterEmbedding) -> DistortionReport {
    let vertices: Vec<usize> = (0..g.vertex_count()).collect();
    let allowed = 4.0 * emb.epsilon * emb.delta;
    audit_pairs(g, &emb.host, &vertices, |_, _| allowed)
}
