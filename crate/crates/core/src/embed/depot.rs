//! Depot-centered embeddings with additive error proportional to depot
//! distance.
//!
//! After the depots are padded with pendant leaves (so no depot sits on a
//! separating path), the root town's hubs are thinned into a ladder of
//! nets — one band per doubling distance scale around the depot set, with
//! resolution growing alongside. Each top-level town connects to a window
//! of bands matched to its distance from the depots, and flattens
//! internally like the whole-graph embedding. The decomposition is a
//! chain of band bags with the town pieces hanging off it.
//!
//! With a single depot `s` the host satisfies
//! `d_G <= d_H <= d_G + 32 * eps * (d(s,u) + d(s,v))`; with several
//! depots `S` it satisfies
//! `d_G <= d_H <= (1 + 8 * eps) * d_G + 32 * eps * min(d(S,u), d(S,v))`.

use serde::{Deserialize, Serialize};

use crate::augment::{augment_depots, Augmentation};
use crate::cmp::{approx_ge, approx_le};
use crate::cover::build_ladder;
use crate::embed::{
    assemble_decomposition, assemble_host, audit_pairs, embed_town_subtree, DistortionReport,
    EmbedError, HostSketch,
};
use crate::graph::MetricGraph;
use crate::scale::ScaleParams;
use crate::towns::{build_core_hubs, build_towns, TownTree};
use crate::tree_decomp::TreeDecomposition;

/// A finished depot-centered embedding, keeping the band structure for
/// downstream audits and solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepotEmbedding {
    pub host: MetricGraph,
    pub td: TreeDecomposition,
    pub aug: Augmentation,
    /// Parameters refreshed for the augmented graph.
    pub params: ScaleParams,
    /// `bands[k]` is the hub net at doubling scale `2^k`, sorted.
    pub bands: Vec<Vec<usize>>,
    /// Window width: each town sees `band_window + 1` consecutive bands.
    pub band_window: usize,
    /// Top doubling scale: every vertex is within `2^k_max` of the depots.
    pub k_max: usize,
    pub depots: Vec<usize>,
    /// `(town index, band level)` for each top-level town.
    pub town_levels: Vec<(usize, usize)>,
    pub tree: TownTree,
    /// Hub ground set the bands were thinned from (root core hubs plus
    /// depots).
    pub ground: Vec<usize>,
    /// Distance from each augmented vertex to the depot set.
    pub depot_distance: Vec<f64>,
}

fn exp2(k: usize) -> f64 {
    2.0_f64.powi(k as i32)
}

/// Thins the hub ground set into one net per doubling scale.
///
/// Built from the coarsest scale down: band `k` is an `eps * 2^k`-net of
/// the ground hubs within distance `2^k` of the depots, with the members
/// of band `k+1` that fall inside that ball forced in. Forcing downward
/// gives the nesting the audit demands (a coarse hub near the depots
/// reappears at every finer scale that still reaches it), while each band
/// stays a packing at its own radius, so band sizes do not grow with the
/// number of scales.
fn build_bands(
    g: &MetricGraph,
    ground: &[usize],
    ds: &[f64],
    depots: &[usize],
    k_max: usize,
    window: usize,
    epsilon: f64,
) -> Vec<Vec<usize>> {
    let top = k_max + window;
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); top + 1];
    for k in (0..=top).rev() {
        let scale = exp2(k);
        let ball: Vec<usize> =
            ground.iter().copied().filter(|&h| approx_le(ds[h], scale)).collect();
        let mut forced: Vec<usize> = depots.to_vec();
        if k < top {
            forced.extend(bands[k + 1].iter().copied().filter(|&h| approx_le(ds[h], scale)));
        }
        forced.sort_unstable();
        forced.dedup();
        let net = build_net(g, &ball, epsilon * scale, &forced);
        bands[k] = net.selected;
    }
    bands
}

use crate::net::build_net;

/// Embeds a scaled graph around a depot set.
///
/// The graph is augmented with pendant leaves first; the returned host
/// and decomposition live on the augmented vertex set, with the original
/// vertices keeping their ids.
pub fn embed_depot(
    g: &MetricGraph,
    depots: &[usize],
    eta_hint: usize,
    params: &ScaleParams,
) -> Result<DepotEmbedding, EmbedError> {
    let aug =
        augment_depots(g, depots, eta_hint, params).map_err(|e| EmbedError::Setup(e.to_string()))?;
    let params = params.refreshed_for(&aug.graph);
    let ladder = build_ladder(&aug.graph, &params);
    let mut tree = build_towns(&aug.graph, &ladder, &params)
        .map_err(|e| EmbedError::Setup(e.to_string()))?;
    build_core_hubs(&mut tree, &ladder);

    let n = aug.graph.vertex_count();
    let depots = aug.depots.clone();
    let ds: Vec<f64> = (0..n).map(|v| aug.graph.distance_to_set(v, &depots)).collect();

    // Ground hubs: the root town's core hubs plus the depots themselves.
    let mut ground = tree.towns[tree.root].core_hubs.clone();
    ground.extend_from_slice(&depots);
    ground.sort_unstable();
    ground.dedup();

    // Top doubling scale and band window, both by exact search.
    let max_ds = ds.iter().cloned().fold(0.0_f64, f64::max);
    let mut k_max = 0;
    while !approx_ge(exp2(k_max), max_ds) {
        k_max += 1;
    }
    let mut window = 0;
    while !approx_ge(params.epsilon * exp2(window), 1.0) {
        window += 1;
    }

    let bands = build_bands(&aug.graph, &ground, &ds, &depots, k_max, window, params.epsilon);

    // Chain bags: bag k holds the bands visible from scale k.
    let mut sketch = HostSketch::default();
    for k in 0..=k_max {
        let lo = k.saturating_sub(1);
        let hi = (k + window).min(k_max + window);
        let mut contents: Vec<usize> = Vec::new();
        for band in &bands[lo..=hi] {
            contents.extend_from_slice(band);
        }
        contents.sort_unstable();
        contents.dedup();
        let parent = if k == k_max { None } else { Some(k + 1) };
        // Parents are patched below; push placeholders in chain order.
        let id = sketch.push_bag(contents, parent);
        debug_assert_eq!(id, k);
    }

    // Every top-level town gets band edges into its window and a flattened
    // piece hanging off the matching chain bag.
    let top_towns = if tree.towns[tree.root].is_singleton() {
        Vec::new()
    } else {
        tree.children[tree.root].clone()
    };
    let mut town_levels = Vec::with_capacity(top_towns.len());
    for &t in &top_towns {
        let town = &tree.towns[t];
        let far = town.vertices.iter().map(|&v| ds[v]).fold(0.0_f64, f64::max);
        let mut level = 0;
        while !approx_ge(exp2(level), far) {
            level += 1;
        }
        town_levels.push((t, level));
        for &v in &town.vertices {
            for band in &bands[level..=(level + window)] {
                for &h in band {
                    if h != v {
                        sketch.edge(v, h, aug.graph.distance(v, h));
                    }
                }
            }
        }
        let inherited = sketch.bags[level].clone();
        embed_town_subtree(
            &aug.graph,
            &tree,
            t,
            params.epsilon,
            town.diameter,
            &inherited,
            &mut sketch,
            Some(level),
        )?;
    }

    let host = assemble_host(n, &sketch)?;
    let td = assemble_decomposition(&sketch, k_max, &host)?;
    Ok(DepotEmbedding {
        host,
        td,
        aug,
        params,
        bands,
        band_window: window,
        k_max,
        depots,
        town_levels,
        tree,
        ground,
        depot_distance: ds,
    })
}

/// All-pairs distortion audit over the original (non-pendant) vertices
/// for a single-depot embedding: the host may overshoot by at most
/// `32 * eps * (d(s,u) + d(s,v))`.
pub fn audit_single_depot(emb: &DepotEmbedding) -> DistortionReport {
    let vertices: Vec<usize> = emb.aug.original_vertices().collect();
    let slack = emb.params.distortion_constant * emb.params.epsilon;
    let ds = &emb.depot_distance;
    audit_pairs(&emb.aug.graph, &emb.host, &vertices, |u, v| slack * (ds[u] + ds[v]))
}

/// All-pairs distortion audit over the original vertices for a
/// multi-depot embedding: the host may overshoot by at most
/// `8 * eps * d_G(u,v) + 32 * eps * min(d(S,u), d(S,v))`.
pub fn audit_multi_depot(emb: &DepotEmbedding, mult_constant: f64) -> DistortionReport {
    let vertices: Vec<usize> = emb.aug.original_vertices().collect();
    let slack = emb.params.distortion_constant * emb.params.epsilon;
    let mult = mult_constant * emb.params.epsilon;
    let g = &emb.aug.graph;
    let ds = &emb.depot_distance;
    audit_pairs(g, &emb.host, &vertices, |u, v| {
        mult * g.distance(u, v) + slack * ds[u].min(ds[v])
    })
}

/// Structural audit of the band ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandAudit {
    /// Band `k+1` members inside the scale-`k` ball already sit in band
    /// `k`.
    pub nesting_ok: bool,
    /// Every ground hub within `2^k` of the depots has a band-`k` member
    /// within `eps * 2^(k+1)`.
    pub covering_ok: bool,
    /// Each hub's band membership forms one contiguous interval.
    pub contiguity_ok: bool,
}

impl BandAudit {
    pub fn clean(&self) -> bool {
        self.nesting_ok && self.covering_ok && self.contiguity_ok
    }
}

pub fn audit_bands(emb: &DepotEmbedding) -> BandAudit {
    let g = &emb.aug.graph;
    let ds = &emb.depot_distance;
    let eps = emb.params.epsilon;

    let mut nesting_ok = true;
    for k in 0..emb.bands.len().saturating_sub(1) {
        let ball = exp2(k);
        for &v in &emb.bands[k + 1] {
            if approx_le(ds[v], ball) && emb.bands[k].binary_search(&v).is_err() {
                nesting_ok = false;
            }
        }
    }

    let mut covering_ok = true;
    for k in 0..=emb.k_max.min(emb.bands.len().saturating_sub(1)) {
        let ball = exp2(k);
        let reach = eps * exp2(k + 1);
        for &h in &emb.ground {
            if approx_le(ds[h], ball) {
                let near = emb.bands[k].iter().any(|&b| approx_le(g.distance(h, b), reach));
                if !near {
                    covering_ok = false;
                }
            }
        }
    }

    let mut contiguity_ok = true;
    for v in 0..g.vertex_count() {
        let member: Vec<bool> =
            emb.bands.iter().map(|band| band.binary_search(&v).is_ok()).collect();
        let first = member.iter().position(|&m| m);
        let last = member.iter().rposition(|&m| m);
        if let (Some(a), Some(b)) = (first, last) {
            if member[a..=b].iter().any(|&m| !m) {
                contiguity_ok = false;
            }
        }
    }

    BandAudit { nesting_ok, covering_ok, contiguity_ok }
}
