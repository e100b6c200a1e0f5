//! End-to-end approximation pipelines.
//!
//! Each pipeline rescales the guest graph, embeds it into a low-treewidth
//! host around a depot or seed set, solves the problem exactly on the
//! host with the decomposition solvers, and lifts the answer back to the
//! guest. The embedding accuracy is chosen so that the lifted answer is
//! within `1 + eps_hat` of the guest optimum; the lift itself only ever
//! re-prices a concrete solution on the guest metric, so the reported
//! values are honest regardless of the embedding.

use thiserror::Error;

use crate::cmp::approx_lt;
use crate::embed::depot::{embed_depot, DepotEmbedding};
use crate::embed::EmbedError;
use crate::graph::{Edge, GraphError, MetricGraph};
use crate::nice::make_nice;
use crate::scale::{canonical_scale, ScaleError, DEFAULT_DISTORTION_CONSTANT};
use crate::solver::centers::CentersError;
use crate::solver::{solve_cvr, solve_cvr_penalties, solve_kcenter_td, solve_kmedian_td, SolveError};
use crate::tree_decomp::TreeDecomposition;
use crate::vrp::{check_solution, RoutingInstance, RoutingSolution, Tour, VrpError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("accuracy must be positive, got {0}")]
    BadAccuracy(f64),
    #[error("{0}")]
    BadInput(String),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Centers(#[from] CentersError),
    #[error(transparent)]
    Instance(#[from] VrpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("lifted solution failed validation: {0}")]
    Lift(String),
}

// ---------------------------------------------------------------------
// Lower bounds.

/// Radial lower bound on the optimal routing cost. With one depot every
/// unit of demand at distance d costs at least 2d/Q of tour length, so
/// `(2/Q) * sum d(c, s)` is a floor; with several depots only one leg is
/// forced and `(1/Q) * sum d(c, S)` is used.
pub fn lower_bound_cvr(inst: &RoutingInstance) -> f64 {
    let q = inst.capacity as f64;
    let total: f64 = inst
        .clients()
        .iter()
        .map(|&c| inst.graph.distance_to_set(c, &inst.depots))
        .sum();
    if inst.depots.len() == 1 {
        2.0 * total / q
    } else {
        total / q
    }
}

// ---------------------------------------------------------------------
// Capacitated routing.

/// A lifted routing answer: the solution re-priced on the guest graph,
/// the radial lower bound, and the embedding it ran through.
pub struct CvrPipeline {
    pub solution: RoutingSolution,
    pub lower_bound: f64,
    /// Width of the host decomposition the exact solver saw.
    pub host_width: usize,
    pub embedding: DepotEmbedding,
}

impl CvrPipeline {
    /// Certified approximation factor: objective over the radial bound.
    pub fn ratio_to_lower_bound(&self) -> f64 {
        if self.lower_bound > 0.0 {
            self.solution.objective() / self.lower_bound
        } else {
            f64::INFINITY
        }
    }
}

/// Embedding accuracy for the routing pipelines.
///
/// The single-depot host overshoots a leg (u, v) by at most
/// `eps' * (d(s,u) + d(s,v))` when built at accuracy `eps'`. Realizing
/// the guest optimum on the host therefore costs at most an extra
/// `eps' * 2 * sum_clients d(c, s) <= eps' * Q * lower_bound`, so
/// `eps' = eps_hat / Q` keeps the lifted answer within `1 + eps_hat`.
/// With several depots the overshoot is `(eps'/4) d(u,v) + eps' *
/// min(d(S,u), d(S,v))`, and the weaker multi-depot bound forces
/// `eps' = 4 eps_hat / (8 Q + 1)`.
fn routing_accuracy(eps_hat: f64, capacity: u32, multi: bool) -> f64 {
    let q = capacity as f64;
    if multi {
        4.0 * eps_hat / (8.0 * q + 1.0)
    } else {
        eps_hat / q
    }
}

/// Approximate capacitated routing within `1 + eps_hat` of optimal:
/// embed, solve exactly on the host, lift.
pub fn ptas_cvr(
    inst: &RoutingInstance,
    eps_hat: f64,
    c: f64,
    eta_hint: usize,
) -> Result<CvrPipeline, PipelineError> {
    run_cvr(inst, eps_hat, c, eta_hint, false)
}

/// Prize-collecting variant: skipped clients pay their penalty instead.
pub fn ptas_cvr_penalties(
    inst: &RoutingInstance,
    eps_hat: f64,
    c: f64,
    eta_hint: usize,
) -> Result<CvrPipeline, PipelineError> {
    if inst.penalties.is_none() {
        return Err(PipelineError::Solve(SolveError::MissingPenalties));
    }
    run_cvr(inst, eps_hat, c, eta_hint, true)
}

fn run_cvr(
    inst: &RoutingInstance,
    eps_hat: f64,
    c: f64,
    eta_hint: usize,
    allow_skip: bool,
) -> Result<CvrPipeline, PipelineError> {
    if !eps_hat.is_finite() || eps_hat <= 0.0 {
        return Err(PipelineError::BadAccuracy(eps_hat));
    }
    inst.validate()?;

    let (scaled, params) = canonical_scale(&inst.graph, c)?;
    let eps_embed = routing_accuracy(eps_hat, inst.capacity, inst.depots.len() > 1);
    let params = params.with_accuracy(eps_embed, DEFAULT_DISTORTION_CONSTANT);
    let emb = embed_depot(&scaled, &inst.depots, eta_hint, &params)?;

    // The host instance: same demands, zero on pendants; penalties move
    // to scaled units so they trade against scaled movement correctly.
    let host_n = emb.host.vertex_count();
    let mut demands = inst.demands.clone();
    demands.resize(host_n, 0);
    let mut host_inst =
        RoutingInstance::new(emb.host.clone(), emb.depots.clone(), inst.capacity, demands)?;
    if let Some(p) = &inst.penalties {
        let mut scaled_p: Vec<f64> = p.iter().map(|x| x * emb.params.scale_factor).collect();
        scaled_p.resize(host_n, 0.0);
        host_inst = host_inst.with_penalties(scaled_p)?;
    }

    let nice = make_nice(&emb.td, &emb.depots);
    let host_sol = if allow_skip {
        solve_cvr_penalties(&host_inst, &nice)?
    } else {
        solve_cvr(&host_inst, &nice)?
    };

    // Lift: drop pendant pass-throughs from each tour and re-price the
    // remaining stops on the guest metric. Served clients are always
    // original vertices, so the solution structure is unchanged.
    let original_n = emb.aug.original_n;
    let mut tours = Vec::new();
    for t in &host_sol.tours {
        if t.served.is_empty() {
            continue;
        }
        let mut stops: Vec<usize> = t.stops.iter().copied().filter(|&v| v < original_n).collect();
        stops.dedup();
        tours.push(Tour { stops, served: t.served.clone() });
    }
    let cost: f64 = tours.iter().map(|t| t.cost(&inst.graph)).sum();
    let penalty_paid: f64 = match &inst.penalties {
        Some(p) => host_sol.skipped.iter().map(|&v| p[v]).sum(),
        None => 0.0,
    };
    let solution =
        RoutingSolution { tours, cost, skipped: host_sol.skipped.clone(), penalty_paid };
    check_solution(inst, &solution).map_err(PipelineError::Lift)?;

    Ok(CvrPipeline {
        solution,
        lower_bound: if allow_skip { 0.0 } else { lower_bound_cvr(inst) },
        host_width: nice.width(),
        embedding: emb,
    })
}

// ---------------------------------------------------------------------
// Center placement.

/// A lifted center answer: chosen centers as guest vertices and the
/// objective re-priced on the guest metric.
pub struct CentersPipeline {
    pub centers: Vec<usize>,
    pub value: f64,
    /// Seed set the embedding was built around.
    pub seed: Vec<usize>,
    pub host_width: usize,
}

/// Farthest-point seeding: start at the smallest candidate, repeatedly
/// add the candidate farthest from the chosen set (ties to the smaller
/// id). When every coverable vertex is a candidate the result is a
/// classical 2-approximation for the k-center radius.
pub fn gonzalez_2approx(
    g: &MetricGraph,
    k: usize,
    candidates: &[bool],
) -> Result<Vec<usize>, PipelineError> {
    let cands: Vec<usize> = (0..g.vertex_count()).filter(|&v| candidates[v]).collect();
    if cands.is_empty() {
        return Err(PipelineError::BadInput("no placement candidates".into()));
    }
    if k == 0 {
        return Err(PipelineError::BadInput("at least one center is required".into()));
    }
    let mut chosen = vec![cands[0]];
    while chosen.len() < k.min(cands.len()) {
        let mut far = cands[0];
        let mut far_d = -1.0;
        for &v in &cands {
            if chosen.contains(&v) {
                continue;
            }
            let d = g.distance_to_set(v, &chosen);
            if d > far_d {
                far = v;
                far_d = d;
            }
        }
        chosen.push(far);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Worst coverable-to-center distance on the guest metric.
pub fn coverage_radius(g: &MetricGraph, centers: &[usize], coverable: &[bool]) -> f64 {
    (0..g.vertex_count())
        .filter(|&v| coverable[v])
        .map(|v| g.distance_to_set(v, centers))
        .fold(0.0, f64::max)
}

/// Total weighted distance to the nearest center on the guest metric.
pub fn median_cost(g: &MetricGraph, centers: &[usize], weights: &[f64]) -> f64 {
    (0..g.vertex_count())
        .filter(|&v| weights[v] > 0.0)
        .map(|v| weights[v] * g.distance_to_set(v, centers))
        .sum()
}

/// Improves a center set by single swaps until no swap lowers the
/// weighted cost. A local optimum of this neighborhood is a constant
/// factor from the best k-median value, which is all the embedding
/// accuracy analysis needs from the seed.
fn single_swap_local_opt(
    g: &MetricGraph,
    mut centers: Vec<usize>,
    weights: &[f64],
    candidates: &[bool],
) -> Vec<usize> {
    let cands: Vec<usize> = (0..g.vertex_count()).filter(|&v| candidates[v]).collect();
    let mut cur = median_cost(g, &centers, weights);
    loop {
        let mut improved = false;
        'swap: for i in 0..centers.len() {
            for &cand in &cands {
                if centers.contains(&cand) {
                    continue;
                }
                let old = centers[i];
                centers[i] = cand;
                let next = median_cost(g, &centers, weights);
                if approx_lt(next, cur) {
                    cur = next;
                    improved = true;
                    break 'swap;
                }
                centers[i] = old;
            }
        }
        if !improved {
            break;
        }
    }
    centers.sort_unstable();
    centers
}

/// Removes the pendant vertices from a host and its decomposition.
/// Pendants occupy the ids at and above `original_n`, so the cut is a
/// truncation: original ids, bag parents, and the root are unchanged.
fn strip_pendants(
    host: &MetricGraph,
    td: &TreeDecomposition,
    original_n: usize,
) -> Result<(MetricGraph, TreeDecomposition), PipelineError> {
    let edges: Vec<Edge> = host
        .edges()
        .iter()
        .filter(|e| e.u < original_n && e.v < original_n)
        .copied()
        .collect();
    let graph = MetricGraph::new(original_n, edges, host.role())?;
    let bags: Vec<Vec<usize>> = td
        .bags
        .iter()
        .map(|b| b.iter().copied().filter(|&v| v < original_n).collect())
        .collect();
    let td = TreeDecomposition::new(bags, td.parent.clone(), td.root);
    Ok((graph, td))
}

/// Shared tail of the center pipelines: embed around the seeds, strip
/// the pendants (they are neither coverable nor candidates), solve
/// exactly on the host, and re-price the chosen centers on the guest.
fn centers_host(
    g: &MetricGraph,
    seeds: &[usize],
    eps_embed: f64,
    c: f64,
    eta_hint: usize,
) -> Result<(MetricGraph, TreeDecomposition, f64), PipelineError> {
    let (scaled, params) = canonical_scale(g, c)?;
    let params = params.with_accuracy(eps_embed, DEFAULT_DISTORTION_CONSTANT);
    let emb = embed_depot(&scaled, seeds, eta_hint, &params)?;
    let (host, td) = strip_pendants(&emb.host, &emb.td, emb.aug.original_n)?;
    Ok((host, td, emb.params.scale_factor))
}

/// Embedding accuracy for the k-center pipeline: eps_hat / 3.
///
/// Seeding with the 2-approximation puts every coverable vertex within
/// `2 r*` of the seeds, so a host leg from a vertex to an optimal center
/// overshoots by at most `(eps'/4) r* + 2 eps' r*` in the multi-seed
/// corridor (and at most `3 eps' r*` in the single-seed one); either
/// way the host radius stays below `(1 + eps_hat) r*` at `eps' =
/// eps_hat / 3`.
fn kcenter_accuracy(eps_hat: f64) -> f64 {
    eps_hat / 3.0
}

/// Embedding accuracy for the k-median pipeline.
///
/// The seed's own cost bounds the depot-distance sums in the corridor.
/// A single-swap local optimum costs at most 5x the best k-median
/// value, giving overshoot `(eps'/4 + 5 eps') OPT` with several seeds
/// and `(5 + 6) eps' OPT` through the additive single-seed corridor, so
/// the accuracy divides by 6 (several seeds) or 11 (one seed).
fn kmedian_accuracy(eps_hat: f64, k: usize) -> f64 {
    if k == 1 {
        eps_hat / 11.0
    } else {
        eps_hat / 6.0
    }
}

/// Approximate k-center within `1 + eps_hat`: seed with farthest-point
/// traversal, embed around the seeds, solve exactly, re-price.
pub fn fpa_kcenter(
    g: &MetricGraph,
    k: usize,
    coverable: &[bool],
    candidates: &[bool],
    eps_hat: f64,
    c: f64,
    eta_hint: usize,
) -> Result<CentersPipeline, PipelineError> {
    if !eps_hat.is_finite() || eps_hat <= 0.0 {
        return Err(PipelineError::BadAccuracy(eps_hat));
    }
    let seeds = gonzalez_2approx(g, k, candidates)?;
    let (host, td, _) = centers_host(g, &seeds, kcenter_accuracy(eps_hat), c, eta_hint)?;
    let sol = solve_kcenter_td(&host, &td, k, coverable, candidates)?;
    let value = coverage_radius(g, &sol.centers, coverable);
    Ok(CentersPipeline { centers: sol.centers, value, seed: seeds, host_width: td.width() })
}

/// Approximate k-median within `1 + eps_hat`: seed with a single-swap
/// local optimum, embed around the seeds, solve exactly, re-price.
pub fn fpa_kmedian(
    g: &MetricGraph,
    k: usize,
    weights: &[f64],
    candidates: &[bool],
    eps_hat: f64,
    c: f64,
    eta_hint: usize,
) -> Result<CentersPipeline, PipelineError> {
    if !eps_hat.is_finite() || eps_hat <= 0.0 {
        return Err(PipelineError::BadAccuracy(eps_hat));
    }
    let start = gonzalez_2approx(g, k, candidates)?;
    let seeds = single_swap_local_opt(g, start, weights, candidates);
    let (host, td, _) = centers_host(g, &seeds, kmedian_accuracy(eps_hat, k), c, eta_hint)?;
    let sol = solve_kmedian_td(&host, &td, k, weights, candidates)?;
    let value = median_cost(g, &sol.centers, weights);
    Ok(CentersPipeline { centers: sol.centers, value, seed: seeds, host_width: td.width() })
}
