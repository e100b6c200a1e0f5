//! Exact k-center and k-median by coverage bookkeeping over a nice
//! decomposition.
//!
//! Both programs track, per bag vertex, the true distance to the nearest
//! center opened so far; centers open when their vertex is forgotten.
//! A vertex forgotten before its center exists leaves an obligation
//! behind on a bag vertex its shortest path to that center must cross:
//! k-center keeps the tightest remaining slack, k-median keeps the
//! deferred weight and pays the crossing legs as it goes. Because a bag
//! separates what is forgotten from what is yet to come, the crossing
//! vertex always exists and the bookkeeping is exact on the metric; the
//! decomposition affects running time only.

use thiserror::Error;

use crate::cmp::approx_le;
use crate::graph::MetricGraph;
use crate::nice::{make_nice, NiceDecomposition, NiceNode};
use crate::tree_decomp::TreeDecomposition;

#[derive(Debug, Error)]
pub enum CentersError {
    #[error("at least one center is required")]
    ZeroK,
    #[error("no placement candidates")]
    NoCandidates,
    #[error("mask of length {0} does not match vertex count {1}")]
    BadMask(usize, usize),
    #[error("negative weight at vertex {0}")]
    NegativeWeight(usize),
    #[error("no feasible placement")]
    Infeasible,
}

/// Chosen centers with the objective value they achieve.
#[derive(Debug, Clone)]
pub struct CenterSolution {
    pub centers: Vec<usize>,
    pub value: f64,
}

const INF: f64 = f64::INFINITY;

/// Smallest radius r such that k candidate vertices cover every coverable
/// vertex within r, solved exactly over the decomposition.
pub fn solve_kcenter_td(
    g: &MetricGraph,
    td: &TreeDecomposition,
    k: usize,
    coverable: &[bool],
    candidates: &[bool],
) -> Result<CenterSolution, CentersError> {
    let n = g.vertex_count();
    if k == 0 {
        return Err(CentersError::ZeroK);
    }
    if coverable.len() != n {
        return Err(CentersError::BadMask(coverable.len(), n));
    }
    if candidates.len() != n {
        return Err(CentersError::BadMask(candidates.len(), n));
    }
    if !candidates.iter().any(|&c| c) {
        return Err(CentersError::NoCandidates);
    }
    let nice = make_nice(td, &[]);

    // The optimal radius is one of the coverable-to-candidate distances.
    let mut radii: Vec<f64> = Vec::new();
    for u in (0..n).filter(|&u| coverable[u]) {
        for c in (0..n).filter(|&c| candidates[c]) {
            radii.push(g.distance(u, c));
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| crate::cmp::approx_eq(*a, *b));
    if radii.is_empty() {
        let first = (0..n).find(|&c| candidates[c]).expect("candidate exists");
        return Ok(CenterSolution { centers: vec![first], value: 0.0 });
    }

    let mut lo = 0usize;
    let mut hi = radii.len() - 1;
    if kcenter_feasible(g, &nice, k, coverable, candidates, radii[hi]).is_none() {
        return Err(CentersError::Infeasible);
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if kcenter_feasible(g, &nice, k, coverable, candidates, radii[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut centers = kcenter_feasible(g, &nice, k, coverable, candidates, radii[lo])
        .expect("feasible at the radius the search settled on");
    centers.sort_unstable();
    centers.dedup();
    let value = coverage_radius(g, coverable, &centers);
    Ok(CenterSolution { centers, value })
}

fn coverage_radius(g: &MetricGraph, coverable: &[bool], centers: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for u in (0..g.vertex_count()).filter(|&u| coverable[u]) {
        let near =
            centers.iter().map(|&c| g.distance(u, c)).fold(INF, f64::min);
        worst = worst.max(near);
    }
    if worst.is_finite() {
        worst
    } else {
        0.0
    }
}

/// Coverage state: distance to the nearest open center (infinite when
/// none is within the radius) and the tightest slack still owed to a
/// future center, per bag position.
#[derive(Debug, Clone)]
struct KcState {
    cov: Box<[f64]>,
    pending: Box<[f64]>,
    count: usize,
    opens: Vec<usize>,
}

fn kc_dominates(a: &KcState, b: &KcState) -> bool {
    a.count <= b.count
        && a.cov.iter().zip(b.cov.iter()).all(|(x, y)| x <= y)
        && a.pending.iter().zip(b.pending.iter()).all(|(x, y)| x >= y)
}

fn kc_push(states: &mut Vec<KcState>, st: KcState) {
    if states.iter().any(|s| kc_dominates(s, &st)) {
        return;
    }
    states.retain(|s| !kc_dominates(&st, s));
    states.push(st);
}

fn clamp_cov(c: f64, r: f64) -> f64 {
    if c.is_finite() && !approx_le(c, r) {
        INF
    } else {
        c
    }
}

/// Marks obligations already met by an open center.
fn kc_discharge(st: &mut KcState) {
    for i in 0..st.cov.len() {
        if st.pending[i].is_finite()
            && st.cov[i].is_finite()
            && approx_le(st.cov[i], st.pending[i])
        {
            st.pending[i] = INF;
        }
    }
}

fn kcenter_feasible(
    g: &MetricGraph,
    nice: &NiceDecomposition,
    k: usize,
    coverable: &[bool],
    candidates: &[bool],
    r: f64,
) -> Option<Vec<usize>> {
    let mut tables: Vec<Vec<KcState>> = Vec::with_capacity(nice.nodes.len());
    for (id, node) in nice.nodes.iter().enumerate() {
        let bag = &nice.bags[id];
        let mut out: Vec<KcState> = Vec::new();
        match node {
            NiceNode::Leaf => {
                out.push(KcState {
                    cov: Vec::new().into_boxed_slice(),
                    pending: Vec::new().into_boxed_slice(),
                    count: 0,
                    opens: Vec::new(),
                });
            }
            NiceNode::Introduce { child, v } => {
                let cbag = &nice.bags[*child];
                let pos = bag.binary_search(v).expect("introduced vertex in bag");
                for st in &tables[*child] {
                    let fresh = cbag
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| g.distance(*v, w) + st.cov[i])
                        .fold(INF, f64::min);
                    let mut cov = st.cov.to_vec();
                    let mut pending = st.pending.to_vec();
                    cov.insert(pos, clamp_cov(fresh, r));
                    pending.insert(pos, INF);
                    kc_push(
                        &mut out,
                        KcState {
                            cov: cov.into_boxed_slice(),
                            pending: pending.into_boxed_slice(),
                            count: st.count,
                            opens: st.opens.clone(),
                        },
                    );
                }
            }
            NiceNode::Forget { child, v } => {
                let cbag = &nice.bags[*child];
                let pos = cbag.binary_search(v).expect("forgotten vertex in child bag");
                for st in &tables[*child] {
                    // Open a center here.
                    if candidates[*v] && st.count < k {
                        let mut cov = Vec::with_capacity(bag.len());
                        let mut pending = Vec::with_capacity(bag.len());
                        for (i, &w) in cbag.iter().enumerate() {
                            if i == pos {
                                continue;
                            }
                            cov.push(clamp_cov(st.cov[i].min(g.distance(w, *v)), r));
                            pending.push(st.pending[i]);
                        }
                        let mut opens = st.opens.clone();
                        opens.push(*v);
                        let mut next = KcState {
                            cov: cov.into_boxed_slice(),
                            pending: pending.into_boxed_slice(),
                            count: st.count + 1,
                            opens,
                        };
                        kc_discharge(&mut next);
                        kc_push(&mut out, next);
                    }
                    // Leave without opening: the vertex's own coverage and
                    // any slack parked on it collapse into one requirement,
                    // met now or owed to a single future center.
                    let mut need = st.pending[pos];
                    if coverable[*v] {
                        need = need.min(r);
                    }
                    let covx = st.cov[pos];
                    let met = need.is_infinite()
                        || (covx.is_finite() && approx_le(covx, need));
                    let strip = |st: &KcState| {
                        let cov: Vec<f64> = st
                            .cov
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != pos)
                            .map(|(_, &x)| x)
                            .collect();
                        let pending: Vec<f64> = st
                            .pending
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != pos)
                            .map(|(_, &x)| x)
                            .collect();
                        (cov, pending)
                    };
                    if met {
                        let (cov, pending) = strip(st);
                        kc_push(
                            &mut out,
                            KcState {
                                cov: cov.into_boxed_slice(),
                                pending: pending.into_boxed_slice(),
                                count: st.count,
                                opens: st.opens.clone(),
                            },
                        );
                    } else {
                        for (wi, &w) in bag.iter().enumerate() {
                            let leg = g.distance(*v, w);
                            if !approx_le(leg, need) {
                                continue;
                            }
                            let (cov, mut pending) = strip(st);
                            let slack = (need - leg).max(0.0);
                            pending[wi] = pending[wi].min(slack);
                            kc_push(
                                &mut out,
                                KcState {
                                    cov: cov.into_boxed_slice(),
                                    pending: pending.into_boxed_slice(),
                                    count: st.count,
                                    opens: st.opens.clone(),
                                },
                            );
                        }
                    }
                }
            }
            NiceNode::Join { left, right } => {
                for a in &tables[*left] {
                    for b in &tables[*right] {
                        if a.count + b.count > k {
                            continue;
                        }
                        let cov: Vec<f64> = a
                            .cov
                            .iter()
                            .zip(b.cov.iter())
                            .map(|(x, y)| x.min(*y))
                            .collect();
                        let pending: Vec<f64> = a
                            .pending
                            .iter()
                            .zip(b.pending.iter())
                            .map(|(x, y)| x.min(*y))
                            .collect();
                        let mut opens = a.opens.clone();
                        opens.extend_from_slice(&b.opens);
                        let mut next = KcState {
                            cov: cov.into_boxed_slice(),
                            pending: pending.into_boxed_slice(),
                            count: a.count + b.count,
                            opens,
                        };
                        kc_discharge(&mut next);
                        kc_push(&mut out, next);
                    }
                }
            }
        }
        tables.push(out);
    }
    tables[nice.root]
        .iter()
        .min_by_key(|s| s.count)
        .map(|s| s.opens.clone())
}

/// Minimum total weighted distance to k candidate centers, solved
/// exactly over the decomposition.
pub fn solve_kmedian_td(
    g: &MetricGraph,
    td: &TreeDecomposition,
    k: usize,
    weights: &[f64],
    candidates: &[bool],
) -> Result<CenterSolution, CentersError> {
    let n = g.vertex_count();
    if k == 0 {
        return Err(CentersError::ZeroK);
    }
    if weights.len() != n {
        return Err(CentersError::BadMask(weights.len(), n));
    }
    if candidates.len() != n {
        return Err(CentersError::BadMask(candidates.len(), n));
    }
    if let Some(v) = (0..n).find(|&v| weights[v] < 0.0) {
        return Err(CentersError::NegativeWeight(v));
    }
    if !candidates.iter().any(|&c| c) {
        return Err(CentersError::NoCandidates);
    }
    let nice = make_nice(td, &[]);

    let mut tables: Vec<Vec<KmState>> = Vec::with_capacity(nice.nodes.len());
    for (id, node) in nice.nodes.iter().enumerate() {
        let bag = &nice.bags[id];
        let mut out: Vec<KmState> = Vec::new();
        match node {
            NiceNode::Leaf => {
                out.push(KmState {
                    cov: Vec::new().into_boxed_slice(),
                    debt: Vec::new().into_boxed_slice(),
                    count: 0,
                    cost: 0.0,
                    opens: Vec::new(),
                });
            }
            NiceNode::Introduce { child, v } => {
                let cbag = &nice.bags[*child];
                let pos = bag.binary_search(v).expect("introduced vertex in bag");
                for st in &tables[*child] {
                    let fresh = cbag
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| g.distance(*v, w) + st.cov[i])
                        .fold(INF, f64::min);
                    let mut cov = st.cov.to_vec();
                    let mut debt = st.debt.to_vec();
                    cov.insert(pos, fresh);
                    debt.insert(pos, 0.0);
                    km_push(
                        &mut out,
                        KmState {
                            cov: cov.into_boxed_slice(),
                            debt: debt.into_boxed_slice(),
                            count: st.count,
                            cost: st.cost,
                            opens: st.opens.clone(),
                        },
                    );
                }
            }
            NiceNode::Forget { child, v } => {
                let cbag = &nice.bags[*child];
                let pos = cbag.binary_search(v).expect("forgotten vertex in child bag");
                for st in &tables[*child] {
                    let load = weights[*v] + st.debt[pos];
                    let strip = |st: &KmState| {
                        let cov: Vec<f64> = st
                            .cov
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != pos)
                            .map(|(_, &x)| x)
                            .collect();
                        let debt: Vec<f64> = st
                            .debt
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != pos)
                            .map(|(_, &x)| x)
                            .collect();
                        (cov, debt)
                    };
                    // Open a center here: the vertex and everything parked
                    // on it is served on the spot.
                    if candidates[*v] && st.count < k {
                        let mut cov = Vec::with_capacity(bag.len());
                        let mut debt = Vec::with_capacity(bag.len());
                        for (i, &w) in cbag.iter().enumerate() {
                            if i == pos {
                                continue;
                            }
                            cov.push(st.cov[i].min(g.distance(w, *v)));
                            debt.push(st.debt[i]);
                        }
                        let mut opens = st.opens.clone();
                        opens.push(*v);
                        km_push(
                            &mut out,
                            KmState {
                                cov: cov.into_boxed_slice(),
                                debt: debt.into_boxed_slice(),
                                count: st.count + 1,
                                cost: st.cost,
                                opens,
                            },
                        );
                    }
                    // Pay the whole load to the nearest open center.
                    if load == 0.0 || st.cov[pos].is_finite() {
                        let (cov, debt) = strip(st);
                        let add = if load > 0.0 { load * st.cov[pos] } else { 0.0 };
                        km_push(
                            &mut out,
                            KmState {
                                cov: cov.into_boxed_slice(),
                                debt: debt.into_boxed_slice(),
                                count: st.count,
                                cost: st.cost + add,
                                opens: st.opens.clone(),
                            },
                        );
                    }
                    // Or walk it to a bag vertex a future center's shortest
                    // path must cross.
                    if load > 0.0 {
                        for (wi, &w) in bag.iter().enumerate() {
                            let (cov, mut debt) = strip(st);
                            debt[wi] += load;
                            km_push(
                                &mut out,
                                KmState {
                                    cov: cov.into_boxed_slice(),
                                    debt: debt.into_boxed_slice(),
                                    count: st.count,
                                    cost: st.cost + load * g.distance(*v, w),
                                    opens: st.opens.clone(),
                                },
                            );
                        }
                    }
                }
            }
            NiceNode::Join { left, right } => {
                for a in &tables[*left] {
                    for b in &tables[*right] {
                        if a.count + b.count > k {
                            continue;
                        }
                        let cov: Vec<f64> = a
                            .cov
                            .iter()
                            .zip(b.cov.iter())
                            .map(|(x, y)| x.min(*y))
                            .collect();
                        let debt: Vec<f64> = a
                            .debt
                            .iter()
                            .zip(b.debt.iter())
                            .map(|(x, y)| x + y)
                            .collect();
                        let mut opens = a.opens.clone();
                        opens.extend_from_slice(&b.opens);
                        km_push(
                            &mut out,
                            KmState {
                                cov: cov.into_boxed_slice(),
                                debt: debt.into_boxed_slice(),
                                count: a.count + b.count,
                                cost: a.cost + b.cost,
                                opens,
                            },
                        );
                    }
                }
            }
        }
        tables.push(out);
    }

    let best = tables[nice.root]
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .ok_or(CentersError::Infeasible)?;
    let mut centers = best.opens.clone();
    centers.sort_unstable();
    centers.dedup();
    let value = assignment_cost(g, weights, &centers);
    debug_assert!(
        crate::cmp::approx_eq(value, best.cost) || value <= best.cost,
        "reconstructed cost {value} exceeds table cost {}",
        best.cost
    );
    Ok(CenterSolution { centers, value })
}

fn assignment_cost(g: &MetricGraph, weights: &[f64], centers: &[usize]) -> f64 {
    let mut total = 0.0;
    for (u, &wu) in weights.iter().enumerate() {
        if wu == 0.0 {
            continue;
        }
        let near = centers.iter().map(|&c| g.distance(u, c)).fold(INF, f64::min);
        total += wu * near;
    }
    total
}

/// Service state: distance to the nearest open center and the weight
/// deferred onto each bag position, with cost paid so far.
#[derive(Debug, Clone)]
struct KmState {
    cov: Box<[f64]>,
    debt: Box<[f64]>,
    count: usize,
    cost: f64,
    opens: Vec<usize>,
}

fn km_dominates(a: &KmState, b: &KmState) -> bool {
    a.count <= b.count
        && a.cost <= b.cost
        && a.cov.iter().zip(b.cov.iter()).all(|(x, y)| x <= y)
        && a.debt.iter().zip(b.debt.iter()).all(|(x, y)| x <= y)
}

fn km_push(states: &mut Vec<KmState>, st: KmState) {
    if states.iter().any(|s| km_dominates(s, &st)) {
        return;
    }
    states.retain(|s| !km_dominates(&st, s));
    states.push(st);
}
