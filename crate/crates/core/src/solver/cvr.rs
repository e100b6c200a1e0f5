//! Exact capacitated routing by flow bookkeeping over a nice
//! decomposition.
//!
//! A configuration at a bag counts, for each bag vertex `v` and each used
//! capacity `q`, the dangling tour-segment ends anchored at `v`: `I(v,q)`
//! entries (the tour reaches `v` having served `q` demand) and `O(v,q)`
//! exits (the tour leaves `v` having served `q`). Clients are committed
//! at their forget node — absorbed into a segment end anchored there, or
//! wrapped in a fresh out-and-back segment between two surviving bag
//! vertices — after which every remaining anchor at the forgotten vertex
//! either fuses with an opposite anchor at equal `q` (two segments meet
//! at the vertex and concatenate for free) or is pushed to a surviving
//! vertex, paying the real hop. Joins connect entries of one side to
//! exits of the other at equal `q`; depot forgets may additionally
//! terminate segments or hand them to a later depot. Because every
//! segment carries at least one unit of demand, an entry and an exit with
//! equal `q` can never belong to the same segment, so no disconnected
//! loops can form.
//!
//! Costs are exact for the metric of the instance graph; the
//! decomposition affects running time only. Solutions are reconstructed
//! by replaying the winning transitions and carrying the actual segment
//! paths.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::cmp::approx_eq;
use crate::graph::MetricGraph;
use crate::nice::{NiceDecomposition, NiceNode};
use crate::vrp::{RoutingInstance, RoutingSolution, Tour, VrpError};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] VrpError),
    #[error("penalties required for the skip-allowed solver")]
    MissingPenalties,
    #[error("capacity {0} too large for the packed state layout")]
    CapacityTooLarge(u32),
    #[error("depot {0} not pinned through bag {1}")]
    DepotNotPinned(usize, usize),
    #[error("node {0} holds {1} configurations, above the size guard {2:.3e}")]
    ResourceGuard(usize, usize, f64),
    #[error("no feasible routing reached the root")]
    Infeasible,
}

const INF: f64 = f64::INFINITY;

// Slot layout: one u8 per (bag position, direction, used capacity), entry
// slots before exit slots within a position.
fn cols(q_cap: u8) -> usize {
    2 * (q_cap as usize + 1)
}

fn slot(pos: usize, dir: usize, q: u8, q_cap: u8) -> usize {
    pos * cols(q_cap) + dir * (q_cap as usize + 1) + q as usize
}

fn insert_column(cfg: &[u8], pos: usize, q_cap: u8) -> Box<[u8]> {
    let c = cols(q_cap);
    let mut out = vec![0u8; cfg.len() + c];
    out[..pos * c].copy_from_slice(&cfg[..pos * c]);
    out[pos * c + c..].copy_from_slice(&cfg[pos * c..]);
    out.into_boxed_slice()
}

fn remove_column(cfg: &[u8], pos: usize, q_cap: u8) -> Box<[u8]> {
    let c = cols(q_cap);
    let mut out = vec![0u8; cfg.len() - c];
    out[..pos * c].copy_from_slice(&cfg[..pos * c]);
    out[pos * c..].copy_from_slice(&cfg[pos * c + c..]);
    out.into_boxed_slice()
}

/// How the forgotten client was committed.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Serve {
    None,
    /// Absorbed at an entry anchored here: `I(u,q) -> I(u,q-rho)`.
    Enter { q: u8 },
    /// Absorbed at an exit anchored here: `O(u,q) -> O(u,q+rho)`.
    Exit { q: u8 },
    /// Fresh segment between two surviving vertices.
    Detour { v1: usize, v2: usize, q: u8 },
    /// Left unserved against its penalty.
    Skip,
}

/// One resolution step for an anchor at the forgotten vertex.
#[derive(Debug, Clone, Copy)]
enum Act {
    MoveEntry { q: u8, to: usize },
    MoveExit { q: u8, to: usize },
    /// Fuse an exit and an entry with equal `q`: two segments meet at the
    /// forgotten vertex and concatenate through it at no cost.
    Pair { q: u8 },
    /// Depot only: a segment's entry is the tour start (`q = 0`).
    StartHere,
    /// Depot only: a segment's exit is the tour end.
    EndHere { q: u8 },
}

#[derive(Debug, Clone)]
enum Back {
    Leaf,
    Intro { child: Box<[u8]> },
    Forget { child: Box<[u8]>, serve: Serve, acts: Vec<Act> },
    /// `matches` connects an entry at `.0` to an exit at `.1` at used
    /// capacity `.2`.
    Join { left: Box<[u8]>, right: Box<[u8]>, matches: Vec<(usize, usize, u8)> },
}

#[derive(Debug, Clone)]
struct Entry {
    cost: f64,
    back: Back,
}

type Table = BTreeMap<Box<[u8]>, Entry>;

fn offer(table: &mut Table, cfg: Box<[u8]>, cost: f64, back: Back) {
    match table.entry(cfg) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(Entry { cost, back });
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            if cost < e.get().cost {
                e.insert(Entry { cost, back });
            }
        }
    }
}

/// Exact minimum-cost capacitated routing; every client must be served.
pub fn solve_cvr(
    inst: &RoutingInstance,
    nice: &NiceDecomposition,
) -> Result<RoutingSolution, SolveError> {
    solve_inner(inst, nice, false)
}

/// Prize-collecting variant: a client may be skipped for its penalty.
pub fn solve_cvr_penalties(
    inst: &RoutingInstance,
    nice: &NiceDecomposition,
) -> Result<RoutingSolution, SolveError> {
    if inst.penalties.is_none() {
        return Err(SolveError::MissingPenalties);
    }
    solve_inner(inst, nice, true)
}

fn solve_inner(
    inst: &RoutingInstance,
    nice: &NiceDecomposition,
    allow_skip: bool,
) -> Result<RoutingSolution, SolveError> {
    inst.validate()?;
    if inst.capacity > 64 {
        return Err(SolveError::CapacityTooLarge(inst.capacity));
    }
    let q_cap = inst.capacity as u8;
    let g = &inst.graph;

    // Depots must survive until the top dismantle: every non-depot forget
    // keeps all depots in scope, and depot forgets see only depots.
    for (id, node) in nice.nodes.iter().enumerate() {
        if let NiceNode::Forget { v, .. } = node {
            let pbag = &nice.bags[id];
            if inst.is_depot(*v) {
                if let Some(&x) = pbag.iter().find(|&&x| !inst.is_depot(x)) {
                    return Err(SolveError::DepotNotPinned(x, id));
                }
            } else if let Some(&s) = inst.depots.iter().find(|&&s| pbag.binary_search(&s).is_err())
            {
                return Err(SolveError::DepotNotPinned(s, id));
            }
        }
    }

    let n = g.vertex_count() as f64;
    let width = nice.width() as f64;
    let guard = (n + 1.0).powf(2.0 * (width + 1.0) * inst.capacity as f64);

    let mut tables: Vec<Table> = Vec::with_capacity(nice.nodes.len());
    for (id, node) in nice.nodes.iter().enumerate() {
        let bag = &nice.bags[id];
        let table = match node {
            NiceNode::Leaf => {
                let mut t = Table::new();
                t.insert(Vec::new().into_boxed_slice(), Entry { cost: 0.0, back: Back::Leaf });
                t
            }
            NiceNode::Introduce { child, v } => {
                let pos = bag.binary_search(v).expect("introduced vertex in bag");
                let mut t = Table::new();
                for (ccfg, ce) in &tables[*child] {
                    let cfg = insert_column(ccfg, pos, q_cap);
                    offer(&mut t, cfg, ce.cost, Back::Intro { child: ccfg.clone() });
                }
                t
            }
            NiceNode::Forget { child, v } => {
                forget_node(inst, nice, *child, *v, bag, q_cap, allow_skip, &tables[*child])
            }
            NiceNode::Join { left, right } => {
                join_node(g, bag, q_cap, &tables[*left], &tables[*right])
            }
        };
        if table.len() as f64 > guard {
            return Err(SolveError::ResourceGuard(id, table.len(), guard));
        }
        tables.push(table);
    }

    let root = &tables[nice.root];
    let empty: Box<[u8]> = Vec::new().into_boxed_slice();
    let best = root.get(&empty).ok_or(SolveError::Infeasible)?;
    let total = best.cost;

    // Replay the winning transitions, carrying real segment paths.
    let mut replay = Replay { inst, nice, tables: &tables, segs: Vec::new(), skipped: Vec::new() };
    replay.run(nice.root, &empty);
    let (tours, skipped) = replay.finish();

    let moved: f64 = tours.iter().map(|t| t.cost(g)).sum();
    let penalty: f64 = match &inst.penalties {
        Some(p) => skipped.iter().map(|&c| p[c]).sum(),
        None => 0.0,
    };
    debug_assert!(
        approx_eq(moved + penalty, total),
        "replayed cost {} differs from table cost {}",
        moved + penalty,
        total
    );
    Ok(RoutingSolution { tours, cost: moved, skipped, penalty_paid: penalty })
}

/// Commits the forgotten vertex and resolves its anchors.
#[allow(clippy::too_many_arguments)]
fn forget_node(
    inst: &RoutingInstance,
    nice: &NiceDecomposition,
    child: usize,
    u: usize,
    pbag: &[usize],
    q_cap: u8,
    allow_skip: bool,
    child_table: &Table,
) -> Table {
    let g = &inst.graph;
    let cbag = &nice.bags[child];
    let pu = cbag.binary_search(&u).expect("forgotten vertex in child bag");
    let rho = inst.demands[u] as u8;
    let is_depot = inst.is_depot(u);
    let mut out = Table::new();

    for (ccfg, ce) in child_table {
        // Phase one: if the vertex is a client, commit it.
        let mut staged: Vec<(Box<[u8]>, f64, Serve)> = Vec::new();
        if rho > 0 {
            for q in rho..=q_cap {
                if ccfg[slot(pu, 0, q, q_cap)] > 0 {
                    let mut c = ccfg.clone();
                    c[slot(pu, 0, q, q_cap)] -= 1;
                    c[slot(pu, 0, q - rho, q_cap)] += 1;
                    staged.push((c, ce.cost, Serve::Enter { q }));
                }
            }
            for q in 0..=(q_cap - rho) {
                if ccfg[slot(pu, 1, q, q_cap)] > 0 {
                    let mut c = ccfg.clone();
                    c[slot(pu, 1, q, q_cap)] -= 1;
                    c[slot(pu, 1, q + rho, q_cap)] += 1;
                    staged.push((c, ce.cost, Serve::Exit { q }));
                }
            }
            for &v1 in pbag {
                for &v2 in pbag {
                    for q in 0..=(q_cap - rho) {
                        let p1 = cbag.binary_search(&v1).unwrap();
                        let p2 = cbag.binary_search(&v2).unwrap();
                        let mut c = ccfg.clone();
                        if c[slot(p1, 0, q, q_cap)] == u8::MAX
                            || c[slot(p2, 1, q + rho, q_cap)] == u8::MAX
                        {
                            continue;
                        }
                        c[slot(p1, 0, q, q_cap)] += 1;
                        c[slot(p2, 1, q + rho, q_cap)] += 1;
                        let cost = ce.cost + g.distance(v1, u) + g.distance(u, v2);
                        staged.push((c, cost, Serve::Detour { v1, v2, q }));
                    }
                }
            }
            if allow_skip {
                let pen = inst.penalties.as_ref().expect("checked by caller")[u];
                staged.push((ccfg.clone(), ce.cost + pen, Serve::Skip));
            }
        } else {
            staged.push((ccfg.clone(), ce.cost, Serve::None));
        }

        // Phase two: every anchor left at the vertex moves, pairs off, or
        // terminates, one unit at a time with equal states merged.
        for (start, scost, serve) in staged {
            let mut frontier: BTreeMap<Box<[u8]>, (f64, Vec<Act>)> = BTreeMap::new();
            frontier.insert(start, (scost, Vec::new()));
            while !frontier.is_empty() {
                let mut next: BTreeMap<Box<[u8]>, (f64, Vec<Act>)> = BTreeMap::new();
                for (cfg, (cost, acts)) in frontier {
                    let lo = pu * cols(q_cap);
                    let hit = (0..cols(q_cap)).find(|off| cfg[lo + off] > 0);
                    let Some(off) = hit else {
                        let parent_cfg = remove_column(&cfg, pu, q_cap);
                        offer(
                            &mut out,
                            parent_cfg,
                            cost,
                            Back::Forget { child: ccfg.clone(), serve, acts },
                        );
                        continue;
                    };
                    let dir = off / (q_cap as usize + 1);
                    let q = (off % (q_cap as usize + 1)) as u8;
                    let mut push = |c: Box<[u8]>, extra: f64, act: Act| {
                        let mut acts = acts.clone();
                        acts.push(act);
                        let cost = cost + extra;
                        match next.entry(c) {
                            std::collections::btree_map::Entry::Vacant(e) => {
                                e.insert((cost, acts));
                            }
                            std::collections::btree_map::Entry::Occupied(mut e) => {
                                if cost < e.get().0 {
                                    e.insert((cost, acts));
                                }
                            }
                        }
                    };
                    // Two segments meeting at the vertex concatenate for
                    // free: an entry fuses with an exit at equal `q`
                    // (never the same segment, so no loop can close).
                    if dir == 0 && cfg[slot(pu, 1, q, q_cap)] > 0 {
                        let mut c = cfg.clone();
                        c[lo + off] -= 1;
                        c[slot(pu, 1, q, q_cap)] -= 1;
                        push(c, 0.0, Act::Pair { q });
                    }
                    if is_depot {
                        if dir == 0 {
                            if q == 0 {
                                let mut c = cfg.clone();
                                c[lo + off] -= 1;
                                push(c, 0.0, Act::StartHere);
                            }
                        } else {
                            let mut c = cfg.clone();
                            c[lo + off] -= 1;
                            push(c, 0.0, Act::EndHere { q });
                        }
                        // Hand the segment end to a later depot.
                        for &y in pbag.iter().filter(|&&y| inst.is_depot(y)) {
                            let py = cbag.binary_search(&y).unwrap();
                            if cfg[slot(py, dir, q, q_cap)] == u8::MAX {
                                continue;
                            }
                            let mut c = cfg.clone();
                            c[lo + off] -= 1;
                            c[slot(py, dir, q, q_cap)] += 1;
                            let act = if dir == 0 {
                                Act::MoveEntry { q, to: y }
                            } else {
                                Act::MoveExit { q, to: y }
                            };
                            push(c, g.distance(u, y), act);
                        }
                    } else {
                        for &y in pbag {
                            let py = cbag.binary_search(&y).unwrap();
                            if cfg[slot(py, dir, q, q_cap)] == u8::MAX {
                                continue;
                            }
                            let mut c = cfg.clone();
                            c[lo + off] -= 1;
                            c[slot(py, dir, q, q_cap)] += 1;
                            let act = if dir == 0 {
                                Act::MoveEntry { q, to: y }
                            } else {
                                Act::MoveExit { q, to: y }
                            };
                            push(c, g.distance(u, y), act);
                        }
                    }
                }
                frontier = next;
            }
        }
    }
    out
}

/// Combines two children over the same bag, optionally wiring entries of
/// the union to exits at equal used capacity.
fn join_node(g: &MetricGraph, bag: &[usize], q_cap: u8, left: &Table, right: &Table) -> Table {
    let mut out = Table::new();
    for (lcfg, le) in left {
        for (rcfg, re) in right {
            let mut sum = vec![0u8; lcfg.len()];
            let mut overflow = false;
            for i in 0..sum.len() {
                match lcfg[i].checked_add(rcfg[i]) {
                    Some(x) => sum[i] = x,
                    None => overflow = true,
                }
            }
            if overflow {
                continue;
            }
            let base = le.cost + re.cost;
            let mut matches: Vec<(usize, usize, u8)> = Vec::new();
            gen_matches(
                g,
                bag,
                q_cap,
                &mut sum,
                0,
                0,
                base,
                &mut matches,
                &mut |cfg: &[u8], cost: f64, matches: &[(usize, usize, u8)]| {
                    offer(
                        &mut out,
                        cfg.to_vec().into_boxed_slice(),
                        cost,
                        Back::Join {
                            left: lcfg.clone(),
                            right: rcfg.clone(),
                            matches: matches.to_vec(),
                        },
                    );
                },
            );
        }
    }
    out
}

/// Enumerates every way to wire entry units to exit units at equal `q`,
/// emitting each reachable parent configuration with its wiring cost.
/// Entry slots are scanned in layout order; partners per slot are taken
/// in non-decreasing slot order so each wiring multiset is emitted once.
#[allow(clippy::too_many_arguments)]
fn gen_matches(
    g: &MetricGraph,
    bag: &[usize],
    q_cap: u8,
    cfg: &mut Vec<u8>,
    islot: usize,
    min_oslot: usize,
    cost: f64,
    matches: &mut Vec<(usize, usize, u8)>,
    emit: &mut impl FnMut(&[u8], f64, &[(usize, usize, u8)]),
) {
    let per = q_cap as usize + 1;
    let c = 2 * per;
    // Find the next entry slot with units left.
    let mut i = islot;
    loop {
        if i >= cfg.len() {
            emit(cfg, cost, matches);
            return;
        }
        if i % c < per && cfg[i] > 0 {
            break;
        }
        i += 1;
    }
    // Leave the remaining units of this slot unmatched.
    gen_matches(g, bag, q_cap, cfg, i + 1, 0, cost, matches, emit);
    // Or match one unit against each available exit at the same q.
    let q = (i % c) as u8;
    let upos = i / c;
    let start = if min_oslot > 0 { min_oslot } else { per };
    let mut o = start;
    while o < cfg.len() + per {
        // Exit slot for position `vpos` at capacity q: vpos*c + per + q.
        let vpos = (o - per) / c;
        let oslot = vpos * c + per + q as usize;
        if oslot >= cfg.len() {
            break;
        }
        if cfg[oslot] > 0 {
            cfg[i] -= 1;
            cfg[oslot] -= 1;
            matches.push((bag[upos], bag[vpos], q));
            let hop = g.distance(bag[upos], bag[vpos]);
            gen_matches(g, bag, q_cap, cfg, i, oslot, cost + hop, matches, emit);
            matches.pop();
            cfg[i] += 1;
            cfg[oslot] += 1;
        }
        o = (vpos + 1) * c + per;
    }
}

/// Minimal wiring cost to form `parent` from child configurations `left`
/// and `right` over `bag`: the first entry surplus is connected to some
/// exit surplus at equal used capacity, recursively, taking the cheapest
/// partner each time. Infinite when the surpluses cannot balance.
pub fn join_oracle(
    g: &MetricGraph,
    bag: &[usize],
    capacity: u32,
    parent: &[u8],
    left: &[u8],
    right: &[u8],
) -> f64 {
    let q_cap = capacity as u8;
    let len = bag.len() * cols(q_cap);
    assert!(parent.len() == len && left.len() == len && right.len() == len);
    let mut surplus = vec![0i32; len];
    for i in 0..len {
        surplus[i] = left[i] as i32 + right[i] as i32 - parent[i] as i32;
        if surplus[i] < 0 {
            return INF;
        }
    }
    let mut memo: HashMap<Vec<i32>, f64> = HashMap::new();
    oracle_rec(g, bag, q_cap, &mut surplus, &mut memo)
}

fn oracle_rec(
    g: &MetricGraph,
    bag: &[usize],
    q_cap: u8,
    surplus: &mut Vec<i32>,
    memo: &mut HashMap<Vec<i32>, f64>,
) -> f64 {
    let per = q_cap as usize + 1;
    let c = 2 * per;
    let first = (0..surplus.len()).find(|&i| i % c < per && surplus[i] > 0);
    let Some(i) = first else {
        let balanced = surplus.iter().all(|&x| x == 0);
        return if balanced { 0.0 } else { INF };
    };
    if let Some(&v) = memo.get(surplus.as_slice()) {
        return v;
    }
    let q = i % c;
    let upos = i / c;
    let mut best = INF;
    for vpos in 0..bag.len() {
        let oslot = vpos * c + per + q;
        if surplus[oslot] > 0 {
            surplus[i] -= 1;
            surplus[oslot] -= 1;
            let inner = oracle_rec(g, bag, q_cap, surplus, memo);
            surplus[i] += 1;
            surplus[oslot] += 1;
            best = best.min(g.distance(bag[upos], bag[vpos]) + inner);
        }
    }
    memo.insert(surplus.clone(), best);
    best
}

// ---------------------------------------------------------------------
// Solution reconstruction: replay the winning transitions bottom-up and
// carry real segment paths.

#[derive(Debug)]
struct Seg {
    front: Option<(usize, u8)>,
    back: Option<(usize, u8)>,
    /// Next push at this end records a served client.
    front_serve: bool,
    back_serve: bool,
    path: VecDeque<(usize, bool)>,
    start: Option<usize>,
    end: Option<usize>,
}

struct Replay<'a> {
    inst: &'a RoutingInstance,
    nice: &'a NiceDecomposition,
    tables: &'a [Table],
    segs: Vec<Option<Seg>>,
    skipped: Vec<usize>,
}

impl Replay<'_> {
    fn find(&self, front: bool, anchor: (usize, u8)) -> usize {
        self.segs
            .iter()
            .position(|s| {
                s.as_ref().is_some_and(|s| {
                    if front {
                        s.front == Some(anchor)
                    } else {
                        s.back == Some(anchor)
                    }
                })
            })
            .expect("replay: anchor bookkeeping out of sync")
    }

    fn push_front(&mut self, seg: usize, v: usize) {
        let s = self.segs[seg].as_mut().unwrap();
        let served = s.front_serve;
        s.front_serve = false;
        s.path.push_front((v, served));
    }

    fn push_back(&mut self, seg: usize, v: usize) {
        let s = self.segs[seg].as_mut().unwrap();
        let served = s.back_serve;
        s.back_serve = false;
        s.path.push_back((v, served));
    }

    /// Fuses `a`'s back onto `b`'s front; `a` absorbs `b`.
    fn fuse(&mut self, a: usize, b: usize) {
        assert_ne!(a, b, "replay: a segment cannot close onto itself");
        let b_seg = self.segs[b].take().unwrap();
        let a_seg = self.segs[a].as_mut().unwrap();
        a_seg.path.extend(b_seg.path);
        a_seg.back = b_seg.back;
        a_seg.back_serve = b_seg.back_serve;
        a_seg.end = b_seg.end;
    }

    fn run(&mut self, node: usize, cfg: &[u8]) {
        let entry = self.tables[node].get(cfg).expect("replay: missing table entry");
        let back = entry.back.clone();
        match back {
            Back::Leaf => {}
            Back::Intro { child } => {
                let NiceNode::Introduce { child: cid, .. } = self.nice.nodes[node] else {
                    unreachable!()
                };
                self.run(cid, &child);
            }
            Back::Forget { child, serve, acts } => {
                let NiceNode::Forget { child: cid, v: u } = self.nice.nodes[node] else {
                    unreachable!()
                };
                self.run(cid, &child);
                let rho = self.inst.demands[u] as u8;
                match serve {
                    Serve::None => {}
                    Serve::Enter { q } => {
                        let s = self.find(true, (u, q));
                        let seg = self.segs[s].as_mut().unwrap();
                        seg.front = Some((u, q - rho));
                        seg.front_serve = true;
                    }
                    Serve::Exit { q } => {
                        let s = self.find(false, (u, q));
                        let seg = self.segs[s].as_mut().unwrap();
                        seg.back = Some((u, q + rho));
                        seg.back_serve = true;
                    }
                    Serve::Detour { v1, v2, q } => {
                        let mut path = VecDeque::new();
                        path.push_back((u, true));
                        self.segs.push(Some(Seg {
                            front: Some((v1, q)),
                            back: Some((v2, q + rho)),
                            front_serve: false,
                            back_serve: false,
                            path,
                            start: None,
                            end: None,
                        }));
                    }
                    Serve::Skip => self.skipped.push(u),
                }
                for act in acts {
                    match act {
                        Act::MoveEntry { q, to } => {
                            let s = self.find(true, (u, q));
                            self.push_front(s, u);
                            self.segs[s].as_mut().unwrap().front = Some((to, q));
                        }
                        Act::MoveExit { q, to } => {
                            let s = self.find(false, (u, q));
                            self.push_back(s, u);
                            self.segs[s].as_mut().unwrap().back = Some((to, q));
                        }
                        Act::Pair { q } => {
                            let a = self.find(false, (u, q));
                            let b = self.find(true, (u, q));
                            // The junction visit is recorded once, on the
                            // exit side; it serves the client when either
                            // side absorbed it at this forget.
                            let b_seg = self.segs[b].as_mut().unwrap();
                            let entry_served = b_seg.front_serve;
                            b_seg.front = None;
                            b_seg.front_serve = false;
                            let a_seg = self.segs[a].as_mut().unwrap();
                            a_seg.back_serve |= entry_served;
                            self.push_back(a, u);
                            self.segs[a].as_mut().unwrap().back = None;
                            self.fuse(a, b);
                        }
                        Act::StartHere => {
                            let s = self.find(true, (u, 0));
                            self.push_front(s, u);
                            let seg = self.segs[s].as_mut().unwrap();
                            seg.front = None;
                            seg.start = Some(u);
                        }
                        Act::EndHere { q } => {
                            let s = self.find(false, (u, q));
                            self.push_back(s, u);
                            let seg = self.segs[s].as_mut().unwrap();
                            seg.back = None;
                            seg.end = Some(u);
                        }
                    }
                }
            }
            Back::Join { left, right, matches } => {
                let NiceNode::Join { left: lid, right: rid } = self.nice.nodes[node] else {
                    unreachable!()
                };
                self.run(lid, &left);
                self.run(rid, &right);
                for (u, v, q) in matches {
                    // Exit at v feeds the entry at u: ...->v then u->...
                    let a = self.find(false, (v, q));
                    let b = self.find(true, (u, q));
                    self.push_back(a, v);
                    self.push_front(b, u);
                    self.segs[a].as_mut().unwrap().back = None;
                    self.segs[b].as_mut().unwrap().front = None;
                    self.fuse(a, b);
                }
            }
        }
    }

    fn finish(mut self) -> (Vec<Tour>, Vec<usize>) {
        let mut tours = Vec::new();
        for seg in self.segs.drain(..).flatten() {
            assert!(
                seg.front.is_none() && seg.back.is_none(),
                "replay: dangling segment end at the root"
            );
            let stops: Vec<usize> = seg.path.iter().map(|&(v, _)| v).collect();
            let served: Vec<usize> =
                seg.path.iter().filter(|&&(_, s)| s).map(|&(v, _)| v).collect();
            tours.push(Tour { stops, served });
        }
        self.skipped.sort_unstable();
        (tours, self.skipped)
    }
}
