//! Problem-instance files.
//!
//! Instances travel as JSON with two top-level fields: the graph and the
//! problem posed on it. Parsing validates shape and semantics together
//! and reports the JSON pointer of the offending element, so a bad entry
//! deep in an edge list is named exactly. Rendering is canonical — field
//! order, indentation, and float formatting are fixed — so parse/render
//! round-trips are byte-identical.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{Edge, GraphError, MetricGraph, Role};
use crate::vrp::{RoutingInstance, VrpError};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("{pointer}: {what}")]
    Shape { pointer: String, what: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Routing(#[from] VrpError),
}

fn shape(pointer: impl Into<String>, what: impl Into<String>) -> InstanceError {
    InstanceError::Shape { pointer: pointer.into(), what: what.into() }
}

/// The problem posed on an instance graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Cvr {
        depots: Vec<usize>,
        capacity: u32,
        demands: Vec<u32>,
        penalties: Option<Vec<f64>>,
    },
    KCenter {
        k: usize,
        coverable: Vec<bool>,
        candidates: Vec<bool>,
    },
    KMedian {
        k: usize,
        weights: Vec<f64>,
        candidates: Vec<bool>,
    },
}

/// Optional run parameters an instance may carry so that a file is
/// self-contained: the accuracy, ladder base, cluster hint, and seed it
/// was produced for. Absent entries fall back to the runner's flags.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunDefaults {
    pub eps_hat: Option<f64>,
    pub c: Option<f64>,
    pub eta_hint: Option<usize>,
    pub seed: Option<u64>,
}

impl RunDefaults {
    pub fn is_empty(&self) -> bool {
        self.eps_hat.is_none() && self.c.is_none() && self.eta_hint.is_none() && self.seed.is_none()
    }
}

/// A parsed instance: the guest graph, the problem on it, and any
/// embedded run defaults.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: MetricGraph,
    pub problem: Problem,
    pub defaults: RunDefaults,
}

impl Instance {
    /// Builds the routing instance when the problem is a routing one.
    pub fn routing(&self) -> Option<Result<RoutingInstance, VrpError>> {
        match &self.problem {
            Problem::Cvr { depots, capacity, demands, penalties } => {
                let inst = RoutingInstance::new(
                    self.graph.clone(),
                    depots.clone(),
                    *capacity,
                    demands.clone(),
                );
                Some(match (inst, penalties) {
                    (Ok(i), Some(p)) => i.with_penalties(p.clone()),
                    (r, _) => r,
                })
            }
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------
// Typed extraction with pointer tracking.

fn as_object<'v>(v: &'v Value, ptr: &str) -> Result<&'v Map<String, Value>, InstanceError> {
    v.as_object().ok_or_else(|| shape(ptr, "expected an object"))
}

fn as_array<'v>(v: &'v Value, ptr: &str) -> Result<&'v Vec<Value>, InstanceError> {
    v.as_array().ok_or_else(|| shape(ptr, "expected an array"))
}

fn field<'v>(obj: &'v Map<String, Value>, ptr: &str, name: &str) -> Result<&'v Value, InstanceError> {
    obj.get(name).ok_or_else(|| shape(format!("{ptr}/{name}"), "missing field"))
}

fn as_usize(v: &Value, ptr: &str) -> Result<usize, InstanceError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| shape(ptr, "expected a non-negative integer"))
}

fn as_f64(v: &Value, ptr: &str) -> Result<f64, InstanceError> {
    v.as_f64().ok_or_else(|| shape(ptr, "expected a number"))
}

fn as_bool(v: &Value, ptr: &str) -> Result<bool, InstanceError> {
    v.as_bool().ok_or_else(|| shape(ptr, "expected a boolean"))
}

fn usize_list(v: &Value, ptr: &str) -> Result<Vec<usize>, InstanceError> {
    as_array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{ptr}/{i}")))
        .collect()
}

fn f64_list(v: &Value, ptr: &str) -> Result<Vec<f64>, InstanceError> {
    as_array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_f64(x, &format!("{ptr}/{i}")))
        .collect()
}

fn bool_list(v: &Value, ptr: &str) -> Result<Vec<bool>, InstanceError> {
    as_array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_bool(x, &format!("{ptr}/{i}")))
        .collect()
}

fn expect_len<T>(list: &[T], n: usize, ptr: &str) -> Result<(), InstanceError> {
    if list.len() != n {
        return Err(shape(ptr, format!("expected {n} entries, got {}", list.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Parsing.

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| InstanceError::Syntax(e.to_string()))?;
    let obj = as_object(&root, "")?;

    // Graph.
    let graph_v = field(obj, "", "graph")?;
    let graph_o = as_object(graph_v, "/graph")?;
    let n = as_usize(field(graph_o, "/graph", "n")?, "/graph/n")?;
    let edges_v = as_array(field(graph_o, "/graph", "edges")?, "/graph/edges")?;
    let mut edges = Vec::with_capacity(edges_v.len());
    for (i, e) in edges_v.iter().enumerate() {
        let ptr = format!("/graph/edges/{i}");
        let triple = as_array(e, &ptr)?;
        if triple.len() != 3 {
            return Err(shape(&ptr, "expected [u, v, w]"));
        }
        let u = as_usize(&triple[0], &format!("{ptr}/0"))?;
        let v = as_usize(&triple[1], &format!("{ptr}/1"))?;
        let w = as_f64(&triple[2], &format!("{ptr}/2"))?;
        edges.push(Edge { u, v, w });
    }
    let graph = MetricGraph::new(n, edges, Role::Guest)?;

    // Problem.
    let prob_v = field(obj, "", "problem")?;
    let prob_o = as_object(prob_v, "/problem")?;
    let kind = field(prob_o, "/problem", "kind")?
        .as_str()
        .ok_or_else(|| shape("/problem/kind", "expected a string"))?;
    let problem = match kind {
        "cvr" => {
            let depots = usize_list(field(prob_o, "/problem", "depots")?, "/problem/depots")?;
            let capacity_v = field(prob_o, "/problem", "capacity")?;
            let capacity = as_usize(capacity_v, "/problem/capacity")? as u32;
            let demands_v = field(prob_o, "/problem", "demands")?;
            let demands: Vec<u32> = usize_list(demands_v, "/problem/demands")?
                .into_iter()
                .map(|d| d as u32)
                .collect();
            expect_len(&demands, n, "/problem/demands")?;
            let penalties = match prob_o.get("penalties") {
                None | Some(Value::Null) => None,
                Some(p) => {
                    let p = f64_list(p, "/problem/penalties")?;
                    expect_len(&p, n, "/problem/penalties")?;
                    Some(p)
                }
            };
            for (i, &d) in depots.iter().enumerate() {
                if d >= n {
                    return Err(shape(
                        format!("/problem/depots/{i}"),
                        format!("vertex {d} out of range for n = {n}"),
                    ));
                }
            }
            Problem::Cvr { depots, capacity, demands, penalties }
        }
        "kcenter" | "kmedian" => {
            let k = as_usize(field(prob_o, "/problem", "k")?, "/problem/k")?;
            let candidates = match prob_o.get("candidates") {
                None | Some(Value::Null) => vec![true; n],
                Some(c) => {
                    let c = bool_list(c, "/problem/candidates")?;
                    expect_len(&c, n, "/problem/candidates")?;
                    c
                }
            };
            if kind == "kcenter" {
                let coverable = match prob_o.get("coverable") {
                    None | Some(Value::Null) => vec![true; n],
                    Some(c) => {
                        let c = bool_list(c, "/problem/coverable")?;
                        expect_len(&c, n, "/problem/coverable")?;
                        c
                    }
                };
                Problem::KCenter { k, coverable, candidates }
            } else {
                let weights = match prob_o.get("weights") {
                    None | Some(Value::Null) => vec![1.0; n],
                    Some(w) => {
                        let w = f64_list(w, "/problem/weights")?;
                        expect_len(&w, n, "/problem/weights")?;
                        w
                    }
                };
                Problem::KMedian { k, weights, candidates }
            }
        }
        other => {
            return Err(shape(
                "/problem/kind",
                format!("unknown kind {other:?}; expected cvr, kcenter, or kmedian"),
            ))
        }
    };

    // Optional run defaults.
    let mut defaults = RunDefaults::default();
    if let Some(d) = obj.get("defaults") {
        if !d.is_null() {
            let d = as_object(d, "/defaults")?;
            for key in d.keys() {
                match key.as_str() {
                    "eps_hat" | "c" | "eta_hint" | "seed" => {}
                    other => {
                        return Err(shape(
                            format!("/defaults/{other}"),
                            "unknown field; expected eps_hat, c, eta_hint, or seed",
                        ))
                    }
                }
            }
            if let Some(v) = d.get("eps_hat") {
                defaults.eps_hat = Some(as_f64(v, "/defaults/eps_hat")?);
            }
            if let Some(v) = d.get("c") {
                defaults.c = Some(as_f64(v, "/defaults/c")?);
            }
            if let Some(v) = d.get("eta_hint") {
                defaults.eta_hint = Some(as_usize(v, "/defaults/eta_hint")?);
            }
            if let Some(v) = d.get("seed") {
                defaults.seed =
                    Some(v.as_u64().ok_or_else(|| shape("/defaults/seed", "expected a u64"))?);
            }
        }
    }

    // Semantic validation for routing happens in RoutingInstance.
    let inst = Instance { graph, problem, defaults };
    if let Some(r) = inst.routing() {
        r?;
    }
    Ok(inst)
}

// ---------------------------------------------------------------------
// Rendering.

/// Renders an instance in the canonical form `parse_instance` accepts;
/// parsing and re-rendering reproduces the bytes exactly.
pub fn render_instance(inst: &Instance) -> String {
    let edges: Vec<Value> = inst
        .graph
        .edges()
        .iter()
        .map(|e| json!([e.u, e.v, e.w]))
        .collect();
    let mut root = Map::new();
    let mut graph = Map::new();
    graph.insert("n".into(), json!(inst.graph.vertex_count()));
    graph.insert("edges".into(), Value::Array(edges));
    root.insert("graph".into(), Value::Object(graph));

    let mut p = Map::new();
    match &inst.problem {
        Problem::Cvr { depots, capacity, demands, penalties } => {
            p.insert("kind".into(), json!("cvr"));
            p.insert("depots".into(), json!(depots));
            p.insert("capacity".into(), json!(capacity));
            p.insert("demands".into(), json!(demands));
            p.insert(
                "penalties".into(),
                match penalties {
                    Some(x) => json!(x),
                    None => Value::Null,
                },
            );
        }
        Problem::KCenter { k, coverable, candidates } => {
            p.insert("kind".into(), json!("kcenter"));
            p.insert("k".into(), json!(k));
            p.insert("coverable".into(), json!(coverable));
            p.insert("candidates".into(), json!(candidates));
        }
        Problem::KMedian { k, weights, candidates } => {
            p.insert("kind".into(), json!("kmedian"));
            p.insert("k".into(), json!(k));
            p.insert("weights".into(), json!(weights));
            p.insert("candidates".into(), json!(candidates));
        }
    }
    root.insert("problem".into(), Value::Object(p));

    if !inst.defaults.is_empty() {
        let mut d = Map::new();
        if let Some(x) = inst.defaults.eps_hat {
            d.insert("eps_hat".into(), json!(x));
        }
        if let Some(x) = inst.defaults.c {
            d.insert("c".into(), json!(x));
        }
        if let Some(x) = inst.defaults.eta_hint {
            d.insert("eta_hint".into(), json!(x));
        }
        if let Some(x) = inst.defaults.seed {
            d.insert("seed".into(), json!(x));
        }
        root.insert("defaults".into(), Value::Object(d));
    }

    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("valid JSON value");
    out.push('\n');
    out
}
