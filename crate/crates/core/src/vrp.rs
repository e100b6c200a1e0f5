//! Capacitated routing instances and solutions.
//!
//! An instance lives on a metric graph (guest or host): a set of depots,
//! a per-vertex demand vector (zero marks non-clients), a tour capacity,
//! and optionally a per-client penalty for skipping. Solutions are tours —
//! full visit sequences between depot endpoints — plus the set of clients
//! each tour serves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::MetricGraph;

#[derive(Debug, Error)]
pub enum VrpError {
    #[error("no depots given")]
    NoDepots,
    #[error("vertex {0} out of range for a graph on {1} vertices")]
    OutOfRange(usize, usize),
    #[error("demand vector has length {0}, expected {1}")]
    DemandLength(usize, usize),
    #[error("depot {0} carries demand {1}; depots must have zero demand")]
    DepotDemand(usize, u32),
    #[error("client {0} demands {1}, above the tour capacity {2}")]
    DemandAboveCapacity(usize, u32, u32),
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error("penalty vector has length {0}, expected {1}")]
    PenaltyLength(usize, usize),
    #[error("penalty for vertex {0} is negative")]
    NegativePenalty(usize),
}

/// A capacitated routing instance over a metric graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoutingInstance {
    pub graph: MetricGraph,
    /// Sorted, deduplicated depot vertices.
    pub depots: Vec<usize>,
    /// Tour capacity: total demand a single tour may serve.
    pub capacity: u32,
    /// Demand per vertex; zero means the vertex is not a client.
    pub demands: Vec<u32>,
    /// Optional skip penalties, parallel to `demands`; only entries at
    /// clients are meaningful.
    pub penalties: Option<Vec<f64>>,
}

impl RoutingInstance {
    pub fn new(
        graph: MetricGraph,
        depots: Vec<usize>,
        capacity: u32,
        demands: Vec<u32>,
    ) -> Result<Self, VrpError> {
        let mut depots = depots;
        depots.sort_unstable();
        depots.dedup();
        let inst = RoutingInstance { graph, depots, capacity, demands, penalties: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_penalties(mut self, penalties: Vec<f64>) -> Result<Self, VrpError> {
        self.penalties = Some(penalties);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), VrpError> {
        let n = self.graph.vertex_count();
        if self.depots.is_empty() {
            return Err(VrpError::NoDepots);
        }
        if self.capacity == 0 {
            return Err(VrpError::ZeroCapacity);
        }
        if let Some(&d) = self.depots.iter().find(|&&d| d >= n) {
            return Err(VrpError::OutOfRange(d, n));
        }
        if self.demands.len() != n {
            return Err(VrpError::DemandLength(self.demands.len(), n));
        }
        for &s in &self.depots {
            if self.demands[s] > 0 {
                return Err(VrpError::DepotDemand(s, self.demands[s]));
            }
        }
        for (v, &rho) in self.demands.iter().enumerate() {
            if rho > self.capacity {
                return Err(VrpError::DemandAboveCapacity(v, rho, self.capacity));
            }
        }
        if let Some(p) = &self.penalties {
            if p.len() != n {
                return Err(VrpError::PenaltyLength(p.len(), n));
            }
            if let Some(v) = (0..n).find(|&v| p[v] < 0.0) {
                return Err(VrpError::NegativePenalty(v));
            }
        }
        Ok(())
    }

    /// Client vertices: those with positive demand, ascending.
    pub fn clients(&self) -> Vec<usize> {
        (0..self.graph.vertex_count()).filter(|&v| self.demands[v] > 0).collect()
    }

    pub fn is_depot(&self, v: usize) -> bool {
        self.depots.binary_search(&v).is_ok()
    }
}

/// One tour: a visit sequence from a depot to a depot (possibly the same)
/// together with the clients it serves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tour {
    /// Full visit sequence; first and last entries are depots.
    pub stops: Vec<usize>,
    /// Clients served, in visit order; a subset of `stops`.
    pub served: Vec<usize>,
}

impl Tour {
    pub fn cost(&self, g: &MetricGraph) -> f64 {
        self.stops.windows(2).map(|w| g.distance(w[0], w[1])).sum()
    }

    pub fn load(&self, inst: &RoutingInstance) -> u32 {
        self.served.iter().map(|&c| inst.demands[c]).sum()
    }
}

/// A full solution: tours, the movement cost, and (with penalties) the
/// skipped clients and what they cost.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoutingSolution {
    pub tours: Vec<Tour>,
    /// Total tour movement cost.
    pub cost: f64,
    /// Clients left unserved, ascending (empty unless penalties are on).
    pub skipped: Vec<usize>,
    pub penalty_paid: f64,
}

impl RoutingSolution {
    /// Movement plus penalties: the objective the solvers minimize.
    pub fn objective(&self) -> f64 {
        self.cost + self.penalty_paid
    }
}

/// Structural check of a solution against its instance: every client
/// served exactly once or skipped, loads within capacity, tours pinned to
/// depot endpoints, and the recorded costs consistent with the graph.
pub fn check_solution(inst: &RoutingInstance, sol: &RoutingSolution) -> Result<(), String> {
    let mut seen = vec![0usize; inst.graph.vertex_count()];
    for tour in &sol.tours {
        if tour.stops.len() < 2 {
            return Err(format!("tour too short: {:?}", tour.stops));
        }
        let first = *tour.stops.first().unwrap();
        let last = *tour.stops.last().unwrap();
        if !inst.is_depot(first) || !inst.is_depot(last) {
            return Err(format!("tour endpoints {first}..{last} are not depots"));
        }
        if tour.load(inst) > inst.capacity {
            return Err(format!("tour load {} above capacity {}", tour.load(inst), inst.capacity));
        }
        for &c in &tour.served {
            if inst.demands[c] == 0 {
                return Err(format!("vertex {c} served but has no demand"));
            }
            seen[c] += 1;
        }
    }
    for &c in &sol.skipped {
        seen[c] += 1;
    }
    for c in inst.clients() {
        if seen[c] != 1 {
            return Err(format!("client {c} covered {} times", seen[c]));
        }
    }
    let moved: f64 = sol.tours.iter().map(|t| t.cost(&inst.graph)).sum();
    if !crate::cmp::approx_eq(moved, sol.cost) {
        return Err(format!("recorded cost {} differs from recomputed {moved}", sol.cost));
    }
    let penalty: f64 = match &inst.penalties {
        Some(p) => sol.skipped.iter().map(|&c| p[c]).sum(),
        None if sol.skipped.is_empty() => 0.0,
        None => return Err("clients skipped without penalties".into()),
    };
    if !crate::cmp::approx_eq(penalty, sol.penalty_paid) {
        return Err(format!("recorded penalty {} differs from {penalty}", sol.penalty_paid));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_from_edges, Role};

    fn triangle() -> MetricGraph {
        graph_from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], Role::Guest)
    }

    #[test]
    fn instance_validation_catches_bad_demands() {
        let g = triangle();
        let err = RoutingInstance::new(g.clone(), vec![0], 2, vec![1, 0, 0]);
        assert!(matches!(err, Err(VrpError::DepotDemand(0, 1))));
        let err = RoutingInstance::new(g.clone(), vec![0], 2, vec![0, 3, 0]);
        assert!(matches!(err, Err(VrpError::DemandAboveCapacity(1, 3, 2))));
        let ok = RoutingInstance::new(g, vec![0], 2, vec![0, 1, 1]);
        assert!(ok.is_ok());
    }

    #[test]
    fn tour_cost_and_load_add_up() {
        let g = triangle();
        let inst = RoutingInstance::new(g, vec![0], 2, vec![0, 1, 1]).unwrap();
        let tour = Tour { stops: vec![0, 1, 2, 0], served: vec![1, 2] };
        assert_eq!(tour.load(&inst), 2);
        assert!((tour.cost(&inst.graph) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn check_solution_rejects_double_service() {
        let g = triangle();
        let inst = RoutingInstance::new(g, vec![0], 2, vec![0, 1, 1]).unwrap();
        let sol = RoutingSolution {
            tours: vec![
                Tour { stops: vec![0, 1, 0], served: vec![1] },
                Tour { stops: vec![0, 1, 2, 0], served: vec![1, 2] },
            ],
            cost: 5.0,
            skipped: vec![],
            penalty_paid: 0.0,
        };
        assert!(check_solution(&inst, &sol).is_err());
    }
}
