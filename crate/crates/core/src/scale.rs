//! Canonical rescaling.
//!
//! All ladder-based constructions assume the smallest pairwise distance sits
//! just above `c/2`, so that the geometric radius ladder `r_i = (c/4)^i`
//! starts below every distance and the bottom and top cover scales are
//! empty. [`canonical_scale`] multiplies all edge weights to put a graph
//! into that position; user-facing costs are divided by the recorded factor
//! on the way out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmp::{approx_ge, approx_gt, approx_le};
use crate::graph::{Edge, GraphError, MetricGraph};

/// Factor placing the minimum distance a little above `c/2`.
const SNUG: f64 = 0.505;

/// Default base of the radius ladder. `c/4 = 2`, so scales are powers of two.
pub const DEFAULT_C: f64 = 8.0;

/// Default divisor turning a user accuracy `eps_hat` into the internal net
/// accuracy `epsilon` for the depot embeddings.
pub const DEFAULT_DISTORTION_CONSTANT: f64 = 32.0;

/// Default multiplicative-slack constant audited for multi-depot hosts.
pub const DEFAULT_MULT_CONSTANT: f64 = 8.0;

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("ladder base parameter c must exceed 4, got {0}")]
    BadC(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parameters fixed by a canonical rescale, carried alongside the scaled
/// graph through every downstream construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaleParams {
    /// Ladder base parameter; radii are `(c/4)^i`.
    pub c: f64,
    /// User-requested accuracy for the embedding, 0 until set.
    pub epsilon_hat: f64,
    /// Internal net accuracy: `min(1/4, epsilon_hat / distortion_constant)`.
    pub epsilon: f64,
    /// Multiplier applied to the guest weights.
    pub scale_factor: f64,
    /// Index of the top ladder scale: the smallest `i` with
    /// `(c/4)^i >= diameter` of the scaled graph.
    pub r_max_index: usize,
    /// Divisor in the `epsilon_hat -> epsilon` rule.
    pub distortion_constant: f64,
}

impl ScaleParams {
    /// Radius of ladder scale `i`.
    pub fn radius(&self, i: usize) -> f64 {
        (self.c / 4.0).powi(i as i32)
    }

    /// Installs the embedding accuracy. `epsilon` is capped at 1/4 so that
    /// net radii stay well below the scales they refine.
    pub fn with_accuracy(mut self, epsilon_hat: f64, distortion_constant: f64) -> Self {
        self.epsilon_hat = epsilon_hat;
        self.distortion_constant = distortion_constant;
        self.epsilon = (epsilon_hat / distortion_constant).min(0.25);
        self
    }

    /// Recomputes the top scale index for a graph that shares this scale
    /// factor but has different content (used after augmentation).
    pub fn refreshed_for(&self, g: &MetricGraph) -> Self {
        let mut p = *self;
        p.r_max_index = top_scale_index(self.c, diameter_or_zero(g));
        p
    }
}

fn diameter_or_zero(g: &MetricGraph) -> f64 {
    if g.vertex_count() < 2 {
        0.0
    } else {
        g.diameter()
    }
}

/// Smallest `k >= 0` with `(c/4)^k >= diam` (up to tolerance).
fn top_scale_index(c: f64, diam: f64) -> usize {
    let base = c / 4.0;
    let mut k = 0usize;
    let mut r = 1.0f64;
    while !approx_ge(r, diam) {
        r *= base;
        k += 1;
    }
    k
}

/// Rescales `g` so the minimum pairwise distance becomes `0.505 * c`, and
/// returns the scaled graph with its ladder parameters. A single-vertex
/// graph is returned unchanged with a unit factor.
pub fn canonical_scale(g: &MetricGraph, c: f64) -> Result<(MetricGraph, ScaleParams), ScaleError> {
    if !approx_gt(c, 4.0) {
        return Err(ScaleError::BadC(c));
    }
    let n = g.vertex_count();
    if n < 2 {
        let params = ScaleParams {
            c,
            epsilon_hat: 0.0,
            epsilon: 0.0,
            scale_factor: 1.0,
            r_max_index: 0,
            distortion_constant: DEFAULT_DISTORTION_CONSTANT,
        };
        return Ok((g.clone(), params));
    }
    let d_min = g.min_pairwise_distance();
    let factor = SNUG * c / d_min;
    let edges: Vec<Edge> = g
        .edges()
        .iter()
        .map(|e| Edge { u: e.u, v: e.v, w: e.w * factor })
        .collect();
    let scaled = MetricGraph::new(n, edges, g.role())?;
    let diam = scaled.diameter();
    let params = ScaleParams {
        c,
        epsilon_hat: 0.0,
        epsilon: 0.0,
        scale_factor: factor,
        r_max_index: top_scale_index(c, diam),
        distortion_constant: DEFAULT_DISTORTION_CONSTANT,
    };
    // Post-conditions of the rescale: the minimum distance lands in
    // (c/2, 0.51c], and the top radius reaches the diameter.
    debug_assert!(approx_gt(scaled.min_pairwise_distance(), c / 2.0));
    debug_assert!(approx_le(scaled.min_pairwise_distance(), 0.51 * c));
    debug_assert!(approx_ge(params.radius(params.r_max_index), diam));
    Ok((scaled, params))
}
