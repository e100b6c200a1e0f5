//! Tolerance-aware comparisons.
//!
//! Every geometric comparison in the crate goes through these helpers with
//! the single crate-wide relative tolerance below, so boundary behaviour is
//! consistent across modules (balls, cover intervals, net radii, audits).

/// Relative tolerance for all distance comparisons.
pub const REL_TOL: f64 = 1e-9;

fn tol(a: f64, b: f64) -> f64 {
    REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `a == b` up to relative tolerance. Non-finite values compare exactly,
/// so an infinite distance (empty set, unreachable) never looks close to
/// a finite one.
pub fn approx_eq(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    (a - b).abs() <= tol(a, b)
}

/// `a <= b` up to relative tolerance.
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b || approx_eq(a, b)
}

/// `a >= b` up to relative tolerance.
pub fn approx_ge(a: f64, b: f64) -> bool {
    a >= b || approx_eq(a, b)
}

/// `a < b` and not approximately equal.
pub fn approx_lt(a: f64, b: f64) -> bool {
    a < b && !approx_eq(a, b)
}

/// `a > b` and not approximately equal.
pub fn approx_gt(a: f64, b: f64) -> bool {
    a > b && !approx_eq(a, b)
}

/// Half-open membership `a ∈ (lo, hi]` with tolerant endpoints.
pub fn in_half_open(a: f64, lo: f64, hi: f64) -> bool {
    approx_gt(a, lo) && approx_le(a, hi)
}
