//! The two worked examples and their closed-form envelopes, used as
//! cross-checks for the sampled hull.
//!
//! Example 1 is `f(x) = 2 - x + sin(2πx)` on `[0, 1]`. Its lower envelope
//! is the tangent from `(0, 2)` touching `f` at `x*`, the root in
//! `(1/2, 1)` of `2πx cos(2πx) = sin(2πx)`, and follows `f` afterwards.
//! The graph is point-symmetric under `(x, y) ↦ (1 - x, 3 - y)`, so the
//! upper envelope is `g_u(x) = 3 - g_l(1 - x)` with its kink at `1 - x*`.
//!
//! Example 2 is `f(x) = 1/x` on `[-2, -1] ∪ [1, 2]`, whose envelopes are
//! unions of chords.

use std::f64::consts::TAU;

use crate::hull::PlFunction;

pub const EX1_FN: &str = "2 - x + sin(2*pi*x)";
pub const EX1_DOMAIN: &str = "[0,1]";
pub const EX2_FN: &str = "1/x";
pub const EX2_DOMAIN: &str = "[-2,-1]u[1,2]";

/// Reference values for Example 1, with the tolerances they are checked at.
pub const EX1_KINK: (f64, f64) = (0.715, 2e-3);
pub const EX1_C_HAT_L: (f64, f64) = (0.5, 0.05);
pub const EX1_C_HAT_U: (f64, f64) = (6.5, 0.1);
pub const EX1_OBVIOUS_LO: (f64, f64) = (0.09, 0.01);
pub const EX1_OBVIOUS_HI: (f64, f64) = (11.6, 0.1);

pub fn ex1_f(x: f64) -> f64 {
    2.0 - x + (TAU * x).sin()
}

/// Tangency point `x*` by bisection on `h(x) = 2πx cos(2πx) - sin(2πx)`,
/// which changes sign once on `[0.6, 0.8]`.
pub fn ex1_tangency() -> f64 {
    let h = |x: f64| TAU * x * (TAU * x).cos() - (TAU * x).sin();
    let (mut lo, mut hi) = (0.6f64, 0.8f64);
    let h_lo = h(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid).signum() == h_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Slope magnitude `a = 1 - 2π cos(2π x*)` of the tangent `2 - a x`.
pub fn ex1_slope() -> f64 {
    1.0 - TAU * (TAU * ex1_tangency()).cos()
}

pub fn ex1_lower(x: f64) -> f64 {
    let xs = ex1_tangency();
    if x <= xs {
        2.0 - ex1_slope() * x
    } else {
        ex1_f(x)
    }
}

pub fn ex1_upper(x: f64) -> f64 {
    3.0 - ex1_lower(1.0 - x)
}

pub fn ex2_lower(x: f64) -> f64 {
    if x <= -1.0 {
        (-3.0 - x) / 2.0
    } else {
        (x - 1.0) / 2.0
    }
}

pub fn ex2_upper(x: f64) -> f64 {
    if x <= 1.0 {
        (x + 1.0) / 2.0
    } else {
        (3.0 - x) / 2.0
    }
}

/// First breakpoint strictly inside the domain of a convex envelope: for
/// Example 1 this is where the tangent segment meets the graph.
pub fn first_interior_breakpoint(g: &PlFunction) -> Option<f64> {
    let bp = g.breakpoints();
    (bp.len() > 2).then(|| bp[1].0)
}
