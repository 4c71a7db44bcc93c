//! Bounds on `E[f(X)]` from `E[X]` alone, and the derived ratio and gap
//! constants compared against the naive `inf f` / `sup f` bounds.
//!
//! Sup/inf quantities are taken over the sample grid (which contains every
//! envelope breakpoint), not by global optimization.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::domain::SampledGraph;
use crate::expr::{EvalError, Expr};
use crate::hull::{HullError, PlFunction};

/// Max of `f - g_l` over the samples for `f` to count as its own lower envelope.
pub const JENSEN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("mean {mean} lies outside the hull of the domain [{lo}, {hi}]")]
    OutsideHull { mean: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Envelope(#[from] HullError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub(crate) fn undefined_marker<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("undefined"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub mean_x: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(serialize_with = "undefined_marker")]
    pub f_at_mean: Option<f64>,
    pub jensen_reduced: bool,
}

/// `g_l(mean) <= E[f(X)] <= g_u(mean)` for every X on the domain with `E[X] = mean`.
pub fn bounds_at(
    lower: &PlFunction,
    upper: &PlFunction,
    mean_x: f64,
    f: &Expr,
    graph: &SampledGraph,
) -> Result<BoundsReport, BoundsError> {
    let (lo, hi) = graph.domain.hull();
    if !(mean_x >= lo && mean_x <= hi) {
        return Err(BoundsError::OutsideHull { mean: mean_x, lo, hi });
    }
    let f_at_mean = if graph.domain.contains(mean_x) {
        Some(f.eval(mean_x)?)
    } else {
        None
    };
    Ok(BoundsReport {
        mean_x,
        lower: lower.eval(mean_x)?,
        upper: upper.eval(mean_x)?,
        f_at_mean,
        jensen_reduced: jensen_check(lower, graph),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    #[serde(serialize_with = "undefined_marker")]
    pub mean_x: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub c_l_at: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub c_u_at: Option<f64>,
    pub s_l: f64,
    pub s_u: f64,
    #[serde(serialize_with = "undefined_marker")]
    pub c_hat_l: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub c_hat_u: Option<f64>,
    pub obvious_inf: f64,
    pub obvious_sup: f64,
    #[serde(serialize_with = "undefined_marker")]
    pub obvious_ratio_lo: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub obvious_ratio_hi: Option<f64>,
}

/// Ratio and gap constants over the sample grid.
///
/// Ratio quantities are `None` when `f` vanishes or changes sign on the
/// grid. The pointwise ratios `c_l_at`, `c_u_at` additionally need the
/// mean to lie in the domain with `f(mean) != 0`.
pub fn constants(
    lower: &PlFunction,
    upper: &PlFunction,
    f: &Expr,
    graph: &SampledGraph,
    mean_x: Option<f64>,
) -> Result<ConstantsReport, BoundsError> {
    let mut s_l = 0.0f64;
    let mut s_u = 0.0f64;
    let mut ratio_l = f64::INFINITY;
    let mut ratio_u = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    let mut abs_min = f64::INFINITY;
    let mut abs_max = 0.0f64;
    let (mut any_pos, mut any_nonpos) = (false, false);
    let (mut any_neg, mut any_nonneg) = (false, false);

    for &(x, y) in &graph.points {
        let gl = lower.eval(x)?;
        let gu = upper.eval(x)?;
        s_l = s_l.max((y - gl).abs());
        s_u = s_u.max((y - gu).abs());
        inf = inf.min(y);
        sup = sup.max(y);
        abs_min = abs_min.min(y.abs());
        abs_max = abs_max.max(y.abs());
        if y > 0.0 {
            any_pos = true;
        } else {
            any_nonpos = true;
        }
        if y < 0.0 {
            any_neg = true;
        } else {
            any_nonneg = true;
        }
        if y != 0.0 {
            ratio_l = ratio_l.min(gl / y);
            ratio_u = ratio_u.max(gu / y);
        }
    }
    let one_sign = (any_pos && !any_nonpos) || (any_neg && !any_nonneg);
    let defined = |v: f64| one_sign.then_some(v);

    let mut c_l_at = None;
    let mut c_u_at = None;
    if let Some(m) = mean_x {
        let (lo, hi) = graph.domain.hull();
        if !(m >= lo && m <= hi) {
            return Err(BoundsError::OutsideHull { mean: m, lo, hi });
        }
        if graph.domain.contains(m) {
            let fm = f.eval(m)?;
            if fm != 0.0 {
                c_l_at = Some(lower.eval(m)? / fm);
                c_u_at = Some(upper.eval(m)? / fm);
            }
        }
    }

    Ok(ConstantsReport {
        mean_x,
        c_l_at,
        c_u_at,
        s_l,
        s_u,
        c_hat_l: defined(ratio_l),
        c_hat_u: defined(ratio_u),
        obvious_inf: inf,
        obvious_sup: sup,
        obvious_ratio_lo: defined(abs_min / abs_max),
        obvious_ratio_hi: defined(abs_max / abs_min),
    })
}

/// True when `f` is numerically its own lower envelope on the grid, so the
/// lower bound reproduces Jensen's inequality.
pub fn jensen_check(lower: &PlFunction, graph: &SampledGraph) -> bool {
    graph
        .points
        .iter()
        .all(|&(x, y)| lower.eval(x).is_ok_and(|g| y - g <= JENSEN_TOL))
}

/// Mirror of [`jensen_check`] for concave `f` and the upper envelope.
pub fn jensen_check_upper(upper: &PlFunction, graph: &SampledGraph) -> bool {
    graph
        .points
        .iter()
        .all(|&(x, y)| upper.eval(x).is_ok_and(|g| g - y <= JENSEN_TOL))
}

/// Additive sandwich from the gap constants, for a mean in the domain:
/// `max(inf f, f(m) - s_l) <= E[f(X)] <= min(sup f, f(m) + s_u)`.
pub fn additive_bounds(report: &ConstantsReport, f_at_mean: f64) -> (f64, f64) {
    (
        report.obvious_inf.max(f_at_mean - report.s_l),
        report.obvious_sup.min(f_at_mean + report.s_u),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::sample;
    use crate::expr::parse;
    use crate::hull::{convex_hull_2d, envelopes, Envelopes};

    fn setup(f: &str, d: &str, n: usize) -> (Expr, SampledGraph, Envelopes) {
        let f = parse(f).unwrap();
        let g = sample(&f, &d.parse().unwrap(), n).unwrap();
        let env = envelopes(&convex_hull_2d(&g.points).unwrap()).unwrap();
        (f, g, env)
    }

    #[test]
    fn example_two_at_zero() {
        let (f, g, env) = setup("1/x", "[-2,-1]u[1,2]", 2049);
        let r = bounds_at(&env.lower, &env.upper, 0.0, &f, &g).unwrap();
        assert!((r.lower + 0.5).abs() < 1e-15);
        assert!((r.upper - 0.5).abs() < 1e-15);
        assert_eq!(r.f_at_mean, None);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""f_at_mean":"undefined""#));
    }

    #[test]
    fn affine_envelopes_coincide() {
        let (f, g, env) = setup("3*x+1", "[0,1]", 101);
        let r = bounds_at(&env.lower, &env.upper, 0.4, &f, &g).unwrap();
        assert!((r.lower - 2.2).abs() < 1e-12);
        assert!((r.upper - 2.2).abs() < 1e-12);
        assert!(r.jensen_reduced);
    }

    #[test]
    fn mean_outside_hull_is_rejected() {
        let (f, g, env) = setup("x", "[0,1]", 11);
        assert_eq!(
            bounds_at(&env.lower, &env.upper, 5.0, &f, &g),
            Err(BoundsError::OutsideHull {
                mean: 5.0,
                lo: 0.0,
                hi: 1.0
            })
        );
    }

    #[test]
    fn parabola_gaps() {
        let (f, g, env) = setup("x^2", "[-1,1]", 2049);
        let c = constants(&env.lower, &env.upper, &f, &g, Some(0.5)).unwrap();
        assert_eq!(c.s_l, 0.0);
        assert_eq!(c.s_u, 1.0);
        // f vanishes at 0
        assert_eq!(c.c_hat_l, None);
        assert_eq!(c.obvious_ratio_lo, None);
        assert_eq!(c.c_l_at, Some(1.0));
        assert_eq!(c.c_u_at, Some(4.0));
    }

    #[test]
    fn sign_change_makes_ratios_undefined() {
        let (f, g, env) = setup("1/x", "[-2,-1]u[1,2]", 257);
        let c = constants(&env.lower, &env.upper, &f, &g, Some(0.0)).unwrap();
        assert_eq!(c.c_hat_l, None);
        assert_eq!(c.c_hat_u, None);
        assert_eq!(c.obvious_ratio_lo, None);
        assert_eq!(c.obvious_ratio_hi, None);
        assert_eq!(c.c_l_at, None);
        assert_eq!((c.obvious_inf, c.obvious_sup), (-1.0, 1.0));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#""c_hat_l":"undefined""#));
    }

    #[test]
    fn negative_function_has_defined_ratios() {
        let (f, g, env) = setup("-1-x^2", "[0,1]", 65);
        let c = constants(&env.lower, &env.upper, &f, &g, None).unwrap();
        assert!(c.c_hat_l.is_some());
        assert_eq!(c.obvious_ratio_lo, Some(0.5));
        assert_eq!(c.obvious_ratio_hi, Some(2.0));
    }

    #[test]
    fn jensen_checks() {
        let (_, g, env) = setup("x^2", "[-1,1]", 2049);
        assert!(jensen_check(&env.lower, &g));
        let (_, g, env) = setup("2 - x + sin(2*pi*x)", "[0,1]", 2049);
        assert!(!jensen_check(&env.lower, &g));
        let (_, g, env) = setup("-x^2", "[-1,1]", 2049);
        assert!(!jensen_check(&env.lower, &g));
        assert!(jensen_check_upper(&env.upper, &g));
    }

    #[test]
    fn additive_form_uses_matching_gap() {
        let (f, g, env) = setup("x^2", "[-1,1]", 257);
        let c = constants(&env.lower, &env.upper, &f, &g, None).unwrap();
        // E[X^2] >= m^2 (Jensen) and E[X^2] <= min(1, m^2 + 1)
        let (lo, hi) = additive_bounds(&c, 0.25);
        assert_eq!((lo, hi), (0.25, 1.0));
    }
}
