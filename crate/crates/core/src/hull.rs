//! Planar convex hulls of sampled graphs and the envelope functions read
//! off their lower and upper chains.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::format_f64;

pub type Point = (f64, f64);

/// Tolerance on the ends of a [`PlFunction`]'s domain.
pub const DOMAIN_END_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HullError {
    #[error("no input points")]
    Empty,
    #[error("non-finite coordinate in point ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("x = {x} is outside the envelope domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("breakpoints must have strictly increasing finite x")]
    BadBreakpoints,
}

/// `(b - a) x (c - a)`; positive for a counterclockwise turn.
#[inline]
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Convex polygon with counterclockwise vertices and no three consecutive
/// vertices collinear. One vertex is a point, two are a segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullPolygon {
    vertices: Vec<Point>,
}

impl HullPolygon {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges in counterclockwise order. Empty for a point, one edge for a segment.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        let count = match n {
            0 | 1 => 0,
            2 => 1,
            _ => n,
        };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Smallest signed distance from `p` to the inner side of an edge line.
    /// Positive inside, zero on the boundary, negative outside. For segment
    /// and point hulls this is minus the Euclidean distance.
    pub fn margin(&self, p: Point) -> f64 {
        match self.vertices.len() {
            0 => f64::NEG_INFINITY,
            1 => -dist(p, self.vertices[0]),
            2 => -segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => self
                .edges()
                .map(|(a, b)| cross(a, b, p) / dist(a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Euclidean distance from `p` to the hull (zero inside).
    pub fn distance(&self, p: Point) -> f64 {
        match self.vertices.len() {
            0 => f64::INFINITY,
            1 | 2 => -self.margin(p),
            _ if self.margin(p) >= 0.0 => 0.0,
            _ => self
                .edges()
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.0), hi.max(p.0))
            })
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * dx, a.1 + t * dy))
}

/// Andrew's monotone chain. Collinear points are dropped with a zero
/// tolerance on the computed cross product; exact duplicates collapse.
pub fn convex_hull_2d(points: &[Point]) -> Result<HullPolygon, HullError> {
    if points.is_empty() {
        return Err(HullError::Empty);
    }
    if let Some(p) = points.iter().find(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(HullError::NonFinite(p.0, p.1));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return Ok(HullPolygon { vertices: pts });
    }

    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(HullPolygon { vertices: hull })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Convex,
    Concave,
}

/// Piecewise-linear function on `[first x, last x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPl")]
pub struct PlFunction {
    breakpoints: Vec<Point>,
    shape: Shape,
}

#[derive(Deserialize)]
struct RawPl {
    breakpoints: Vec<Point>,
    shape: Shape,
}

impl TryFrom<RawPl> for PlFunction {
    type Error = HullError;

    fn try_from(raw: RawPl) -> Result<Self, HullError> {
        PlFunction::new(raw.breakpoints, raw.shape)
    }
}

impl PlFunction {
    pub fn new(breakpoints: Vec<Point>, shape: Shape) -> Result<Self, HullError> {
        if breakpoints.is_empty() {
            return Err(HullError::Empty);
        }
        let finite = breakpoints.iter().all(|p| p.0.is_finite() && p.1.is_finite());
        let increasing = breakpoints.windows(2).all(|w| w[0].0 < w[1].0);
        if !(finite && increasing) {
            return Err(HullError::BadBreakpoints);
        }
        Ok(Self { breakpoints, shape })
    }

    pub fn breakpoints(&self) -> &[Point] {
        &self.breakpoints
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0].0, self.breakpoints[self.breakpoints.len() - 1].0)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Linear interpolation; `x` may overshoot the domain ends by [`DOMAIN_END_TOL`].
    pub fn eval(&self, x: f64) -> Result<f64, HullError> {
        let (lo, hi) = self.domain();
        if !(x >= lo - DOMAIN_END_TOL && x <= hi + DOMAIN_END_TOL) {
            return Err(HullError::OutOfDomain { x, lo, hi });
        }
        let bp = &self.breakpoints;
        if bp.len() == 1 || x <= lo {
            return Ok(bp[0].1);
        }
        if x >= hi {
            return Ok(bp[bp.len() - 1].1);
        }
        // first breakpoint with bx > x; x is strictly inside so 1 <= k < len
        let k = bp.partition_point(|p| p.0 <= x);
        let (a, b) = (bp[k - 1], bp[k]);
        if x == a.0 {
            return Ok(a.1);
        }
        let t = (x - a.0) / (b.0 - a.0);
        Ok(a.1 + t * (b.1 - a.1))
    }

    /// Writes `x,y` rows (with header) for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in &self.breakpoints {
            out.push_str(&format!("{},{}\n", format_f64(*x), format_f64(*y)));
        }
        out
    }
}

pub fn eval_pl(g: &PlFunction, x: f64) -> Result<f64, HullError> {
    g.eval(x)
}

/// Lower (convex) and upper (concave) envelopes of a hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelopes {
    pub lower: PlFunction,
    pub upper: PlFunction,
}

/// Splits the hull into its lower and upper chains.
///
/// At an extreme x shared by two hull vertices (a vertical edge) the lower
/// chain takes the smaller y and the upper chain the larger.
pub fn envelopes(h: &HullPolygon) -> Result<Envelopes, HullError> {
    let v = h.vertices();
    let n = v.len();
    if n == 0 {
        return Err(HullError::Empty);
    }
    let key_left_low = |p: &Point| (p.0, p.1);
    let idx = |f: &dyn Fn(&Point, &Point) -> std::cmp::Ordering| (0..n).min_by(|&i, &j| f(&v[i], &v[j])).unwrap();
    let left_low = idx(&|a, b| key_left_low(a).partial_cmp(&key_left_low(b)).unwrap());
    let left_high = idx(&|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let right_low = idx(&|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let right_high = idx(&|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));

    let walk = |from: usize, to: usize| -> Vec<Point> {
        let mut out = vec![v[from]];
        let mut i = from;
        while i != to {
            i = (i + 1) % n;
            out.push(v[i]);
        }
        out
    };

    let lower_pts = if n <= 2 {
        lower_of_small(v)
    } else {
        walk(left_low, right_low)
    };
    let mut upper_pts = if n <= 2 {
        upper_of_small(v)
    } else {
        walk(right_high, left_high)
    };
    if n > 2 {
        upper_pts.reverse();
    }
    Ok(Envelopes {
        lower: PlFunction::new(lower_pts, Shape::Convex)?,
        upper: PlFunction::new(upper_pts, Shape::Concave)?,
    })
}

fn lower_of_small(v: &[Point]) -> Vec<Point> {
    match v {
        [a, b] if a.0 == b.0 => vec![if a.1 <= b.1 { *a } else { *b }],
        _ => v.to_vec(),
    }
}

fn upper_of_small(v: &[Point]) -> Vec<Point> {
    match v {
        [a, b] if a.0 == b.0 => vec![if a.1 >= b.1 { *a } else { *b }],
        _ => v.to_vec(),
    }
}

/// Membership with an absolute per-half-plane tolerance.
pub fn contains(h: &HullPolygon, p: Point, tol: f64) -> bool {
    h.margin(p) >= -tol
}
