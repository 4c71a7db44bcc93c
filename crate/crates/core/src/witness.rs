//! Finitely supported distributions on the domain, and the construction of
//! a distribution whose moment pair `(E[X], E[f(X)])` hits a given point of
//! the sampled hull using at most three atoms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::expr::{EvalError, Expr};
use crate::hull::{cross, HullPolygon, Point};

/// Tolerance on the total weight of a distribution.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Default membership tolerance for witness targets.
pub const TARGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("support and weights differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty support")]
    Empty,
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("support point {0} lies outside the domain")]
    OutsideDomain(f64),
    #[error("target ({x}, {y}) is outside the hull (distance {distance:e})")]
    OutsideHull { x: f64, y: f64, distance: f64 },
    #[error("no non-degenerate triangle of the fan contains the target")]
    Degenerate,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Probability weights on finitely many points of the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates weights and membership of every support point in `domain`.
    pub fn new(support: Vec<f64>, weights: Vec<f64>, domain: &Domain) -> Result<Self, WitnessError> {
        let dist = Self::unchecked(support, weights)?;
        if let Some(&x) = dist.support.iter().find(|&&x| !domain.contains(x)) {
            return Err(WitnessError::OutsideDomain(x));
        }
        Ok(dist)
    }

    /// Validates weights only.
    pub fn unchecked(support: Vec<f64>, weights: Vec<f64>) -> Result<Self, WitnessError> {
        if support.len() != weights.len() {
            return Err(WitnessError::LengthMismatch(support.len(), weights.len()));
        }
        if support.is_empty() {
            return Err(WitnessError::Empty);
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(WitnessError::BadWeight(w));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(WitnessError::WeightSum(total));
        }
        Ok(Self { support, weights })
    }

    pub fn point_mass(x: f64) -> Self {
        Self {
            support: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| w * x).sum()
    }

    /// `(E[X], E[f(X)])` by direct summation.
    pub fn moments(&self, f: &Expr) -> Result<Point, EvalError> {
        let mut ex = 0.0;
        let mut efx = 0.0;
        for (&x, &w) in self.support.iter().zip(&self.weights) {
            ex += w * x;
            efx += w * f.eval(x)?;
        }
        Ok((ex, efx))
    }
}

/// A witness distribution together with the graph points it charges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub distribution: DiscreteDistribution,
    pub atoms: Vec<Point>,
}

impl Witness {
    /// Moment pair recomputed from the atoms.
    pub fn moments(&self) -> Point {
        self.atoms
            .iter()
            .zip(self.distribution.weights())
            .fold((0.0, 0.0), |(a, b), (p, w)| (a + w * p.0, b + w * p.1))
    }
}

/// Barycentric coordinates of `p` in triangle `(a, b, c)`, or `None` if flat.
fn barycentric(p: Point, a: Point, b: Point, c: Point) -> Option<[f64; 3]> {
    let area = cross(a, b, c);
    let scale = (b.0 - a.0)
        .abs()
        .max((c.0 - a.0).abs())
        .max((b.1 - a.1).abs())
        .max((c.1 - a.1).abs());
    if area.is_nan() || area.abs() <= 64.0 * f64::EPSILON * scale * scale {
        return None;
    }
    let la = cross(p, b, c) / area;
    let lb = cross(p, c, a) / area;
    Some([la, lb, 1.0 - la - lb])
}

fn build(atoms: Vec<(Point, f64)>) -> Witness {
    let mut atoms: Vec<(Point, f64)> = atoms.into_iter().filter(|(_, w)| *w > 0.0).collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.iter_mut().for_each(|a| a.1 /= total);
    Witness {
        distribution: DiscreteDistribution {
            support: atoms.iter().map(|a| a.0 .0).collect(),
            weights: atoms.iter().map(|a| a.1).collect(),
        },
        atoms: atoms.into_iter().map(|a| a.0).collect(),
    }
}

/// Two-atom solution on segment `a`-`b` by orthogonal projection.
fn on_segment(target: Point, a: Point, b: Point) -> Witness {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((target.0 - a.0) * dx + (target.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    build(vec![(a, 1.0 - t), (b, t)])
}

/// Distribution with at most three atoms, all hull vertices, whose moment
/// pair equals `target`.
///
/// The hull is fan-triangulated from vertex 0 and the lowest-index
/// triangle containing the target is solved for barycentric weights. A
/// target on the hull boundary (within [`TARGET_TOL`]) resolves to the
/// two endpoints of its edge. Flat triangles are skipped in favor of
/// their neighbors.
pub fn witness(h: &HullPolygon, target: Point) -> Result<Witness, WitnessError> {
    let v = h.vertices();
    let outside = || WitnessError::OutsideHull {
        x: target.0,
        y: target.1,
        distance: h.distance(target),
    };
    if v.is_empty() || h.margin(target) < -TARGET_TOL {
        return Err(outside());
    }
    if let Some(&vertex) = v.iter().find(|&&p| p == target) {
        return Ok(build(vec![(vertex, 1.0)]));
    }
    match v.len() {
        1 => return Ok(build(vec![(v[0], 1.0)])),
        2 => return Ok(on_segment(target, v[0], v[1])),
        _ => {}
    }

    // boundary targets: the edge with the smallest margin, if within tolerance
    let (edge, edge_margin) = h
        .edges()
        .enumerate()
        .map(|(i, (a, b))| (i, cross(a, b, target) / (a.0 - b.0).hypot(a.1 - b.1)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if edge_margin.abs() <= TARGET_TOL {
        let n = v.len();
        return Ok(on_segment(target, v[edge], v[(edge + 1) % n]));
    }

    let a = v[0];
    let mut best: Option<(usize, [f64; 3], f64)> = None;
    for i in 1..v.len() - 1 {
        let Some(l) = barycentric(target, a, v[i], v[i + 1]) else {
            continue;
        };
        let worst = l[0].min(l[1]).min(l[2]);
        if worst >= 0.0 {
            best = Some((i, l, worst));
            break;
        }
        if best.is_none_or(|b| worst > b.2) {
            best = Some((i, l, worst));
        }
    }
    let (i, l, _) = best.ok_or(WitnessError::Degenerate)?;
    let l = l.map(|w| w.max(0.0));
    Ok(build(vec![(a, l[0]), (v[i], l[1]), (v[i + 1], l[2])]))
}
