//! Domains as finite unions of disjoint closed intervals, and uniform
//! sampling of a function's graph over them.
//!
//! The hull of sampled graph points is an inner approximation of the hull
//! of the true graph: envelopes built from samples satisfy
//! `g_l(sampled) >= g_l(true)` and `g_u(sampled) <= g_u(true)` pointwise.
//! Bounds are therefore certified only up to the sampling density.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr};

/// Grid points per interval used when nothing else is requested.
pub const DEFAULT_RESOLUTION: usize = 2049;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("domain has no intervals")]
    Empty,
    #[error("interval [{lo}, {hi}] has lo > hi or a non-finite endpoint")]
    BadInterval { lo: f64, hi: f64 },
    #[error("intervals [{0}, {1}] and [{2}, {3}] overlap")]
    Overlap(f64, f64, f64, f64),
    #[error("cannot parse domain `{text}`: {reason}")]
    Syntax { text: String, reason: String },
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Closed interval `[lo, hi]`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A finite union of pairwise disjoint closed intervals, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Domain {
    intervals: Vec<Interval>,
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Domain::new(pairs.into_iter().map(Interval::from).collect()).map_err(serde::de::Error::custom)
    }
}

impl Domain {
    /// Validates and sorts the intervals. Touching intervals count as overlapping.
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self, DomainError> {
        if intervals.is_empty() {
            return Err(DomainError::Empty);
        }
        for i in &intervals {
            if !(i.lo.is_finite() && i.hi.is_finite() && i.lo <= i.hi) {
                return Err(DomainError::BadInterval { lo: i.lo, hi: i.hi });
            }
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in intervals.windows(2) {
            if w[1].lo <= w[0].hi {
                return Err(DomainError::Overlap(w[0].lo, w[0].hi, w[1].lo, w[1].hi));
            }
        }
        Ok(Self { intervals })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, DomainError> {
        Self::new(vec![Interval { lo, hi }])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x))
    }

    /// The interval containing `x`, if any.
    pub fn interval_of(&self, x: f64) -> Option<Interval> {
        self.intervals.iter().copied().find(|i| i.contains(x))
    }

    /// Convex hull of the domain on the line: `(min lo, max hi)`.
    pub fn hull(&self) -> (f64, f64) {
        (self.intervals[0].lo, self.intervals[self.intervals.len() - 1].hi)
    }

    /// Uniform grid with `n` points per interval, endpoints included
    /// exactly. Grids for `n` and `2n - 1` are nested bit for bit.
    pub fn grid(&self, n: usize) -> Result<Vec<f64>, DomainError> {
        if n < 2 {
            return Err(DomainError::Resolution(n));
        }
        let mut xs = Vec::with_capacity(n * self.intervals.len());
        let steps = (n - 1) as f64;
        for iv in &self.intervals {
            if iv.lo == iv.hi {
                xs.push(iv.lo);
                continue;
            }
            let width = iv.hi - iv.lo;
            xs.push(iv.lo);
            // t = i / (n-1) is the correctly rounded value of the same rational
            // for i/(n-1) and 2i/(2n-2), which is what makes grids nest.
            xs.extend((1..n - 1).map(|i| iv.lo + width * (i as f64 / steps)));
            xs.push(iv.hi);
        }
        Ok(xs)
    }
}

/// Convex hull of K on the real line.
pub fn hull_of_k(d: &Domain) -> (f64, f64) {
    d.hull()
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str("u")?;
            }
            write!(f, "[{},{}]", iv.lo, iv.hi)?;
        }
        Ok(())
    }
}

impl FromStr for Domain {
    type Err = DomainError;

    /// Parses `"[a,b]"` or unions such as `"[a,b]u[c,d]"` (`U` and `∪` also accepted).
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let syntax = |reason: &str| DomainError::Syntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let normalized = text.replace(['∪', 'U'], "u");
        let mut intervals = Vec::new();
        for part in normalized.split('u') {
            let part = part.trim();
            let inner = part
                .strip_prefix('[')
                .and_then(|p| p.strip_suffix(']'))
                .ok_or_else(|| syntax("expected `[lo,hi]`"))?;
            let (lo, hi) = inner
                .split_once(',')
                .ok_or_else(|| syntax("expected a comma between endpoints"))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| syntax(&format!("bad number `{}`", s.trim())))
            };
            intervals.push(Interval {
                lo: num(lo)?,
                hi: num(hi)?,
            });
        }
        Domain::new(intervals)
    }
}

/// Graph of `f` evaluated on a uniform grid of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    pub points: Vec<(f64, f64)>,
    pub resolution: usize,
    pub domain: Domain,
}

impl SampledGraph {
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples `f` on `n_per_interval` grid points per interval of `d`.
///
/// The first grid point where evaluation fails aborts sampling; the error
/// carries the offending `x`.
pub fn sample(f: &Expr, d: &Domain, n_per_interval: usize) -> Result<SampledGraph, DomainError> {
    let grid = d.grid(n_per_interval)?;
    let ys: Vec<Result<f64, EvalError>> = grid.par_iter().map(|&x| f.eval(x)).collect();
    let points = grid
        .into_iter()
        .zip(ys)
        .map(|(x, y)| y.map(|y| (x, y)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampledGraph {
        points,
        resolution: n_per_interval,
        domain: d.clone(),
    })
}
