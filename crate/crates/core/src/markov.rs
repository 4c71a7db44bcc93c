//! Markov operators on finite spaces (row-stochastic matrices) and
//! conditional expectations over finite partitions, with pointwise checks
//! of the envelope bounds `g_l(E x) <= E f(x) <= g_u(E x)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::undefined_marker;
use crate::domain::Domain;
use crate::expr::{EvalError, Expr};
use crate::hull::{HullError, HullPolygon, PlFunction};
use crate::rng::SplitMix64;

/// Row sums must equal one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance of each pointwise bound check.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("matrix has no rows or no columns")]
    Empty,
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("weight {index} = {value} must be positive and finite")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("index {0} is missing from the partition or appears twice")]
    Partition(usize),
    #[error("block {0} is empty or has zero total weight")]
    EmptyBlock(usize),
    #[error("state value {0} lies outside the domain")]
    OutsideDomain(f64),
    #[error("internal invariant violated: averaged state {value} left the hull of the domain")]
    Invariant { value: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Envelope(#[from] HullError),
}

/// Nonnegative row-stochastic matrix mapping functions on a space of
/// `cols` states to functions on a space of `rows` states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl<'de> Deserialize<'de> for MarkovOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            matrix: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(d)?;
        MarkovOperator::from_rows(raw.matrix).map_err(serde::de::Error::custom)
    }
}

impl MarkovOperator {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MarkovError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(MarkovError::Empty);
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(MarkovError::Ragged {
                    row: r,
                    got: row.len(),
                    expected: n_cols,
                });
            }
            for (c, &value) in row.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(MarkovError::Negative { row: r, col: c, value });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MarkovError::RowSum { row: r, sum });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        Self { rows: n, cols: n, data }
    }

    /// The expectation under `weights` as a one-row operator.
    pub fn expectation(weights: &[f64]) -> Result<Self, MarkovError> {
        Self::from_rows(vec![weights.to_vec()])
    }

    /// Rows of i.i.d. uniform(0,1) entries, normalized, from a seeded SplitMix64.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row: Vec<f64> = (0..cols).map(|_| rng.next_f64()).collect();
            let sum: f64 = row.iter().sum();
            data.extend(row.into_iter().map(|v| v / sum));
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, MarkovError> {
        if v.len() != self.cols {
            return Err(MarkovError::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(m, x)| m * x).sum())
            .collect())
    }

    /// `self` after `first`: maps functions on `first`'s column space to
    /// functions on `self`'s row space.
    pub fn compose(&self, first: &MarkovOperator) -> Result<Self, MarkovError> {
        if self.cols != first.rows {
            return Err(MarkovError::Dimension {
                expected: self.cols,
                got: first.rows,
            });
        }
        let mut data = vec![0.0; self.rows * first.cols];
        for r in 0..self.rows {
            for (k, &m) in self.row(r).iter().enumerate() {
                for c in 0..first.cols {
                    data[r * first.cols + c] += m * first.data[k * first.cols + c];
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: first.cols,
            data,
        })
    }

    /// Max deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.rows)
            .map(|r| (self.row(r).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn apply(m: &MarkovOperator, v: &[f64]) -> Result<Vec<f64>, MarkovError> {
    m.apply(v)
}

/// A finite probability space with strictly positive atom weights and a
/// partition of its atoms (the sub-σ-algebra).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteConditioning {
    weights: Vec<f64>,
    partition: Vec<Vec<usize>>,
}

impl<'de> Deserialize<'de> for FiniteConditioning {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            weights: Vec<f64>,
            partition: Vec<Vec<usize>>,
        }
        let raw = Raw::deserialize(d)?;
        FiniteConditioning::new(raw.weights, raw.partition).map_err(serde::de::Error::custom)
    }
}

impl FiniteConditioning {
    pub fn new(weights: Vec<f64>, partition: Vec<Vec<usize>>) -> Result<Self, MarkovError> {
        if weights.is_empty() {
            return Err(MarkovError::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(MarkovError::BadWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(MarkovError::WeightSum(total));
        }
        let mut seen = vec![false; weights.len()];
        for (b, block) in partition.iter().enumerate() {
            if block.is_empty() {
                return Err(MarkovError::EmptyBlock(b));
            }
            for &i in block {
                if i >= seen.len() || seen[i] {
                    return Err(MarkovError::Partition(i));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(MarkovError::Partition(i));
        }
        Ok(Self { weights, partition })
    }

    pub fn uniform(n: usize, partition: Vec<Vec<usize>>) -> Result<Self, MarkovError> {
        Self::new(vec![1.0 / n as f64; n], partition)
    }

    /// Random positive weights (flat Dirichlet) and a random partition into
    /// at most `max_blocks` nonempty blocks, from a seeded SplitMix64.
    pub fn random(n: usize, max_blocks: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut weights = rng.flat_dirichlet(n);
        // strictly positive atoms; renormalize after flooring
        weights.iter_mut().for_each(|w| *w = w.max(1e-12));
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let k = 1 + rng.below(max_blocks.clamp(1, n));
        let mut blocks = vec![Vec::new(); k];
        // first k atoms seed the blocks so none is empty
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.below(i + 1));
        }
        for (pos, &i) in order.iter().enumerate() {
            let b = if pos < k { pos } else { rng.below(k) };
            blocks[b].push(i);
        }
        blocks.iter_mut().for_each(|b| b.sort_unstable());
        Self {
            weights,
            partition: blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    /// Merges blocks pairwise (block 2k with 2k+1): a coarser σ-algebra.
    pub fn coarsen(&self) -> Self {
        let partition = self
            .partition
            .chunks(2)
            .map(|pair| {
                let mut merged: Vec<usize> = pair.iter().flatten().copied().collect();
                merged.sort_unstable();
                merged
            })
            .collect();
        Self {
            weights: self.weights.clone(),
            partition,
        }
    }

    /// The conditional expectation as a square Markov operator.
    pub fn to_operator(&self) -> MarkovOperator {
        let n = self.len();
        let mut data = vec![0.0; n * n];
        for block in &self.partition {
            let mass: f64 = block.iter().map(|&i| self.weights[i]).sum();
            for &r in block {
                for &c in block {
                    data[r * n + c] = self.weights[c] / mass;
                }
            }
        }
        MarkovOperator { rows: n, cols: n, data }
    }

    /// Weighted block averages, constant on each block.
    pub fn conditional_expectation(&self, v: &[f64]) -> Result<Vec<f64>, MarkovError> {
        if v.len() != self.len() {
            return Err(MarkovError::Dimension {
                expected: self.len(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; v.len()];
        for (b, block) in self.partition.iter().enumerate() {
            let mass: f64 = block.iter().map(|&i| self.weights[i]).sum();
            if mass.is_nan() || mass <= 0.0 {
                return Err(MarkovError::EmptyBlock(b));
            }
            let avg = block.iter().map(|&i| self.weights[i] * v[i]).sum::<f64>() / mass;
            block.iter().for_each(|&i| out[i] = avg);
        }
        Ok(out)
    }
}

pub fn conditional_expectation(c: &FiniteConditioning, v: &[f64]) -> Result<Vec<f64>, MarkovError> {
    c.conditional_expectation(v)
}

/// One output coordinate of a bound check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateCheck {
    pub index: usize,
    /// Averaged state, `(M x)[i]`.
    pub mean_x: f64,
    /// Averaged function value, `(M f(x))[i]`.
    pub mean_f: f64,
    pub lower: f64,
    pub upper: f64,
    /// `mean_f - lower`; nonnegative when the lower bound holds.
    pub lower_margin: f64,
    /// `upper - mean_f`; nonnegative when the upper bound holds.
    pub upper_margin: f64,
    pub pass: bool,
    #[serde(serialize_with = "undefined_marker")]
    pub f_at_mean: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub c_l: Option<f64>,
    #[serde(serialize_with = "undefined_marker")]
    pub c_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub coordinates: Vec<CoordinateCheck>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.violations == 0
    }
}

fn check_states(
    m: &MarkovOperator,
    x_vals: &[f64],
    f: &Expr,
    domain: &Domain,
    lower: &PlFunction,
    upper: &PlFunction,
) -> Result<VerificationReport, MarkovError> {
    if let Some(&x) = x_vals.iter().find(|&&x| !domain.contains(x)) {
        return Err(MarkovError::OutsideDomain(x));
    }
    let fx = x_vals.iter().map(|&x| f.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let u = m.apply(x_vals)?;
    let w = m.apply(&fx)?;
    let (lo, hi) = domain.hull();
    let mut coordinates = Vec::with_capacity(u.len());
    for (index, (&mean_x, &mean_f)) in u.iter().zip(&w).enumerate() {
        if !(mean_x >= lo - 1e-12 && mean_x <= hi + 1e-12) {
            return Err(MarkovError::Invariant { value: mean_x });
        }
        let gl = lower.eval(mean_x)?;
        let gu = upper.eval(mean_x)?;
        let lower_margin = mean_f - gl;
        let upper_margin = gu - mean_f;
        let f_at_mean = if domain.contains(mean_x) {
            Some(f.eval(mean_x)?)
        } else {
            None
        };
        let ratio = |g: f64| f_at_mean.filter(|&v| v != 0.0).map(|v| g / v);
        coordinates.push(CoordinateCheck {
            index,
            mean_x,
            mean_f,
            lower: gl,
            upper: gu,
            lower_margin,
            upper_margin,
            pass: lower_margin >= -BOUND_TOL && upper_margin >= -BOUND_TOL,
            f_at_mean,
            c_l: ratio(gl),
            c_u: ratio(gu),
        });
    }
    Ok(VerificationReport {
        tolerance: BOUND_TOL,
        checked: coordinates.len(),
        violations: coordinates.iter().filter(|c| !c.pass).count(),
        worst_margin: coordinates
            .iter()
            .map(|c| c.lower_margin.min(c.upper_margin))
            .fold(f64::INFINITY, f64::min),
        coordinates,
    })
}

/// Checks `g_l(M x) <= M f(x) <= g_u(M x)` coordinatewise.
pub fn verify_markov_bounds(
    m: &MarkovOperator,
    x_vals: &[f64],
    f: &Expr,
    domain: &Domain,
    lower: &PlFunction,
    upper: &PlFunction,
) -> Result<VerificationReport, MarkovError> {
    check_states(m, x_vals, f, domain, lower, upper)
}

/// Checks `g_l(E[X|F]) <= E[f(X)|F] <= g_u(E[X|F])` at every atom. All
/// atoms carry positive weight, so "almost surely" means "everywhere".
pub fn verify_conditional_bounds(
    c: &FiniteConditioning,
    x_vals: &[f64],
    f: &Expr,
    domain: &Domain,
    lower: &PlFunction,
    upper: &PlFunction,
) -> Result<VerificationReport, MarkovError> {
    if x_vals.len() != c.len() {
        return Err(MarkovError::Dimension {
            expected: c.len(),
            got: x_vals.len(),
        });
    }
    check_states(&c.to_operator(), x_vals, f, domain, lower, upper)
}

/// Applies `m` to each coordinate of a vector of plane points; every
/// output is a convex combination of inputs, hence inside any convex set
/// containing them. Returns the worst hull margin of the outputs.
pub fn worst_margin_after(m: &MarkovOperator, points: &[(f64, f64)], hull: &HullPolygon) -> Result<f64, MarkovError> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let u = m.apply(&xs)?;
    let w = m.apply(&ys)?;
    Ok(u.iter()
        .zip(&w)
        .map(|(&a, &b)| hull.margin((a, b)))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_averaging() {
        let v = [1.0, 2.0, 4.0];
        assert_eq!(MarkovOperator::identity(3).apply(&v).unwrap(), v.to_vec());
        let avg = MarkovOperator::expectation(&[1.0 / 3.0; 3]).unwrap();
        assert!((avg.apply(&v).unwrap()[0] - 7.0 / 3.0).abs() < 1e-15);
        let m = MarkovOperator::from_rows(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5]]).unwrap();
        assert_eq!(m.apply(&v).unwrap(), vec![1.0, 3.0]);
        assert_eq!(m.apply(&[1.0]), Err(MarkovError::Dimension { expected: 3, got: 1 }));
    }

    #[test]
    fn operator_validation() {
        assert_eq!(MarkovOperator::from_rows(vec![]), Err(MarkovError::Empty));
        assert!(matches!(
            MarkovOperator::from_rows(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(MarkovError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            MarkovOperator::from_rows(vec![vec![1.5, -0.5]]),
            Err(MarkovError::Negative { .. })
        ));
        assert!(matches!(
            MarkovOperator::from_rows(vec![vec![0.5, 0.4]]),
            Err(MarkovError::RowSum { .. })
        ));
        let parsed: MarkovOperator = serde_json::from_str(r#"{"matrix": [[0.25, 0.75]]}"#).unwrap();
        assert_eq!(parsed.row(0), &[0.25, 0.75]);
        assert!(serde_json::from_str::<MarkovOperator>(r#"{"matrix": [[0.2, 0.7]]}"#).is_err());
    }

    #[test]
    fn conditional_expectation_examples() {
        let v = [1.0, 3.0, 7.0];
        let c = FiniteConditioning::new(vec![0.25, 0.25, 0.5], vec![vec![0, 1], vec![2]]).unwrap();
        assert_eq!(c.conditional_expectation(&v).unwrap(), vec![2.0, 2.0, 7.0]);
        let trivial = FiniteConditioning::new(vec![0.25, 0.25, 0.5], vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(trivial.conditional_expectation(&v).unwrap(), vec![4.5; 3]);
        let finest = FiniteConditioning::new(vec![0.25, 0.25, 0.5], vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(finest.conditional_expectation(&v).unwrap(), v.to_vec());
        // operator form agrees
        let op = c.to_operator();
        assert_eq!(op.apply(&v).unwrap(), vec![2.0, 2.0, 7.0]);
    }

    #[test]
    fn conditioning_validation() {
        assert!(matches!(
            FiniteConditioning::new(vec![0.5, 0.5], vec![vec![0]]),
            Err(MarkovError::Partition(1))
        ));
        assert!(matches!(
            FiniteConditioning::new(vec![0.5, 0.5], vec![vec![0, 1], vec![1]]),
            Err(MarkovError::Partition(1))
        ));
        assert!(matches!(
            FiniteConditioning::new(vec![0.5, 0.5], vec![vec![0, 1], vec![]]),
            Err(MarkovError::EmptyBlock(1))
        ));
        assert!(matches!(
            FiniteConditioning::new(vec![1.0, 0.0], vec![vec![0, 1]]),
            Err(MarkovError::BadWeight { index: 1, .. })
        ));
        assert!(matches!(
            FiniteConditioning::new(vec![0.5, 0.6], vec![vec![0, 1]]),
            Err(MarkovError::WeightSum(_))
        ));
        let parsed: FiniteConditioning =
            serde_json::from_str(r#"{"weights": [0.5, 0.5], "partition": [[1], [0]]}"#).unwrap();
        assert_eq!(parsed.partition().len(), 2);
    }

    #[test]
    fn random_constructions_are_valid() {
        for seed in 0..20 {
            let m = MarkovOperator::random(8, 16, seed);
            assert!(m.row_sum_error() <= ROW_SUM_TOL);
            let c = FiniteConditioning::random(64, 10, seed);
            let rebuilt = FiniteConditioning::new(c.weights().to_vec(), c.partition().to_vec()).unwrap();
            assert_eq!(rebuilt, c);
            assert!(c.to_operator().row_sum_error() <= ROW_SUM_TOL);
        }
        assert_eq!(MarkovOperator::random(3, 4, 7), MarkovOperator::random(3, 4, 7));
    }

    #[test]
    fn composition_is_stochastic() {
        let a = MarkovOperator::random(8, 16, 1);
        let b = MarkovOperator::random(16, 5, 2);
        let ab = a.compose(&b).unwrap();
        assert_eq!((ab.rows(), ab.cols()), (8, 5));
        assert!(ab.row_sum_error() <= ROW_SUM_TOL);
        assert!(b.compose(&a).is_err());
    }

    #[test]
    fn coarsening_merges_blocks() {
        let c = FiniteConditioning::uniform(4, vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let coarse = c.coarsen();
        assert_eq!(coarse.partition(), &[vec![0, 1], vec![2, 3]]);
        assert_eq!(coarse.coarsen().partition(), &[vec![0, 1, 2, 3]]);
    }
}
