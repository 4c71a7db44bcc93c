//! Sharp bounds on `E[f(X)]` given only `E[X]`.
//!
//! For `X` taking values in a set `K` and any `f`, the point
//! `(E[X], E[f(X)])` lies in the convex hull of the graph of `f`. Reading
//! the hull's lower and upper boundary as functions `g_l` (convex) and
//! `g_u` (concave) gives
//!
//! ```text
//! g_l(E[X]) <= E[f(X)] <= g_u(E[X])
//! ```
//!
//! and every point between them is attained by some distribution on `K`.
//! This crate computes the envelopes from a sampled graph ([`hull`]),
//! evaluates the bounds and derived constants ([`bounds`]), builds
//! attaining distributions ([`witness`]), checks the same bounds for
//! Markov operators and conditional expectations on finite spaces
//! ([`markov`]), and validates all of it against brute force ([`oracle`]).
//!
//! ```
//! use hullbound::Analysis;
//!
//! let a = Analysis::parse("1/x", "[-2,-1]u[1,2]", 257).unwrap();
//! let r = a.bounds_at(0.0).unwrap();
//! assert!((r.lower + 0.5).abs() < 1e-12 && (r.upper - 0.5).abs() < 1e-12);
//! assert!(r.f_at_mean.is_none());
//! ```

pub mod analysis;
pub mod bounds;
pub mod domain;
pub mod expr;
pub mod hull;
pub mod json;
pub mod markov;
pub mod oracle;
pub mod quadrature;
pub mod reference;
pub mod rng;
pub mod witness;

pub use analysis::Analysis;
pub use bounds::{bounds_at, constants, jensen_check, jensen_check_upper, BoundsReport, ConstantsReport};
pub use domain::{hull_of_k, sample, Domain, Interval, SampledGraph, DEFAULT_RESOLUTION};
pub use expr::{parse, Expr};
pub use hull::{contains, convex_hull_2d, envelopes, eval_pl, Envelopes, HullPolygon, PlFunction, Point, Shape};
pub use markov::{
    conditional_expectation, verify_conditional_bounds, verify_markov_bounds, FiniteConditioning, MarkovOperator,
    VerificationReport,
};
pub use oracle::{law_moments, mc_mean, random_distribution, run_oracle, ContinuousLaw, OracleConfig, OracleSummary};
pub use witness::{witness, DiscreteDistribution, Witness};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Eval(#[from] expr::EvalError),
    #[error(transparent)]
    Domain(#[from] domain::DomainError),
    #[error(transparent)]
    Hull(#[from] hull::HullError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error(transparent)]
    Witness(#[from] witness::WitnessError),
    #[error(transparent)]
    Markov(#[from] markov::MarkovError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
}
