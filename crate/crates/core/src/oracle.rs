//! Brute-force ground truth for the hull machinery.
//!
//! Random discrete distributions are drawn on the sample grid and their
//! exact moment pairs `(E[X], E[f(X)])` are checked for membership in the
//! sampled hull. Every draw is a pure function of `(seed, trial)` using
//! the SplitMix64 generator in [`crate::rng`]; support indices are uniform
//! on the grid and weights are flat-Dirichlet via normalized inverse-CDF
//! exponentials.
//!
//! For continuous laws, [`mc_mean`] gives Monte-Carlo estimates with
//! standard errors and [`law_moments`] the quadrature values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, SampledGraph};
use crate::expr::{EvalError, Expr};
use crate::hull::{HullPolygon, Point};
use crate::quadrature::integrate;
use crate::rng::SplitMix64;
use crate::witness::{DiscreteDistribution, WitnessError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid oracle configuration: {0}")]
    Config(String),
    #[error("law {law} is not supported inside the domain {domain}")]
    Support { law: String, domain: String },
    #[error("invalid law parameters: {0}")]
    Law(String),
    #[error(transparent)]
    Distribution(#[from] WitnessError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_trials: usize,
    /// Inclusive range of support sizes.
    pub support_size_range: (usize, usize),
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_trials: 10_000,
            support_size_range: (1, 8),
            seed: 0x5EED,
            tolerance: 1e-9,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let (lo, hi) = self.support_size_range;
        if self.n_trials == 0 {
            return Err(OracleError::Config("n_trials must be at least 1".into()));
        }
        if lo == 0 || lo > hi {
            return Err(OracleError::Config(format!("bad support size range ({lo}, {hi})")));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(OracleError::Config("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleTrial {
    pub distribution: DiscreteDistribution,
    pub moment: Point,
}

/// Trial `trial` of the oracle: support drawn from the grid, moment pair
/// summed directly from the sampled values.
pub fn random_distribution(graph: &SampledGraph, cfg: &OracleConfig, trial: usize) -> Result<OracleTrial, OracleError> {
    cfg.validate()?;
    if trial >= cfg.n_trials {
        return Err(OracleError::Config(format!(
            "trial {trial} out of range for {} trials",
            cfg.n_trials
        )));
    }
    let mut rng = SplitMix64::for_stream(cfg.seed, trial as u64);
    let (lo, hi) = cfg.support_size_range;
    let k = lo + rng.below(hi - lo + 1);
    let atoms: Vec<Point> = (0..k).map(|_| graph.points[rng.below(graph.len())]).collect();
    let weights = rng.flat_dirichlet(k);
    let moment = atoms
        .iter()
        .zip(&weights)
        .fold((0.0, 0.0), |(a, b), (p, w)| (a + w * p.0, b + w * p.1));
    let distribution = DiscreteDistribution::new(atoms.iter().map(|p| p.0).collect(), weights, &graph.domain)?;
    Ok(OracleTrial { distribution, moment })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub trials: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    /// Smallest hull margin over all trials (negative means outside).
    pub worst_margin: f64,
    pub seed: u64,
    pub tolerance: f64,
}

/// Membership check of every trial's moment pair in `hull`.
pub fn run_oracle(hull: &HullPolygon, graph: &SampledGraph, cfg: &OracleConfig) -> Result<OracleSummary, OracleError> {
    cfg.validate()?;
    let margins: Vec<f64> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| random_distribution(graph, cfg, t).map(|trial| hull.margin(trial.moment)))
        .collect::<Result<_, _>>()?;
    let passed = margins.iter().filter(|&&m| m >= -cfg.tolerance).count();
    Ok(OracleSummary {
        trials: cfg.n_trials,
        passed,
        pass_fraction: passed as f64 / cfg.n_trials as f64,
        worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        seed: cfg.seed,
        tolerance: cfg.tolerance,
    })
}

/// Continuous laws for Monte-Carlo comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ContinuousLaw {
    Uniform { a: f64, b: f64 },
    TruncatedNormal { mu: f64, sigma: f64, a: f64, b: f64 },
}

impl ContinuousLaw {
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { a, b } | Self::TruncatedNormal { a, b, .. } => (a, b),
        }
    }

    fn check(&self, domain: &Domain) -> Result<(), OracleError> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(OracleError::Law(format!(
                "support [{a}, {b}] must be a nondegenerate interval"
            )));
        }
        if let Self::TruncatedNormal { mu, sigma, .. } = *self {
            if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
                return Err(OracleError::Law(format!(
                    "need finite mu and sigma > 0, got ({mu}, {sigma})"
                )));
            }
        }
        let inside = domain.interval_of(a).is_some_and(|iv| iv.contains(b));
        if !inside {
            return Err(OracleError::Support {
                law: format!("{self:?}"),
                domain: domain.to_string(),
            });
        }
        Ok(())
    }

    fn draw(&self, rng: &mut SplitMix64) -> f64 {
        match *self {
            Self::Uniform { a, b } => a + (b - a) * rng.next_f64(),
            Self::TruncatedNormal { mu, sigma, a, b } => loop {
                // rejection from the untruncated normal; fall back to uniform
                // proposals with density weighting when the window is far out
                let z = mu + sigma * rng.standard_normal();
                if (a..=b).contains(&z) {
                    break z;
                }
                let u = a + (b - a) * rng.next_f64();
                let peak = if (a..=b).contains(&mu) {
                    mu
                } else if mu < a {
                    a
                } else {
                    b
                };
                let accept = (-((u - mu).powi(2) - (peak - mu).powi(2)) / (2.0 * sigma * sigma)).exp();
                if rng.next_f64() < accept {
                    break u;
                }
            },
        }
    }

    /// Unnormalized density on the support.
    fn density(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform { .. } => 1.0,
            Self::TruncatedNormal { mu, sigma, .. } => (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean_x: f64,
    pub se_x: f64,
    pub mean_f: f64,
    pub se_f: f64,
    pub n_samples: usize,
}

/// Sample means of `X` and `f(X)` under `law`, with standard errors.
pub fn mc_mean(
    f: &Expr,
    law: &ContinuousLaw,
    domain: &Domain,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    law.check(domain)?;
    if n_samples < 2 {
        return Err(OracleError::Config("need at least 2 samples".into()));
    }
    let mut rng = SplitMix64::new(seed);
    // Welford accumulators
    let (mut mx, mut sx, mut mf, mut sf) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n_samples {
        let x = law.draw(&mut rng);
        let y = f.eval(x)?;
        let k = (i + 1) as f64;
        let dx = x - mx;
        mx += dx / k;
        sx += dx * (x - mx);
        let dy = y - mf;
        mf += dy / k;
        sf += dy * (y - mf);
    }
    let n = n_samples as f64;
    Ok(McEstimate {
        mean_x: mx,
        se_x: (sx / (n - 1.0) / n).sqrt(),
        mean_f: mf,
        se_f: (sf / (n - 1.0) / n).sqrt(),
        n_samples,
    })
}

/// `(E[X], E[f(X)])` under `law` by adaptive quadrature.
pub fn law_moments(f: &Expr, law: &ContinuousLaw, domain: &Domain) -> Result<Point, OracleError> {
    law.check(domain)?;
    let (a, b) = law.support();
    let tol = 1e-15;
    let mass = integrate(&|x| Ok::<_, EvalError>(law.density(x)), a, b, tol)?;
    let ex = integrate(&|x| Ok::<_, EvalError>(x * law.density(x)), a, b, tol)?;
    let efx = integrate(&|x| f.eval(x).map(|y| y * law.density(x)), a, b, tol)?;
    Ok((ex / mass, efx / mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::sample;
    use crate::expr::parse;
    use crate::hull::convex_hull_2d;

    fn ex1() -> (Expr, Domain) {
        (parse("2 - x + sin(2*pi*x)").unwrap(), "[0,1]".parse().unwrap())
    }

    fn ex2() -> (Expr, Domain) {
        (parse("1/x").unwrap(), "[-2,-1]u[1,2]".parse().unwrap())
    }

    #[test]
    fn point_mass_moment() {
        let (f, d) = ex1();
        let dist = DiscreteDistribution::new(vec![0.5], vec![1.0], &d).unwrap();
        let (ex, efx) = dist.moments(&f).unwrap();
        assert_eq!(ex, 0.5);
        assert!((efx - 1.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_uniform_moment() {
        let (f, d) = ex2();
        let dist = DiscreteDistribution::new(vec![-2.0, -1.0, 1.0, 2.0], vec![0.25; 4], &d).unwrap();
        assert_eq!(dist.moments(&f).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn trials_are_reproducible() {
        let (f, d) = ex1();
        let g = sample(&f, &d, 257).unwrap();
        let cfg = OracleConfig {
            n_trials: 10,
            ..OracleConfig::default()
        };
        for t in 0..10 {
            let a = random_distribution(&g, &cfg, t).unwrap();
            let b = random_distribution(&g, &cfg, t).unwrap();
            assert_eq!(a.moment.0.to_bits(), b.moment.0.to_bits());
            assert_eq!(a.moment.1.to_bits(), b.moment.1.to_bits());
            assert_eq!(a.distribution, b.distribution);
            let k = a.distribution.len();
            assert!((1..=8).contains(&k));
        }
        assert!(random_distribution(&g, &cfg, 10).is_err());
    }

    #[test]
    fn outside_support_is_rejected() {
        let (_, d) = ex2();
        assert!(matches!(
            DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5], &d),
            Err(WitnessError::OutsideDomain(_))
        ));
    }

    #[test]
    fn small_oracle_run_passes() {
        for (f, d) in [ex1(), ex2()] {
            let g = sample(&f, &d, 129).unwrap();
            let h = convex_hull_2d(&g.points).unwrap();
            let cfg = OracleConfig {
                n_trials: 500,
                ..OracleConfig::default()
            };
            let s = run_oracle(&h, &g, &cfg).unwrap();
            assert_eq!(s.pass_fraction, 1.0);
            assert!(s.worst_margin >= -1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let bad = OracleConfig {
            support_size_range: (3, 2),
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OracleConfig {
            n_trials: 0,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn uniform_law_moments() {
        let (f, d) = ex1();
        let (ex, efx) = law_moments(&f, &ContinuousLaw::Uniform { a: 0.0, b: 1.0 }, &d).unwrap();
        assert!((ex - 0.5).abs() < 1e-12 && (efx - 1.5).abs() < 1e-12);
        let (f, d) = ex2();
        let (ex, efx) = law_moments(&f, &ContinuousLaw::Uniform { a: 1.0, b: 2.0 }, &d).unwrap();
        assert!((ex - 1.5).abs() < 1e-12);
        assert!((efx - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn law_support_must_fit_one_interval() {
        let (f, d) = ex2();
        let r = mc_mean(&f, &ContinuousLaw::Uniform { a: -1.5, b: 1.5 }, &d, 100, 1);
        assert!(matches!(r, Err(OracleError::Support { .. })));
        let r = mc_mean(
            &f,
            &ContinuousLaw::TruncatedNormal {
                mu: 0.0,
                sigma: -1.0,
                a: 1.0,
                b: 2.0,
            },
            &d,
            100,
            1,
        );
        assert!(matches!(r, Err(OracleError::Law(_))));
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let (f, d) = ex1();
        for law in [
            ContinuousLaw::Uniform { a: 0.0, b: 1.0 },
            ContinuousLaw::TruncatedNormal {
                mu: 0.3,
                sigma: 0.2,
                a: 0.0,
                b: 1.0,
            },
            ContinuousLaw::TruncatedNormal {
                mu: 3.0,
                sigma: 0.5,
                a: 0.0,
                b: 1.0,
            },
        ] {
            let est = mc_mean(&f, &law, &d, 200_000, 42).unwrap();
            let (ex, efx) = law_moments(&f, &law, &d).unwrap();
            assert!((est.mean_x - ex).abs() < 4.0 * est.se_x, "{law:?} {est:?} {ex}");
            assert!((est.mean_f - efx).abs() < 4.0 * est.se_f, "{law:?} {est:?} {efx}");
        }
    }
}
