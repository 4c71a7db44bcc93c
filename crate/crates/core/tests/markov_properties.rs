//! Finite-space checks for Markov operators and conditional expectations.

use hullbound::markov::{worst_margin_after, ROW_SUM_TOL};
use hullbound::reference::{EX1_DOMAIN, EX1_FN, EX2_DOMAIN, EX2_FN};
use hullbound::rng::SplitMix64;
use hullbound::{verify_conditional_bounds, verify_markov_bounds, Analysis, FiniteConditioning, MarkovOperator};

fn grid_states(a: &Analysis, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| a.graph.points[rng.below(a.graph.len())].0).collect()
}

#[test]
fn identity_reduces_to_sandwich_and_averaging_to_expectation() {
    let a = Analysis::parse(EX2_FN, EX2_DOMAIN, 257).unwrap();
    let xs = grid_states(&a, 16, 3);
    let r = verify_markov_bounds(
        &MarkovOperator::identity(16),
        &xs,
        &a.f,
        a.domain(),
        a.lower(),
        a.upper(),
    )
    .unwrap();
    assert!(r.all_pass());
    assert!(r.coordinates.iter().zip(&xs).all(|(c, &x)| c.mean_x == x));

    let avg = MarkovOperator::expectation(&[1.0 / 16.0; 16]).unwrap();
    let r = verify_markov_bounds(&avg, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
    let mean: f64 = xs.iter().sum::<f64>() / 16.0;
    let b = a.bounds_at(r.coordinates[0].mean_x).unwrap();
    assert!((r.coordinates[0].mean_x - mean).abs() < 1e-15);
    assert_eq!((r.coordinates[0].lower, r.coordinates[0].upper), (b.lower, b.upper));
}

#[test]
fn states_outside_domain_are_rejected() {
    let a = Analysis::parse(EX2_FN, EX2_DOMAIN, 65).unwrap();
    let m = MarkovOperator::identity(2);
    assert!(verify_markov_bounds(&m, &[0.0, 1.0], &a.f, a.domain(), a.lower(), a.upper()).is_err());
}

#[test]
fn operators_preserve_the_hull() {
    for (f, d) in [(EX1_FN, EX1_DOMAIN), (EX2_FN, EX2_DOMAIN)] {
        let a = Analysis::parse(f, d, 257).unwrap();
        for seed in 0..30 {
            let mut rng = SplitMix64::new(1000 + seed);
            let pts: Vec<(f64, f64)> = (0..16).map(|_| a.graph.points[rng.below(a.graph.len())]).collect();
            let m = MarkovOperator::random(8, 16, seed);
            assert!(worst_margin_after(&m, &pts, &a.hull).unwrap() >= -1e-9);
        }
    }
}

#[test]
fn composition_keeps_stochasticity_and_bounds() {
    let a = Analysis::parse(EX1_FN, EX1_DOMAIN, 257).unwrap();
    for seed in 0..20 {
        let first = MarkovOperator::random(12, 16, seed);
        let second = MarkovOperator::random(8, 12, seed + 100);
        let both = second.compose(&first).unwrap();
        assert!(both.row_sum_error() <= ROW_SUM_TOL);
        let xs = grid_states(&a, 16, seed);
        let r = verify_markov_bounds(&both, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
        assert!(r.all_pass(), "seed {seed}: worst {}", r.worst_margin);
    }
}

#[test]
fn tower_of_coarsenings_never_violates() {
    for (f, d) in [(EX1_FN, EX1_DOMAIN), (EX2_FN, EX2_DOMAIN)] {
        let a = Analysis::parse(f, d, 257).unwrap();
        for seed in 0..20 {
            let mut c = FiniteConditioning::random(64, 16, seed);
            let xs = grid_states(&a, 64, seed + 7);
            loop {
                let r = verify_conditional_bounds(&c, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
                assert!(r.all_pass());
                if c.partition().len() == 1 {
                    break;
                }
                c = c.coarsen();
            }
        }
    }
}

#[test]
fn trivial_and_finest_partitions() {
    let a = Analysis::parse(EX1_FN, EX1_DOMAIN, 257).unwrap();
    let xs = grid_states(&a, 8, 5);
    let trivial = FiniteConditioning::uniform(8, vec![(0..8).collect()]).unwrap();
    let r = verify_conditional_bounds(&trivial, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
    let mean = xs.iter().sum::<f64>() / 8.0;
    let b = a.bounds_at(r.coordinates[0].mean_x).unwrap();
    assert!((r.coordinates[0].mean_x - mean).abs() < 1e-15);
    assert!(r.coordinates.iter().all(|c| c.lower == b.lower && c.upper == b.upper));

    let finest = FiniteConditioning::uniform(8, (0..8).map(|i| vec![i]).collect()).unwrap();
    let r = verify_conditional_bounds(&finest, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
    assert!(r.all_pass());
    assert!(r.coordinates.iter().zip(&xs).all(|(c, &x)| c.mean_x == x));
}

#[test]
fn jensen_for_markov_operators() {
    for f in ["x^2", "exp(x)", "abs(x)"] {
        let a = Analysis::parse(f, "[-1,1]", 513).unwrap();
        assert!(a.jensen_reduced());
        for seed in 0..20 {
            let m = MarkovOperator::random(8, 16, seed);
            let xs = grid_states(&a, 16, seed);
            let r = verify_markov_bounds(&m, &xs, &a.f, a.domain(), a.lower(), a.upper()).unwrap();
            for c in &r.coordinates {
                assert!(c.mean_f >= c.f_at_mean.unwrap() - 1e-7, "{f}");
            }
        }
    }
}
