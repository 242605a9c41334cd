use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use qpenny::evolve::{gaussian_mutate, tournament_select, GaConfig};
use qpenny::rng::stream;
use qpenny::strategy::{Chromosome, MoveKind, Schema};

fn interior_parent() -> Chromosome {
    let schema = Arc::new(Schema::new(vec![MoveKind::PureQuantum; 2]));
    Chromosome::new(schema, vec![FRAC_PI_4, FRAC_PI_2, FRAC_PI_4, FRAC_PI_2]).unwrap()
}

#[test]
fn mutation_rate_and_step_size() {
    let cfg = GaConfig::default();
    let parent = interior_parent();
    let mut rng = stream(5, 0);
    let mut deltas = Vec::new();
    let mut total = 0usize;
    while total < 200_000 {
        let child = gaussian_mutate(&parent, &cfg, &mut rng);
        for (a, b) in parent.genes().iter().zip(child.genes()) {
            if a != b {
                deltas.push(b - a);
            }
            total += 1;
        }
    }
    let fraction = deltas.len() as f64 / total as f64;
    assert!((fraction - cfg.mutation_rate).abs() <= 0.004, "fraction {fraction}");
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    let std = (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 0.005, "mean step {mean}");
    assert!((std - cfg.mutation_std).abs() <= 0.01, "std {std}");
}

#[test]
fn mutation_clamps_to_bounds() {
    let schema = Arc::new(Schema::new(vec![MoveKind::ClassicalMixed]));
    let parent = Chromosome::new(schema, vec![1.0]).unwrap();
    let cfg = GaConfig { mutation_rate: 1.0, mutation_std: 5.0, ..GaConfig::default() };
    let mut rng = stream(9, 0);
    let mut at_top = 0;
    for _ in 0..1000 {
        let g = gaussian_mutate(&parent, &cfg, &mut rng).genes()[0];
        assert!((0.0..=1.0).contains(&g));
        at_top += usize::from(g == 1.0);
    }
    assert!(at_top > 400, "{at_top}");
}

/// Expected win share of member `i` for a binary tournament with
/// replacement and coin-flip ties.
fn expected_share(fitness: &[f64], i: usize) -> f64 {
    let worse = fitness.iter().filter(|&&f| f < fitness[i]).count();
    let tied = fitness.iter().filter(|&&f| f == fitness[i]).count() - 1;
    (1 + 2 * worse + tied) as f64 / (fitness.len() * fitness.len()) as f64
}

fn check_tournament(fitness: &[f64], seed: u64) {
    let draws = 200_000;
    let mut wins = vec![0usize; fitness.len()];
    let mut rng = stream(seed, 0);
    for _ in 0..draws {
        wins[tournament_select(fitness, &mut rng)] += 1;
    }
    for (i, &w) in wins.iter().enumerate() {
        let got = w as f64 / draws as f64;
        let want = expected_share(fitness, i);
        assert!((got - want).abs() <= 0.005, "member {i}: {got} vs {want}");
    }
}

#[test]
fn tournament_frequencies_distinct() {
    check_tournament(&[0.4, -1.0, 0.95, 0.0, 0.2, -0.3], 1);
}

#[test]
fn tournament_frequencies_with_ties() {
    check_tournament(&[0.5, 0.5, -0.5, 0.5, 1.0], 2);
}
