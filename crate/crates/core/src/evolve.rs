//! Two-population coevolutionary GA.
//!
//! Population P holds Picard's one-move strategies, K holds Q's two-move
//! strategies. Each generation every `p` plays every `k`; a member's fitness
//! is its mean payoff. Offspring come from binary tournament selection,
//! average crossover and Gaussian mutation, and replace the parents wholesale.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{compiled_payoff_q, CompiledPicard, CompiledQ};
use crate::rng::{generation_stream, Rng};
use crate::stats::aggregate;
use crate::strategy::{Chromosome, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PopulationLabel {
    /// Picard's strategies.
    P,
    /// Q's strategies.
    K,
}

impl PopulationLabel {
    pub fn stream_index(self) -> u64 {
        match self {
            PopulationLabel::P => 0,
            PopulationLabel::K => 1,
        }
    }
}

impl fmt::Display for PopulationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PopulationLabel::P => f.write_str("P"),
            PopulationLabel::K => f.write_str("K"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    label: PopulationLabel,
    schema: Arc<Schema>,
    members: Vec<Chromosome>,
}

impl Population {
    pub fn new(label: PopulationLabel, schema: Arc<Schema>, members: Vec<Chromosome>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyInput);
        }
        let expected_moves = match label {
            PopulationLabel::P => 1,
            PopulationLabel::K => 2,
        };
        if schema.moves().len() != expected_moves {
            return Err(Error::Config(format!(
                "population {label} needs {expected_moves} move(s) per member, schema has {}",
                schema.moves().len()
            )));
        }
        for m in &members {
            if m.schema().as_ref() != schema.as_ref() {
                return Err(Error::SchemaMismatch);
            }
        }
        Ok(Population { label, schema, members })
    }

    pub fn label(&self) -> PopulationLabel {
        self.label
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn members(&self) -> &[Chromosome] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Per-gene `(mean, sem)` over members.
    pub fn gene_stats(&self) -> Vec<(f64, f64)> {
        let n = self.schema.gene_count();
        (0..n)
            .map(|g| {
                let col: Vec<f64> = self.members.iter().map(|c| c.genes()[g]).collect();
                aggregate(&col).expect("population is non-empty")
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub pop_size: usize,
    pub max_gen: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Standard deviation of the Gaussian perturbation, in gene units.
    pub mutation_std: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub variation: Variation,
}

/// How crossover and mutation combine into one offspring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variation {
    /// Every child is the average of two tournament winners, then mutated.
    CrossoverThenMutate,
    /// With probability `mutation_rate` the child is a mutated copy of one
    /// tournament winner, otherwise the average of two winners.
    #[default]
    Exclusive,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            pop_size: 50,
            max_gen: 500,
            mutation_rate: 0.2,
            mutation_std: 0.2,
            rng_seed: 0,
            variation: Variation::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Config(format!("pop_size must be >= 2 (got {})", self.pop_size)));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Config(format!(
                "mutation_rate must be in [0, 1] (got {})",
                self.mutation_rate
            )));
        }
        if !(self.mutation_std.is_finite() && self.mutation_std > 0.0) {
            return Err(Error::Config(format!(
                "mutation_std must be > 0 (got {})",
                self.mutation_std
            )));
        }
        Ok(())
    }
}

/// Fitness of both populations and the full pairwise payoff matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessTable {
    n_k: usize,
    /// Picard's payoff, row `p`, column `k`. Q's payoff is the negation.
    payoff_picard: Vec<f64>,
    pub fitness_p: Vec<f64>,
    pub fitness_k: Vec<f64>,
}

impl FitnessTable {
    pub fn payoff_picard(&self, p: usize, k: usize) -> f64 {
        self.payoff_picard[p * self.n_k + k]
    }

    pub fn payoff_q(&self, p: usize, k: usize) -> f64 {
        -self.payoff_picard(p, k)
    }

    pub fn mean_p(&self) -> f64 {
        self.fitness_p.iter().sum::<f64>() / self.fitness_p.len() as f64
    }

    pub fn mean_k(&self) -> f64 {
        self.fitness_k.iter().sum::<f64>() / self.fitness_k.len() as f64
    }
}

fn compile_p(pop: &Population) -> Result<Vec<CompiledPicard>> {
    pop.members
        .iter()
        .map(|c| CompiledPicard::new(&c.decode()?[0]))
        .collect()
}

fn compile_k(pop: &Population) -> Result<Vec<CompiledQ>> {
    pop.members
        .iter()
        .map(|c| {
            let moves = c.decode()?;
            CompiledQ::new(&moves[0], &moves[1])
        })
        .collect()
}

/// Round-robin evaluation: every `p` plays every `k`.
pub fn evaluate_fitness(pop_p: &Population, pop_k: &Population) -> Result<FitnessTable> {
    if pop_p.label != PopulationLabel::P || pop_k.label != PopulationLabel::K {
        return Err(Error::Config("evaluate_fitness expects (P, K)".into()));
    }
    let ps = compile_p(pop_p)?;
    let ks = compile_k(pop_k)?;
    let (n_p, n_k) = (ps.len(), ks.len());

    let mut payoff_picard = Vec::with_capacity(n_p * n_k);
    for p in &ps {
        payoff_picard.extend(ks.iter().map(|k| -compiled_payoff_q(k, p)));
    }

    let fitness_p = payoff_picard
        .chunks_exact(n_k)
        .map(|row| row.iter().sum::<f64>() / n_k as f64)
        .collect();
    let fitness_k = (0..n_k)
        .map(|k| -(0..n_p).map(|p| payoff_picard[p * n_k + k]).sum::<f64>() / n_p as f64)
        .collect();

    Ok(FitnessTable { n_k, payoff_picard, fitness_p, fitness_k })
}

/// Higher fitness wins; equal fitness is a fair coin.
pub fn tournament_winner(a: usize, b: usize, fitness: &[f64], rng: &mut Rng) -> usize {
    if fitness[a] > fitness[b] {
        a
    } else if fitness[b] > fitness[a] {
        b
    } else if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// Binary tournament: two members drawn uniformly with replacement.
pub fn tournament_select(fitness: &[f64], rng: &mut Rng) -> usize {
    let n = fitness.len();
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    tournament_winner(a, b, fitness, rng)
}

/// One child whose genes are the parents' means.
pub fn average_crossover(a: &Chromosome, b: &Chromosome) -> Result<Chromosome> {
    if !a.same_schema(b) {
        return Err(Error::SchemaMismatch);
    }
    let genes = a
        .genes()
        .iter()
        .zip(b.genes())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Ok(Chromosome::from_parts_unchecked(a.schema().clone(), genes))
}

/// Each gene independently, with probability `mutation_rate`, gets
/// `N(0, mutation_std²)` added and is clamped back into its bounds.
pub fn gaussian_mutate(c: &Chromosome, cfg: &GaConfig, rng: &mut Rng) -> Chromosome {
    let normal = Normal::new(0.0, cfg.mutation_std).expect("mutation_std validated");
    let genes = c
        .genes()
        .iter()
        .zip(c.schema().bounds())
        .map(|(&g, (lo, hi))| {
            if rng.random::<f64>() < cfg.mutation_rate {
                (g + normal.sample(rng)).clamp(lo, hi)
            } else {
                g
            }
        })
        .collect();
    Chromosome::from_parts_unchecked(c.schema().clone(), genes)
}

/// A full offspring population from one parent population.
pub fn reproduce(pop: &Population, fitness: &[f64], cfg: &GaConfig, rng: &mut Rng) -> Result<Population> {
    let members = (0..cfg.pop_size)
        .map(|_| match cfg.variation {
            Variation::CrossoverThenMutate => {
                let a = &pop.members[tournament_select(fitness, rng)];
                let b = &pop.members[tournament_select(fitness, rng)];
                let child = average_crossover(a, b)?;
                Ok(gaussian_mutate(&child, cfg, rng))
            }
            Variation::Exclusive => {
                if rng.random::<f64>() < cfg.mutation_rate {
                    let a = &pop.members[tournament_select(fitness, rng)];
                    Ok(gaussian_mutate(a, cfg, rng))
                } else {
                    let a = &pop.members[tournament_select(fitness, rng)];
                    let b = &pop.members[tournament_select(fitness, rng)];
                    average_crossover(a, b)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population { label: pop.label, schema: pop.schema.clone(), members })
}

/// Generational replacement of both populations. Each population draws from
/// its own stream for this generation.
pub fn next_generation(
    pop_p: &Population,
    pop_k: &Population,
    table: &FitnessTable,
    cfg: &GaConfig,
    generation: u64,
) -> Result<(Population, Population)> {
    let mut rng_p = generation_stream(cfg.rng_seed, generation, PopulationLabel::P.stream_index());
    let mut rng_k = generation_stream(cfg.rng_seed, generation, PopulationLabel::K.stream_index());
    let next_p = reproduce(pop_p, &table.fitness_p, cfg, &mut rng_p)?;
    let next_k = reproduce(pop_k, &table.fitness_k, cfg, &mut rng_k)?;
    Ok((next_p, next_k))
}

/// Population statistics for one generation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub generation: usize,
    pub mean_fit_p: f64,
    pub sem_fit_p: f64,
    pub mean_fit_k: f64,
    pub sem_fit_k: f64,
    /// `(mean, sem)` per gene of P, in schema order.
    pub genes_p: Vec<(f64, f64)>,
    pub genes_k: Vec<(f64, f64)>,
}

impl RunRecord {
    fn new(generation: usize, pop_p: &Population, pop_k: &Population, table: &FitnessTable) -> Self {
        let (mean_fit_p, sem_fit_p) = aggregate(&table.fitness_p).expect("non-empty");
        let (mean_fit_k, sem_fit_k) = aggregate(&table.fitness_k).expect("non-empty");
        RunRecord {
            generation,
            mean_fit_p,
            sem_fit_p,
            mean_fit_k,
            sem_fit_k,
            genes_p: pop_p.gene_stats(),
            genes_k: pop_k.gene_stats(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// One record per generation, `0..=max_gen`.
    pub records: Vec<RunRecord>,
    pub final_p: Population,
    pub final_k: Population,
    pub final_table: FitnessTable,
}

/// Evaluate, record, reproduce; `max_gen` times, then a final evaluation.
pub fn run_evolution(seed_p: Population, seed_k: Population, cfg: &GaConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut pop_p = seed_p;
    let mut pop_k = seed_k;
    let mut records = Vec::with_capacity(cfg.max_gen + 1);
    let mut generation = 0;
    loop {
        let table = evaluate_fitness(&pop_p, &pop_k)?;
        records.push(RunRecord::new(generation, &pop_p, &pop_k, &table));
        if generation == cfg.max_gen {
            return Ok(RunOutcome { records, final_p: pop_p, final_k: pop_k, final_table: table });
        }
        let (p, k) = next_generation(&pop_p, &pop_k, &table, cfg, generation as u64)?;
        pop_p = p;
        pop_k = k;
        generation += 1;
    }
}
