//! The three invasion scenarios: seeding, batches of seeded runs, cross-run
//! aggregation and classification of converged strategies.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{run_evolution, GaConfig, Population, PopulationLabel, RunOutcome};
use crate::rng::{run_seed, stream, Rng, SEEDING_STREAM};
use crate::strategy::{Chromosome, MoveKind, MoveSpec, NamedOperator, Schema, StrategyParams};

pub use crate::evolve::RunRecord;
pub use crate::stats::aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Q's half-half strategies invaded by pure quantum moves.
    Sim1,
    /// Picard's half-half strategy invaded by pure quantum moves.
    Sim2,
    /// Both invaded; Picard mixes two unitaries.
    Sim3,
}

impl Scenario {
    pub fn schema_p(self) -> Schema {
        match self {
            Scenario::Sim1 => Schema::new(vec![MoveKind::ClassicalMixed]),
            Scenario::Sim2 => Schema::new(vec![MoveKind::PureQuantum]),
            Scenario::Sim3 => Schema::new(vec![MoveKind::MixedTwoUnitary]),
        }
    }

    pub fn schema_k(self) -> Schema {
        match self {
            Scenario::Sim1 | Scenario::Sim3 => Schema::new(vec![MoveKind::PureQuantum; 2]),
            Scenario::Sim2 => Schema::new(vec![MoveKind::ClassicalMixed; 2]),
        }
    }

    pub fn default_max_gen(self) -> usize {
        match self {
            Scenario::Sim1 | Scenario::Sim2 => 500,
            Scenario::Sim3 => 10_000,
        }
    }

    /// Initial `(P, K)` populations.
    pub fn seed(self, pop_size: usize, rng: &mut Rng) -> Result<(Population, Population)> {
        match self {
            Scenario::Sim1 => seed_sim1(pop_size, rng),
            Scenario::Sim2 => seed_sim2(pop_size, rng),
            Scenario::Sim3 => seed_sim3(pop_size, rng),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Sim1 => "sim1",
            Scenario::Sim2 => "sim2",
            Scenario::Sim3 => "sim3",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim1" | "1" => Ok(Scenario::Sim1),
            "sim2" | "2" => Ok(Scenario::Sim2),
            "sim3" | "3" => Ok(Scenario::Sim3),
            _ => Err(Error::Config(format!("unknown scenario '{s}' (expected sim1, sim2 or sim3)"))),
        }
    }
}

fn population(label: PopulationLabel, schema: Schema, moves: Vec<Vec<MoveSpec>>) -> Result<Population> {
    let schema = Arc::new(schema);
    let members = moves
        .iter()
        .map(|m| Chromosome::encode(schema.clone(), m))
        .collect::<Result<Vec<_>>>()?;
    Population::new(label, schema, members)
}

fn uniform_theta(rng: &mut Rng) -> f64 {
    rng.random_range(0.0..=FRAC_PI_2)
}

fn uniform_phi(rng: &mut Rng) -> f64 {
    rng.random_range(0.0..=PI)
}

/// Q's two-move seeds: even members `[U(π/4,*), U(*,*)]`, odd members the
/// reverse order.
fn seed_quantum_q(pop_size: usize, rng: &mut Rng) -> Result<Population> {
    let moves = (0..pop_size)
        .map(|i| {
            let half = MoveSpec::pure(FRAC_PI_4, uniform_phi(rng));
            let (theta, phi) = (uniform_theta(rng), uniform_phi(rng));
            let free = MoveSpec::pure(theta, phi);
            if i % 2 == 0 {
                vec![half, free]
            } else {
                vec![free, half]
            }
        })
        .collect();
    population(PopulationLabel::K, Scenario::Sim1.schema_k(), moves)
}

pub fn seed_sim1(pop_size: usize, rng: &mut Rng) -> Result<(Population, Population)> {
    let k = seed_quantum_q(pop_size, rng)?;
    let p = population(
        PopulationLabel::P,
        Scenario::Sim1.schema_p(),
        vec![vec![MoveSpec::classical(0.5)]; pop_size],
    )?;
    Ok((p, k))
}

pub fn seed_sim2(pop_size: usize, rng: &mut Rng) -> Result<(Population, Population)> {
    let p_moves = (0..pop_size)
        .map(|_| vec![MoveSpec::pure(FRAC_PI_4, uniform_phi(rng))])
        .collect();
    let p = population(PopulationLabel::P, Scenario::Sim2.schema_p(), p_moves)?;
    let k_moves = (0..pop_size)
        .map(|i| {
            let free = MoveSpec::classical(rng.random_range(0.0..=1.0));
            let half = MoveSpec::classical(0.5);
            if i % 2 == 0 {
                vec![half, free]
            } else {
                vec![free, half]
            }
        })
        .collect();
    let k = population(PopulationLabel::K, Scenario::Sim2.schema_k(), k_moves)?;
    Ok((p, k))
}

pub fn seed_sim3(pop_size: usize, rng: &mut Rng) -> Result<(Population, Population)> {
    let k = seed_quantum_q(pop_size, rng)?;
    let p = population(
        PopulationLabel::P,
        Scenario::Sim3.schema_p(),
        vec![vec![MoveSpec::mix(0.5, NamedOperator::Sigma1, NamedOperator::Identity)]; pop_size],
    )?;
    Ok((p, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub ga: GaConfig,
    pub n_runs: usize,
}

impl ScenarioSpec {
    /// Population-size and mutation defaults with the scenario's generation count.
    pub fn new(scenario: Scenario, n_runs: usize, seed: u64) -> Self {
        ScenarioSpec {
            scenario,
            ga: GaConfig { max_gen: scenario.default_max_gen(), rng_seed: seed, ..GaConfig::default() },
            n_runs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        if self.n_runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Cross-run `(mean, sem)` of every per-generation statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub generation: usize,
    pub fit_p: (f64, f64),
    pub fit_k: (f64, f64),
    /// Cross-run statistics of each run's per-gene population mean.
    pub genes_p: Vec<(f64, f64)>,
    pub genes_k: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub spec: ScenarioSpec,
    /// Per-run key used for both seeding and evolution.
    pub run_seeds: Vec<u64>,
    pub runs: Vec<RunOutcome>,
    pub aggregate: Vec<AggregateRecord>,
}

/// One seeded run of a batch.
pub fn run_single(spec: &ScenarioSpec, run_index: usize) -> Result<(u64, RunOutcome)> {
    let seed = run_seed(spec.ga.rng_seed, run_index as u64);
    let mut rng = stream(seed, SEEDING_STREAM);
    let (p, k) = spec.scenario.seed(spec.ga.pop_size, &mut rng)?;
    let cfg = GaConfig { rng_seed: seed, ..spec.ga };
    Ok((seed, run_evolution(p, k, &cfg)?))
}

/// Runs `n_runs` independent seeded runs on `workers` threads (0 = rayon default).
pub fn run_batch(spec: &ScenarioSpec, workers: usize) -> Result<BatchResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(u64, RunOutcome)> = pool.install(|| {
        (0..spec.n_runs)
            .into_par_iter()
            .map(|i| run_single(spec, i))
            .collect::<Result<Vec<_>>>()
    })?;
    let (run_seeds, runs): (Vec<u64>, Vec<RunOutcome>) = results.into_iter().unzip();
    let aggregate = aggregate_runs(&runs)?;
    Ok(BatchResult { spec: *spec, run_seeds, runs, aggregate })
}

/// Aligns runs by generation index.
pub fn aggregate_runs(runs: &[RunOutcome]) -> Result<Vec<AggregateRecord>> {
    let first = runs.first().ok_or(Error::EmptyInput)?;
    let n_gen = first.records.len();
    let (n_gp, n_gk) = (first.records[0].genes_p.len(), first.records[0].genes_k.len());
    (0..n_gen)
        .map(|g| {
            let col = |f: &dyn Fn(&RunRecord) -> f64| -> Result<(f64, f64)> {
                let v: Vec<f64> = runs.iter().map(|r| f(&r.records[g])).collect();
                aggregate(&v)
            };
            Ok(AggregateRecord {
                generation: g,
                fit_p: col(&|r| r.mean_fit_p)?,
                fit_k: col(&|r| r.mean_fit_k)?,
                genes_p: (0..n_gp).map(|i| col(&|r| r.genes_p[i].0)).collect::<Result<_>>()?,
                genes_k: (0..n_gk).map(|i| col(&|r| r.genes_k[i].0)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Both populations' mean |fitness| stayed below `threshold` over the last
/// `tail_fraction` of generations.
pub fn is_converged(records: &[RunRecord], tail_fraction: f64, threshold: f64) -> bool {
    if records.is_empty() {
        return false;
    }
    let tail = ((records.len() as f64 * tail_fraction).ceil() as usize).max(1);
    records[records.len() - tail..]
        .iter()
        .all(|r| r.mean_fit_p.abs() < threshold && r.mean_fit_k.abs() < threshold)
}

pub const CONVERGENCE_TAIL: f64 = 0.05;
pub const CONVERGENCE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CategoryLabel {
    Cat1,
    Cat2,
    Cat3,
    Cat4,
    Unclassified,
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CategoryLabel::Cat1 => "cat1",
            CategoryLabel::Cat2 => "cat2",
            CategoryLabel::Cat3 => "cat3",
            CategoryLabel::Cat4 => "cat4",
            CategoryLabel::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerance {
    /// Radians, for constrained angles of Q's moves.
    pub angle: f64,
    /// Elementwise, for Picard's operators against the named matrices.
    pub operator: f64,
}

impl Default for ClassifyTolerance {
    fn default() -> Self {
        ClassifyTolerance { angle: 0.15, operator: 0.1 }
    }
}

/// Q-side template: `None` is a wildcard.
struct QTemplate {
    theta1: Option<f64>,
    phi1: Option<f64>,
    theta2: Option<f64>,
    phi2: Option<f64>,
}

impl QTemplate {
    fn matches(&self, m1: &StrategyParams, m2: &StrategyParams, tol: f64) -> bool {
        let ok = |want: Option<f64>, got: f64| want.is_none_or(|w| (w - got).abs() <= tol);
        ok(self.theta1, m1.theta) && ok(self.phi1, m1.phi) && ok(self.theta2, m2.theta) && ok(self.phi2, m2.phi)
    }
}

const CATEGORIES: [(CategoryLabel, QTemplate, [NamedOperator; 2]); 4] = [
    (
        CategoryLabel::Cat1,
        QTemplate { theta1: Some(FRAC_PI_4), phi1: None, theta2: None, phi2: Some(FRAC_PI_2) },
        [NamedOperator::Sigma1, NamedOperator::Sigma3],
    ),
    (
        CategoryLabel::Cat2,
        QTemplate { theta1: Some(FRAC_PI_4), phi1: None, theta2: None, phi2: Some(FRAC_PI_2) },
        [NamedOperator::Sigma2, NamedOperator::Identity],
    ),
    (
        CategoryLabel::Cat3,
        QTemplate { theta1: Some(0.0), phi1: None, theta2: Some(FRAC_PI_4), phi2: Some(PI) },
        [NamedOperator::Sigma3, NamedOperator::Sigma2],
    ),
    (
        CategoryLabel::Cat4,
        QTemplate { theta1: Some(FRAC_PI_2), phi1: None, theta2: Some(FRAC_PI_4), phi2: Some(0.0) },
        [NamedOperator::Identity, NamedOperator::Sigma1],
    ),
];

fn pure_params(m: &MoveSpec) -> Option<StrategyParams> {
    match m {
        MoveSpec::PureQuantum { params } => Some(*params),
        _ => None,
    }
}

/// Matches a Q member and a Picard member against the four evolved-strategy
/// categories. Picard's operator pair may appear in either order.
pub fn classify_final(k_member: &Chromosome, p_member: &Chromosome, tol: ClassifyTolerance) -> CategoryLabel {
    let (Ok(q), Ok(p)) = (k_member.decode(), p_member.decode()) else {
        return CategoryLabel::Unclassified;
    };
    let (Some(u1), Some(u2)) = (q.first().and_then(pure_params), q.get(1).and_then(pure_params)) else {
        return CategoryLabel::Unclassified;
    };
    let Some(MoveSpec::MixedTwoUnitary { first, second, .. }) = p.first() else {
        return CategoryLabel::Unclassified;
    };
    let (Ok(a), Ok(b)) = (first.unitary(), second.unitary()) else {
        return CategoryLabel::Unclassified;
    };
    let near = |u: &crate::qmat::Unitary2, op: NamedOperator| u.matrix().max_abs_diff(&op.matrix()) <= tol.operator;

    for (label, template, [x, y]) in &CATEGORIES {
        let ops = (near(&a, *x) && near(&b, *y)) || (near(&a, *y) && near(&b, *x));
        if ops && template.matches(&u1, &u2, tol.angle) {
            return *label;
        }
    }
    CategoryLabel::Unclassified
}

/// Member whose genes are the per-gene medians of the population.
pub fn consensus_member(pop: &Population) -> Chromosome {
    let n = pop.schema().gene_count();
    let genes = (0..n)
        .map(|g| {
            let mut col: Vec<f64> = pop.members().iter().map(|c| c.genes()[g]).collect();
            col.sort_by(f64::total_cmp);
            let m = col.len();
            if m % 2 == 1 {
                col[m / 2]
            } else {
                0.5 * (col[m / 2 - 1] + col[m / 2])
            }
        })
        .collect();
    Chromosome::new(pop.schema().clone(), genes).expect("medians stay within bounds")
}

/// Label of a finished run: its consensus Q member against its consensus
/// Picard member.
pub fn classify_run(final_k: &Population, final_p: &Population, tol: ClassifyTolerance) -> CategoryLabel {
    classify_final(&consensus_member(final_k), &consensus_member(final_p), tol)
}

/// Whether a Q member is in the winning set `[U(π/4,*), U(π/4,π)]`.
pub fn is_winning_set(k_member: &Chromosome, tol: f64) -> bool {
    let Ok(q) = k_member.decode() else { return false };
    match (q.first().and_then(pure_params), q.get(1).and_then(pure_params)) {
        (Some(u1), Some(u2)) => QTemplate {
            theta1: Some(FRAC_PI_4),
            phi1: None,
            theta2: Some(FRAC_PI_4),
            phi2: Some(PI),
        }
        .matches(&u1, &u2, tol),
        _ => false,
    }
}

/// Histogram of run labels, keyed by label name.
pub fn histogram<I: IntoIterator<Item = String>>(labels: I) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for l in labels {
        *h.entry(l).or_insert(0) += 1;
    }
    h
}
