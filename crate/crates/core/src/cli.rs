//! Command-line front end: `run`, `verify` and `classify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::evolve::{GaConfig, Population, PopulationLabel, Variation};
use crate::experiments::{
    aggregate, classify_run, consensus_member, histogram, is_converged, is_winning_set, run_batch, BatchResult,
    ClassifyTolerance, Scenario, ScenarioSpec, CONVERGENCE_TAIL, CONVERGENCE_THRESHOLD,
};
use crate::strategy::{Chromosome, Schema};
use crate::verify::{cycle_report, ne_report, oracle_report, Grid, NE_EPS};

pub const BUILD_ID: &str = concat!("qpenny ", env!("CARGO_PKG_VERSION"));

/// Angle tolerance for matching a final Q member to the winning set.
pub const WINNING_SET_TOL: f64 = 0.15;

#[derive(Debug, Parser)]
#[command(name = "qpenny", version, about = "Quantum penny flip coevolution and equilibrium checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a batch of seeded coevolution runs and write its artifacts
    Run(RunArgs),
    /// Check closed forms, equilibrium certificates or the dominance cycle
    Verify(VerifyArgs),
    /// Label the final populations of a finished batch
    Classify {
        /// Output directory of a previous `run`
        dir: PathBuf,
    },
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub max_gen: Option<usize>,
    #[arg(long)]
    pub pop_size: Option<usize>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub mutation_std: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-generation output formats, comma separated (csv, json)
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// crossover_then_mutate or exclusive
    #[arg(long)]
    pub variation: Option<String>,
    /// key=value file (or JSON object) with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub target: VerifyTarget,
    /// Random draws per family (oracles)
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points per parameter axis (ne)
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Picard's mixing probability in the dominance chain (cycle)
    #[arg(long, default_value_t = 0.5)]
    pub pro: f64,
    /// Also write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Oracles,
    Ne,
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully resolved `run` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliConfig {
    pub scenario: Scenario,
    pub runs: usize,
    pub max_gen: usize,
    pub pop_size: usize,
    pub mutation_rate: f64,
    pub mutation_std: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub format: Vec<OutputFormat>,
    pub variation: Variation,
}

impl CliConfig {
    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            scenario: self.scenario,
            ga: GaConfig {
                pop_size: self.pop_size,
                max_gen: self.max_gen,
                mutation_rate: self.mutation_rate,
                mutation_std: self.mutation_std,
                rng_seed: self.seed,
                variation: self.variation,
            },
            n_runs: self.runs,
        }
    }
}

const CONFIG_KEYS: [&str; 11] = [
    "scenario",
    "runs",
    "max-gen",
    "pop-size",
    "mutation-rate",
    "mutation-std",
    "seed",
    "out",
    "workers",
    "format",
    "variation",
];

/// Reads a config file into `key -> value` with keys normalised to the flag
/// spelling. Accepts `key = value` lines (`#` comments) or a JSON object;
/// a run manifest's `config` object also works.
pub fn read_config_file(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let mut raw = Vec::new();
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing JSON config {}", path.display()))?;
        let obj = value.get("config").unwrap_or(&value);
        let obj = obj.as_object().ok_or_else(|| anyhow!("config {} is not a JSON object", path.display()))?;
        for (k, v) in obj {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| i.as_str().map(str::to_string).unwrap_or_else(|| i.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            raw.push((k.clone(), v));
        }
    } else {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), n + 1))?;
            raw.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut out = BTreeMap::new();
    for (k, v) in raw {
        let key = k.replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("unknown config key '{k}' in {}", path.display());
        }
        out.insert(key, v);
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> anyhow::Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow!("invalid value '{value}' for {field}: {e}"))
}

fn parse_formats(items: &[String]) -> anyhow::Result<Vec<OutputFormat>> {
    let mut out = Vec::new();
    for item in items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let f = match item.to_ascii_lowercase().as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            _ => bail!("invalid value '{item}' for format: expected csv or json"),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        bail!("format: at least one of csv, json is required");
    }
    out.sort();
    Ok(out)
}

fn parse_variation(value: &str) -> anyhow::Result<Variation> {
    match value.to_ascii_lowercase().replace('-', "_").as_str() {
        "exclusive" => Ok(Variation::Exclusive),
        "crossover_then_mutate" => Ok(Variation::CrossoverThenMutate),
        _ => bail!("invalid value '{value}' for variation: expected exclusive or crossover_then_mutate"),
    }
}

/// Flags override the config file, which overrides the defaults.
pub fn resolve_config(args: &RunArgs) -> anyhow::Result<CliConfig> {
    let file = match &args.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    fn pick<T: std::str::FromStr>(
        flag: Option<T>,
        file: &BTreeMap<String, String>,
        key: &str,
    ) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => file.get(key).map(|v| parse_field(key, v)).transpose(),
        }
    }

    let scenario: Scenario = match (&args.scenario, file.get("scenario")) {
        (Some(s), _) | (None, Some(s)) => parse_field("scenario", s)?,
        (None, None) => bail!("scenario is required (--scenario or 'scenario' in the config file)"),
    };
    let ga = GaConfig::default();
    let format = match (&args.format, file.get("format")) {
        (Some(f), _) => parse_formats(f)?,
        (None, Some(f)) => parse_formats(std::slice::from_ref(f))?,
        (None, None) => vec![OutputFormat::Csv],
    };
    let variation = match (&args.variation, file.get("variation")) {
        (Some(v), _) | (None, Some(v)) => parse_variation(v)?,
        (None, None) => ga.variation,
    };
    let cfg = CliConfig {
        scenario,
        runs: pick(args.runs, &file, "runs")?.unwrap_or(100),
        max_gen: pick(args.max_gen, &file, "max-gen")?.unwrap_or(scenario.default_max_gen()),
        pop_size: pick(args.pop_size, &file, "pop-size")?.unwrap_or(ga.pop_size),
        mutation_rate: pick(args.mutation_rate, &file, "mutation-rate")?.unwrap_or(ga.mutation_rate),
        mutation_std: pick(args.mutation_std, &file, "mutation-std")?.unwrap_or(ga.mutation_std),
        seed: pick(args.seed, &file, "seed")?.unwrap_or(0),
        out: pick(args.out.clone(), &file, "out")?.unwrap_or_else(|| PathBuf::from(format!("out/{scenario}"))),
        workers: pick(args.workers, &file, "workers")?.unwrap_or(0),
        format,
        variation,
    };
    cfg.spec().validate().map_err(|e| anyhow!("{e}"))?;
    Ok(cfg)
}

fn gene_columns(prefix: &str, schema: &Schema) -> Vec<String> {
    schema
        .gene_names()
        .into_iter()
        .flat_map(|g| [format!("{prefix}_{g}_mean"), format!("{prefix}_{g}_sem")])
        .collect()
}

pub fn csv_header(scenario: Scenario) -> String {
    let mut cols: Vec<String> = ["scenario", "run", "generation", "meanFitP", "semFitP", "meanFitK", "semFitK"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(gene_columns("P", &scenario.schema_p()));
    cols.extend(gene_columns("K", &scenario.schema_k()));
    cols.join(",")
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let row: Vec<String> = fields.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn pairs(v: &[(f64, f64)]) -> impl Iterator<Item = String> + '_ {
    v.iter().flat_map(|(m, s)| [m.to_string(), s.to_string()])
}

/// Per-run, per-generation statistics; SEMs are over population members.
pub fn records_csv(batch: &BatchResult) -> String {
    let scenario = batch.spec.scenario;
    let mut out = csv_header(scenario);
    out.push('\n');
    for (run, outcome) in batch.runs.iter().enumerate() {
        for r in &outcome.records {
            let head = [
                scenario.to_string(),
                run.to_string(),
                r.generation.to_string(),
                r.mean_fit_p.to_string(),
                r.sem_fit_p.to_string(),
                r.mean_fit_k.to_string(),
                r.sem_fit_k.to_string(),
            ];
            push_row(&mut out, head.into_iter().chain(pairs(&r.genes_p)).chain(pairs(&r.genes_k)));
        }
    }
    out
}

/// Cross-run statistics per generation; the run column reads `all`.
pub fn aggregate_csv(batch: &BatchResult) -> String {
    let scenario = batch.spec.scenario;
    let mut out = csv_header(scenario);
    out.push('\n');
    for a in &batch.aggregate {
        let head = [
            scenario.to_string(),
            "all".to_string(),
            a.generation.to_string(),
            a.fit_p.0.to_string(),
            a.fit_p.1.to_string(),
            a.fit_k.0.to_string(),
            a.fit_k.1.to_string(),
        ];
        push_row(&mut out, head.into_iter().chain(pairs(&a.genes_p)).chain(pairs(&a.genes_k)));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub final_fit_p: f64,
    pub final_fit_k: f64,
    pub converged: bool,
    pub label: Option<String>,
    pub winning_set: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub config: CliConfig,
    /// Cross-run `(mean, sem)` at the final generation.
    pub final_fit_p: (f64, f64),
    pub final_fit_k: (f64, f64),
    pub runs: Vec<RunSummary>,
    pub converged_runs: usize,
    /// Category counts over converged runs (mixed-unitary scenario only).
    pub category_histogram: BTreeMap<String, usize>,
    /// Runs whose consensus Q member is in the winning set (pure-Q scenario only).
    pub winning_set_runs: Option<usize>,
}

fn run_label(scenario: Scenario, final_k: &Population, final_p: &Population) -> (Option<String>, Option<bool>) {
    match scenario {
        Scenario::Sim3 => (Some(classify_run(final_k, final_p, ClassifyTolerance::default()).to_string()), None),
        Scenario::Sim1 => (None, Some(is_winning_set(&consensus_member(final_k), WINNING_SET_TOL))),
        Scenario::Sim2 => (None, None),
    }
}

fn summarize_runs(
    scenario: Scenario,
    items: impl Iterator<Item = (usize, u64, f64, f64, bool, Population, Population)>,
) -> (Vec<RunSummary>, usize, BTreeMap<String, usize>, Option<usize>) {
    let mut runs = Vec::new();
    for (run, seed, fit_p, fit_k, converged, final_p, final_k) in items {
        let (label, winning_set) = run_label(scenario, &final_k, &final_p);
        runs.push(RunSummary { run, seed, final_fit_p: fit_p, final_fit_k: fit_k, converged, label, winning_set });
    }
    let converged_runs = runs.iter().filter(|r| r.converged).count();
    let category_histogram = histogram(runs.iter().filter(|r| r.converged).filter_map(|r| r.label.clone()));
    let winning = (scenario == Scenario::Sim1).then(|| runs.iter().filter(|r| r.winning_set == Some(true)).count());
    (runs, converged_runs, category_histogram, winning)
}

pub fn batch_summary(config: &CliConfig, batch: &BatchResult) -> anyhow::Result<BatchSummary> {
    let last: Vec<_> = batch.runs.iter().map(|r| r.records.last().expect("max_gen + 1 records")).collect();
    let final_fit_p = aggregate(&last.iter().map(|r| r.mean_fit_p).collect::<Vec<_>>())?;
    let final_fit_k = aggregate(&last.iter().map(|r| r.mean_fit_k).collect::<Vec<_>>())?;
    let (runs, converged_runs, category_histogram, winning_set_runs) = summarize_runs(
        config.scenario,
        batch.runs.iter().enumerate().map(|(i, r)| {
            let rec = r.records.last().expect("records");
            (
                i,
                batch.run_seeds[i],
                rec.mean_fit_p,
                rec.mean_fit_k,
                is_converged(&r.records, CONVERGENCE_TAIL, CONVERGENCE_THRESHOLD),
                r.final_p.clone(),
                r.final_k.clone(),
            )
        }),
    );
    Ok(BatchSummary {
        config: config.clone(),
        final_fit_p,
        final_fit_k,
        runs,
        converged_runs,
        category_histogram,
        winning_set_runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub build: String,
    pub config: CliConfig,
    pub run_seeds: Vec<u64>,
    pub convergence_tail: f64,
    pub convergence_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRun {
    pub run: usize,
    pub seed: u64,
    pub final_fit_p: f64,
    pub final_fit_k: f64,
    pub converged: bool,
    /// One gene vector per member.
    pub p: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPopulations {
    pub scenario: Scenario,
    pub genes_p: Vec<String>,
    pub genes_k: Vec<String>,
    pub runs: Vec<FinalRun>,
}

fn genes_of(pop: &Population) -> Vec<Vec<f64>> {
    pop.members().iter().map(|c| c.genes().to_vec()).collect()
}

pub fn final_populations(batch: &BatchResult) -> FinalPopulations {
    let scenario = batch.spec.scenario;
    FinalPopulations {
        scenario,
        genes_p: scenario.schema_p().gene_names(),
        genes_k: scenario.schema_k().gene_names(),
        runs: batch
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let rec = r.records.last().expect("records");
                FinalRun {
                    run: i,
                    seed: batch.run_seeds[i],
                    final_fit_p: rec.mean_fit_p,
                    final_fit_k: rec.mean_fit_k,
                    converged: is_converged(&r.records, CONVERGENCE_TAIL, CONVERGENCE_THRESHOLD),
                    p: genes_of(&r.final_p),
                    k: genes_of(&r.final_k),
                }
            })
            .collect(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_run(config: &CliConfig) -> anyhow::Result<BatchSummary> {
    fs::create_dir_all(&config.out).with_context(|| format!("creating output directory {}", config.out.display()))?;
    let batch = run_batch(&config.spec(), config.workers).map_err(|e| anyhow!("{e}"))?;
    let dir = &config.out;
    if config.format.contains(&OutputFormat::Csv) {
        fs::write(dir.join("records.csv"), records_csv(&batch)).context("writing records.csv")?;
        fs::write(dir.join("aggregate.csv"), aggregate_csv(&batch)).context("writing aggregate.csv")?;
    }
    if config.format.contains(&OutputFormat::Json) {
        let runs: Vec<_> = batch.runs.iter().map(|r| &r.records).collect();
        write_json(&dir.join("records.json"), &runs)?;
        write_json(&dir.join("aggregate.json"), &batch.aggregate)?;
    }
    let summary = batch_summary(config, &batch)?;
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            build: BUILD_ID.to_string(),
            config: config.clone(),
            run_seeds: batch.run_seeds.clone(),
            convergence_tail: CONVERGENCE_TAIL,
            convergence_threshold: CONVERGENCE_THRESHOLD,
        },
    )?;
    write_json(&dir.join("final_populations.json"), &final_populations(&batch))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub scenario: Scenario,
    pub runs: Vec<RunSummary>,
    pub converged_runs: usize,
    pub category_histogram: BTreeMap<String, usize>,
    pub winning_set_runs: Option<usize>,
}

fn population_from(label: PopulationLabel, schema: Schema, genes: &[Vec<f64>]) -> anyhow::Result<Population> {
    let schema = Arc::new(schema);
    let members = genes
        .iter()
        .map(|g| Chromosome::new(schema.clone(), g.clone()))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| anyhow!("population {label}: {e}"))?;
    Population::new(label, schema, members).map_err(|e| anyhow!("population {label}: {e}"))
}

pub fn cmd_classify(dir: &Path) -> anyhow::Result<ClassifyReport> {
    if !dir.is_dir() {
        bail!("batch directory {} does not exist", dir.display());
    }
    let path = dir.join("final_populations.json");
    if !path.is_file() {
        bail!("no final_populations.json in {}", dir.display());
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let data: FinalPopulations =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if data.runs.is_empty() {
        bail!("{} holds no runs", path.display());
    }
    let scenario = data.scenario;
    let mut items = Vec::new();
    for r in &data.runs {
        let p = population_from(PopulationLabel::P, scenario.schema_p(), &r.p).with_context(|| format!("run {}", r.run))?;
        let k = population_from(PopulationLabel::K, scenario.schema_k(), &r.k).with_context(|| format!("run {}", r.run))?;
        items.push((r.run, r.seed, r.final_fit_p, r.final_fit_k, r.converged, p, k));
    }
    let (runs, converged_runs, category_histogram, winning_set_runs) = summarize_runs(scenario, items.into_iter());
    let report = ClassifyReport { scenario, runs, converged_runs, category_histogram, winning_set_runs };
    write_json(&dir.join("classification.json"), &report)?;
    Ok(report)
}

/// Runs one verification suite; returns the JSON report, whether it
/// passed, and a description of the first failure.
pub fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<(String, bool, Option<String>)> {
    let grid = Grid { points: args.grid };
    let (json, pass, first_failure) = match args.target {
        VerifyTarget::Oracles => {
            let r = oracle_report(args.draws, args.seed, 1e-12)?;
            let fail = r
                .families
                .iter()
                .find(|f| !f.pass)
                .map(|f| format!("family {} deviates by {:e}", f.family, f.max_deviation));
            (serde_json::to_string_pretty(&r)?, r.pass, fail)
        }
        VerifyTarget::Ne => {
            let r = ne_report(grid, NE_EPS)?;
            let fail = r.certificates.iter().find(|c| !c.pass).map(|c| {
                let mut s = String::new();
                let _ = write!(
                    s,
                    "{}: verdict {} (expected one of {:?})\n{}",
                    c.name,
                    c.certificate.verdict,
                    c.expected,
                    serde_json::to_string_pretty(&c.certificate).unwrap_or_default()
                );
                s
            });
            (serde_json::to_string_pretty(&r)?, r.pass, fail)
        }
        VerifyTarget::Cycle => {
            let r = cycle_report(args.pro)?;
            let fail = (!r.pass).then(|| format!("dominance chain broken: {:?}", r.links));
            (serde_json::to_string_pretty(&r)?, r.pass, fail)
        }
    };
    if let Some(out) = &args.out {
        fs::write(out, format!("{json}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok((json, pass, first_failure))
}

/// Entry point; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => resolve_config(&args).and_then(|cfg| {
            let s = cmd_run(&cfg)?;
            let _ = writeln!(
                io::stdout(),
                "{} runs of {}: final meanFitP {} meanFitK {} -> {}",
                cfg.runs,
                cfg.scenario,
                s.final_fit_p.0,
                s.final_fit_k.0,
                cfg.out.display()
            );
            Ok(0)
        }),
        Command::Verify(args) => cmd_verify(&args).map(|(json, pass, fail)| {
            let _ = writeln!(io::stdout(), "{json}");
            if let Some(f) = fail {
                eprintln!("verification failed: {f}");
            }
            if pass {
                0
            } else {
                1
            }
        }),
        Command::Classify { dir } => cmd_classify(&dir).and_then(|r| {
            let _ = writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&r)?);
            Ok(0)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
