//! Tournament execution: benchmarks x strategies x sample sizes x replicated
//! experiments with deterministic per-experiment seeding, pre-generated
//! datasets for the non-sequential strategies, and a persistent, resumable
//! raw-results store.

pub mod store;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::space::SearchSpace;
use crate::strategies::{run_strategy, Eval, StrategySpec};
use crate::TuneRng;
use store::{OutcomeRecord, StoreReader, StoreWriter, TrialRecord};

/// Default sample sizes (budgets) per experiment.
pub const DEFAULT_SAMPLE_SIZES: [usize; 5] = [25, 50, 100, 200, 400];
/// Default experiment counts, aligned with [`DEFAULT_SAMPLE_SIZES`]: more
/// experiments for smaller, higher-variance budgets.
pub const DEFAULT_EXPERIMENTS: [usize; 5] = [800, 400, 200, 100, 50];
/// Default pre-generated dataset size per benchmark.
pub const DEFAULT_DATASET_SIZE: usize = 20_000;

/// Strategy id reserved for dataset-generation seeding.
pub const DATASET_STRATEGY_ID: &str = "__dataset__";

/// Default experiment count for a sample size: the canonical schedule for
/// the five standard sizes, otherwise round(20 000 / size), preserving a
/// constant total-sample budget per cell.
pub fn default_experiments_for(sample_size: usize) -> usize {
    match sample_size {
        25 => 800,
        50 => 400,
        100 => 200,
        200 => 100,
        400 => 50,
        s => ((DEFAULT_DATASET_SIZE as f64 / s as f64).round() as usize).max(1),
    }
}

/// A named benchmark: one objective under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub id: String,
    pub objective: ObjectiveSpec,
}

/// A named strategy entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub id: String,
    pub spec: StrategySpec,
}

/// Declarative description of a tournament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentPlan {
    pub benchmarks: Vec<BenchmarkEntry>,
    pub strategies: Vec<StrategyEntry>,
    pub sample_sizes: Vec<usize>,
    pub experiments_per_size: Vec<usize>,
    pub final_repetitions: usize,
    pub master_seed: u64,
    pub space: SearchSpace,
    pub dataset_size: usize,
    /// Regenerate the dataset per (benchmark, size) cell instead of reusing
    /// one dataset per benchmark across sizes.
    pub regenerate_dataset_per_size: bool,
    /// One-sided significance threshold used by the report.
    pub alpha: f64,
    /// Confidence level of the aggregate intervals.
    pub confidence_level: f64,
}

impl TournamentPlan {
    /// A plan with the study defaults for everything but benchmarks and
    /// strategies.
    pub fn with_defaults(
        benchmarks: Vec<BenchmarkEntry>,
        strategies: Vec<StrategyEntry>,
        master_seed: u64,
    ) -> Self {
        Self {
            benchmarks,
            strategies,
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            experiments_per_size: DEFAULT_EXPERIMENTS.to_vec(),
            final_repetitions: crate::objective::DEFAULT_FINAL_REPETITIONS,
            master_seed,
            space: SearchSpace::default(),
            dataset_size: DEFAULT_DATASET_SIZE,
            regenerate_dataset_per_size: false,
            alpha: 0.01,
            confidence_level: 0.95,
        }
    }

    /// Experiment count for a sample size, by aligned index.
    pub fn experiments_for(&self, size: usize) -> Option<usize> {
        self.sample_sizes
            .iter()
            .position(|&s| s == size)
            .map(|i| self.experiments_per_size[i])
    }

    pub fn validate(&self) -> Result<()> {
        if self.benchmarks.is_empty() || self.strategies.is_empty() {
            return Err(Error::Plan("plan needs at least one benchmark and one strategy".into()));
        }
        if self.sample_sizes.len() != self.experiments_per_size.len() {
            return Err(Error::Plan(format!(
                "sample_sizes has {} entries but experiments_per_size has {}",
                self.sample_sizes.len(),
                self.experiments_per_size.len()
            )));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Plan("sample_sizes must not be empty".into()));
        }
        if self.sample_sizes.iter().chain(&self.experiments_per_size).any(|&n| n == 0) {
            return Err(Error::Plan("sample sizes and experiment counts must be >= 1".into()));
        }
        if self.final_repetitions == 0 {
            return Err(Error::Plan("final_repetitions must be >= 1".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Plan(format!("alpha {} not in (0,1)", self.alpha)));
        }
        if !(0.0 < self.confidence_level && self.confidence_level < 1.0) {
            return Err(Error::Plan(format!(
                "confidence_level {} not in (0,1)",
                self.confidence_level
            )));
        }
        if self.space.count_valid() == 0 {
            return Err(Error::Plan("the search space has no valid configuration".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in self
            .benchmarks
            .iter()
            .map(|b| &b.id)
            .chain(self.strategies.iter().map(|s| &s.id))
        {
            if id.is_empty()
                || id.starts_with("__")
                || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(Error::Plan(format!(
                    "id {id:?} must be non-empty, use [A-Za-z0-9_-], and not start with __"
                )));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Plan(format!("duplicate id {id:?}")));
            }
        }
        for b in &self.benchmarks {
            if b.objective.kind == crate::objective::ObjectiveKind::External
                && b.objective.command.is_none()
            {
                return Err(Error::Plan(format!(
                    "benchmark {:?} is external but has no command",
                    b.id
                )));
            }
        }
        let uses_dataset = self.strategies.iter().any(|s| s.spec.uses_dataset());
        if uses_dataset {
            for (&size, &experiments) in
                self.sample_sizes.iter().zip(&self.experiments_per_size)
            {
                if size * experiments > self.dataset_size {
                    return Err(Error::Plan(format!(
                        "cell with sample size {size} needs {} dataset records but \
                         dataset_size is {}",
                        size * experiments,
                        self.dataset_size
                    )));
                }
            }
        }
        for s in &self.strategies {
            s.spec.validate(&self.sample_sizes)?;
        }
        Ok(())
    }
}

/// Stable SplitMix-style seed for one experiment, content-addressed by the
/// experiment coordinates so it is independent of plan-file ordering.
pub fn derive_seed(
    master_seed: u64,
    benchmark_id: &str,
    strategy_id: &str,
    sample_size: u64,
    experiment_index: u64,
) -> u64 {
    let mut h = splitmix64(master_seed ^ 0x9e37_79b9_7f4a_7c15);
    h = splitmix64(h ^ fnv1a(benchmark_id.as_bytes()));
    h = splitmix64(h ^ fnv1a(strategy_id.as_bytes()));
    h = splitmix64(h ^ sample_size);
    h = splitmix64(h ^ experiment_index);
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Draw `n` constrained-uniform single evaluations, order-stable.
pub fn pregenerate_dataset(
    space: &SearchSpace,
    objective: &ObjectiveSpec,
    n: usize,
    rng: &mut TuneRng,
) -> Vec<Eval> {
    use crate::objective::Objective;
    (0..n)
        .map(|_| {
            let config = space.sample_uniform(true, rng);
            let m = objective.evaluate_once(&config, rng);
            Eval { config, runtime_ms: m.runtime_ms, penalized: m.penalized }
        })
        .collect()
}

/// The contiguous dataset slice for one experiment: records
/// `[index * size, (index + 1) * size)`.
pub fn subdivide(dataset: &[Eval], sample_size: usize, experiment_index: usize) -> Result<&[Eval]> {
    let start = experiment_index * sample_size;
    let end = start + sample_size;
    if end > dataset.len() {
        return Err(Error::Capacity(format!(
            "experiment {experiment_index} at sample size {sample_size} needs records \
             {start}..{end} but the dataset has {}",
            dataset.len()
        )));
    }
    Ok(&dataset[start..end])
}

/// One scheduled experiment: the canonical run order is (benchmark, size,
/// strategy, experiment index).
#[derive(Debug, Clone)]
struct ExperimentTask {
    benchmark_idx: usize,
    size_idx: usize,
    strategy_idx: usize,
    experiment_index: usize,
}

/// Result of one experiment, ready for the writer.
struct ExperimentResult {
    trials: Vec<TrialRecord>,
    outcome: OutcomeRecord,
}

/// Summary returned by [`run_tournament`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub total_experiments: usize,
    pub executed_experiments: usize,
    pub resumed_experiments: usize,
}

/// File names inside a store directory.
pub mod paths {
    pub const TRIALS: &str = "trials.csv";
    pub const OUTCOMES: &str = "outcomes.csv";
    pub const RESOLVED_PLAN: &str = "plan.resolved.toml";

    pub fn dataset(benchmark_id: &str, size: Option<usize>) -> String {
        match size {
            Some(s) => format!("dataset_{benchmark_id}_s{s}.csv"),
            None => format!("dataset_{benchmark_id}.csv"),
        }
    }
}

/// Execute every scheduled experiment of `plan`, persisting trials and
/// outcomes incrementally in canonical order.
///
/// Experiments run on `parallelism` workers; each owns a seed derived from
/// its coordinates, and the writer commits results strictly in canonical
/// order, so the persisted bytes are identical for any parallelism degree.
/// With `resume`, experiments already present in the store are kept and
/// execution continues after the last complete one.
pub fn run_tournament(
    plan: &TournamentPlan,
    out_dir: &Path,
    parallelism: usize,
    resume: bool,
    progress: bool,
) -> Result<RunSummary> {
    plan.validate()?;
    let parallelism = parallelism.max(1);
    std::fs::create_dir_all(out_dir)?;

    let resolved = crate::plan::PlanFile::resolved_text(plan)?;
    let plan_path = out_dir.join(paths::RESOLVED_PLAN);
    if !(resume && plan_path.exists()) {
        std::fs::write(&plan_path, resolved)?;
    }

    let datasets = prepare_datasets(plan, out_dir, resume)?;
    let tasks = schedule(plan);
    let total = tasks.len();

    // Resume: keep only fully persisted experiments, in canonical order.
    let trials_path = out_dir.join(paths::TRIALS);
    let outcomes_path = out_dir.join(paths::OUTCOMES);
    let completed = if resume {
        let outcomes = StoreReader::read_outcomes(&outcomes_path).unwrap_or_default();
        let keep = count_matching_prefix(plan, &tasks, &outcomes);
        let expected_trials: usize = outcomes[..keep]
            .iter()
            .map(|o| o.evaluations_used + o.final_repetitions)
            .sum();
        StoreWriter::truncate_to(&outcomes_path, keep)?;
        StoreWriter::truncate_to(&trials_path, expected_trials)?;
        keep
    } else {
        StoreWriter::truncate_to(&outcomes_path, 0)?;
        StoreWriter::truncate_to(&trials_path, 0)?;
        0
    };

    let mut trials_writer = StoreWriter::trials(&trials_path)?;
    let mut outcomes_writer = StoreWriter::outcomes(&outcomes_path)?;

    let pending = &tasks[completed..];
    let next_task = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<ExperimentResult>)>();

    let started = Instant::now();
    let mut last_progress = Instant::now();
    let mut result: Result<()> = Ok(());

    std::thread::scope(|scope| {
        for _ in 0..parallelism.min(pending.len().max(1)) {
            let tx = tx.clone();
            let next_task = &next_task;
            let datasets = &datasets;
            scope.spawn(move || loop {
                let i = next_task.fetch_add(1, Ordering::Relaxed);
                if i >= pending.len() {
                    break;
                }
                let out = run_experiment(plan, &pending[i], datasets);
                if tx.send((i, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Commit results strictly in canonical order.
        let mut buffer: BTreeMap<usize, Result<ExperimentResult>> = BTreeMap::new();
        let mut next_write = 0usize;
        let mut done = completed;
        while let Ok((i, res)) = rx.recv() {
            buffer.insert(i, res);
            while let Some(res) = buffer.remove(&next_write) {
                match res.and_then(|r| {
                    for t in &r.trials {
                        trials_writer.write_trial(t)?;
                    }
                    outcomes_writer.write_outcome(&r.outcome)?;
                    trials_writer.flush()?;
                    outcomes_writer.flush()
                }) {
                    Ok(()) => {
                        next_write += 1;
                        done += 1;
                        if progress && last_progress.elapsed().as_secs_f64() >= 1.0 {
                            last_progress = Instant::now();
                            print_progress(done, total, completed, started);
                        }
                    }
                    Err(e) => {
                        result = Err(e);
                        return; // drop rx: workers stop at the closed channel
                    }
                }
            }
        }
    });
    result?;

    if progress && total > completed {
        print_progress(total, total, completed, started);
    }
    Ok(RunSummary {
        total_experiments: total,
        executed_experiments: total - completed,
        resumed_experiments: completed,
    })
}

fn print_progress(done: usize, total: usize, resumed: usize, started: Instant) {
    let executed = done.saturating_sub(resumed);
    let remaining = total - done;
    let eta = if executed > 0 {
        let per = started.elapsed().as_secs_f64() / executed as f64;
        format!("{:.0}s", per * remaining as f64)
    } else {
        "?".into()
    };
    eprintln!("progress: {done}/{total} experiments (eta {eta})");
    let _ = std::io::stderr().flush();
}

/// Canonical experiment order: benchmark, then size, then strategy, then
/// experiment index.
fn schedule(plan: &TournamentPlan) -> Vec<ExperimentTask> {
    let mut tasks = Vec::new();
    for benchmark_idx in 0..plan.benchmarks.len() {
        for size_idx in 0..plan.sample_sizes.len() {
            for strategy_idx in 0..plan.strategies.len() {
                for experiment_index in 0..plan.experiments_per_size[size_idx] {
                    tasks.push(ExperimentTask {
                        benchmark_idx,
                        size_idx,
                        strategy_idx,
                        experiment_index,
                    });
                }
            }
        }
    }
    tasks
}

/// How many leading outcome records agree with the canonical schedule.
fn count_matching_prefix(
    plan: &TournamentPlan,
    tasks: &[ExperimentTask],
    outcomes: &[OutcomeRecord],
) -> usize {
    let mut n = 0;
    for (task, outcome) in tasks.iter().zip(outcomes) {
        let matches = outcome.benchmark == plan.benchmarks[task.benchmark_idx].id
            && outcome.strategy == plan.strategies[task.strategy_idx].id
            && outcome.sample_size == plan.sample_sizes[task.size_idx]
            && outcome.experiment_index == task.experiment_index
            && outcome.final_repetitions == plan.final_repetitions;
        if !matches {
            break;
        }
        n += 1;
    }
    n
}

type DatasetKey = (usize, Option<usize>); // (benchmark index, size index)

/// Generate (or reload, on resume) the datasets the plan's strategies need.
fn prepare_datasets(
    plan: &TournamentPlan,
    out_dir: &Path,
    resume: bool,
) -> Result<BTreeMap<DatasetKey, Vec<Eval>>> {
    let mut datasets = BTreeMap::new();
    if !plan.strategies.iter().any(|s| s.spec.uses_dataset()) {
        return Ok(datasets);
    }
    for (b, bench) in plan.benchmarks.iter().enumerate() {
        let size_keys: Vec<Option<usize>> = if plan.regenerate_dataset_per_size {
            (0..plan.sample_sizes.len()).map(Some).collect()
        } else {
            vec![None]
        };
        for size_key in size_keys {
            let size_tag = size_key.map(|i| plan.sample_sizes[i]);
            let path = out_dir.join(paths::dataset(&bench.id, size_tag));
            let reloaded = if resume && path.exists() {
                // a partially written dataset (killed run) is regenerated
                StoreReader::read_dataset(&path)
                    .ok()
                    .filter(|d| d.len() == plan.dataset_size)
            } else {
                None
            };
            let data = match reloaded {
                Some(data) => data,
                None => {
                    let seed = derive_seed(
                        plan.master_seed,
                        &bench.id,
                        DATASET_STRATEGY_ID,
                        size_tag.unwrap_or(0) as u64,
                        0,
                    );
                    let mut rng = TuneRng::seed_from_u64(seed);
                    let data = pregenerate_dataset(
                        &plan.space,
                        &bench.objective,
                        plan.dataset_size,
                        &mut rng,
                    );
                    StoreWriter::write_dataset(&path, &data)?;
                    data
                }
            };
            datasets.insert((b, size_key), data);
        }
    }
    Ok(datasets)
}

fn run_experiment(
    plan: &TournamentPlan,
    task: &ExperimentTask,
    datasets: &BTreeMap<DatasetKey, Vec<Eval>>,
) -> Result<ExperimentResult> {
    let bench = &plan.benchmarks[task.benchmark_idx];
    let strat = &plan.strategies[task.strategy_idx];
    let size = plan.sample_sizes[task.size_idx];

    let seed = derive_seed(
        plan.master_seed,
        &bench.id,
        &strat.id,
        size as u64,
        task.experiment_index as u64,
    );
    let mut rng = TuneRng::seed_from_u64(seed);

    let slice_owner;
    let presampled: Option<&[Eval]> = if strat.spec.uses_dataset() {
        let size_key = plan.regenerate_dataset_per_size.then_some(task.size_idx);
        let dataset = datasets
            .get(&(task.benchmark_idx, size_key))
            .ok_or_else(|| Error::Capacity(format!("no dataset for benchmark {}", bench.id)))?;
        slice_owner = subdivide(dataset, size, task.experiment_index)?;
        Some(slice_owner)
    } else {
        None
    };

    let outcome = run_strategy(
        &strat.spec,
        &plan.space,
        &bench.objective,
        size,
        presampled,
        plan.final_repetitions,
        &mut rng,
    )?;

    let mut trials = Vec::with_capacity(outcome.history.len() + plan.final_repetitions);
    for (evaluation_index, e) in outcome.history.iter().enumerate() {
        trials.push(TrialRecord {
            benchmark: bench.id.clone(),
            strategy: strat.id.clone(),
            sample_size: size,
            experiment_index: task.experiment_index,
            evaluation_index,
            config: e.config,
            runtime_ms: e.runtime_ms,
            penalized: e.penalized,
        });
    }
    // final repetitions continue the evaluation index after the search
    for (i, &runtime_ms) in outcome.final_score.samples.iter().enumerate() {
        trials.push(TrialRecord {
            benchmark: bench.id.clone(),
            strategy: strat.id.clone(),
            sample_size: size,
            experiment_index: task.experiment_index,
            evaluation_index: outcome.history.len() + i,
            config: outcome.best_config,
            runtime_ms,
            penalized: false,
        });
    }
    let record = OutcomeRecord {
        benchmark: bench.id.clone(),
        strategy: strat.id.clone(),
        sample_size: size,
        experiment_index: task.experiment_index,
        best_config: outcome.best_config,
        best_search_runtime_ms: outcome.best_search_runtime_ms,
        final_mean_ms: outcome.final_score.mean_runtime_ms,
        evaluations_used: outcome.evaluations_used,
        final_repetitions: outcome.final_score.repetitions(),
    };
    Ok(ExperimentResult { trials, outcome: record })
}

/// Convenience: the store directory layout for a finished run.
pub fn store_paths(out_dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    (
        out_dir.join(paths::TRIALS),
        out_dir.join(paths::OUTCOMES),
        out_dir.join(paths::RESOLVED_PLAN),
    )
}
