//! The search strategies: random search, random-forest surrogate search, a
//! genetic algorithm, GP- and TPE-based Bayesian optimization, plus an
//! exhaustive oracle strategy for tests.
//!
//! Constraint policy: random search, the forest surrogate and the genetic
//! algorithm only ever evaluate valid configurations; the two Bayesian
//! strategies sample the unconstrained box and may evaluate invalid
//! configurations, which the objective penalizes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{FinalScore, Objective};
use crate::space::{Configuration, SearchSpace};
use crate::surrogate::forest::{ForestModel, ForestOptions};
use crate::surrogate::gp::GpModel;
use crate::surrogate::parzen::ParzenPair;
use crate::TuneRng;

/// Exhaustive runs refuse spaces with more valid configurations than this.
pub const EXHAUSTIVE_GUARD: u64 = 10_000_000;

/// One search-time evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub config: Configuration,
    pub runtime_ms: f64,
    pub penalized: bool,
}

/// Result of running one strategy once against an objective.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// The configuration the strategy reports as its answer.
    pub best_config: Configuration,
    /// Minimum runtime seen anywhere during the search.
    pub best_search_runtime_ms: f64,
    /// Mean of the repeated final evaluations of `best_config`.
    pub final_score: FinalScore,
    /// Every search evaluation, in order.
    pub history: Vec<Eval>,
    /// Number of search evaluations spent (`history.len()`).
    pub evaluations_used: usize,
    /// Iterations where a failed GP fit fell back to a random sample.
    pub gp_fallbacks: usize,
}

/// Random-search options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RsOptions {
    /// Draw distinct configurations (test facility; needs an enumerable space).
    pub without_replacement: bool,
    /// Consume the tournament's pre-generated dataset when available.
    pub use_dataset: bool,
}

impl Default for RsOptions {
    fn default() -> Self {
        Self { without_replacement: false, use_dataset: true }
    }
}

/// Forest-surrogate options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfOptions {
    pub trees: usize,
    pub max_depth: usize,
    pub feature_subset: usize,
    /// Cap on the prediction candidate pool; `None` scans the whole valid set.
    pub pool_cap: Option<usize>,
    pub use_dataset: bool,
}

impl Default for RfOptions {
    fn default() -> Self {
        Self { trees: 100, max_depth: 10, feature_subset: 2, pool_cap: None, use_dataset: true }
    }
}

impl RfOptions {
    fn forest_options(&self) -> ForestOptions {
        ForestOptions {
            trees: self.trees,
            max_depth: Some(self.max_depth),
            feature_subset: self.feature_subset,
            bootstrap: true,
        }
    }
}

/// Genetic-algorithm options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaOptions {
    /// Override of the budget-derived population size.
    pub population: Option<usize>,
    /// Override of the budget-derived generation count.
    pub generations: Option<usize>,
    pub mutation_rate: f64,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self { population: None, generations: None, mutation_rate: 0.1 }
    }
}

/// GP-based Bayesian-optimization options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoGpOptions {
    /// Fraction of the budget spent on random initialization.
    pub init_fraction: f64,
    /// Random box candidates scored by EI per iteration.
    pub candidates: usize,
    pub noise_variance: f64,
    pub length_scale_grid: Vec<f64>,
}

impl Default for BoGpOptions {
    fn default() -> Self {
        Self {
            init_fraction: 0.08,
            candidates: 1000,
            noise_variance: crate::surrogate::gp::DEFAULT_NOISE_VARIANCE,
            length_scale_grid: crate::surrogate::gp::DEFAULT_LENGTH_SCALE_GRID.to_vec(),
        }
    }
}

/// TPE-based Bayesian-optimization options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoTpeOptions {
    pub gamma: f64,
    /// Candidates drawn from the good density per iteration.
    pub candidates: usize,
    /// Override of the budget-derived startup count min(20, ceil(S/4)).
    pub startup: Option<usize>,
}

impl Default for BoTpeOptions {
    fn default() -> Self {
        Self {
            gamma: crate::surrogate::parzen::DEFAULT_GAMMA,
            candidates: crate::surrogate::parzen::DEFAULT_CANDIDATES,
            startup: None,
        }
    }
}

/// A strategy plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    RandomSearch(RsOptions),
    RfSurrogate(RfOptions),
    Genetic(GaOptions),
    BoGp(BoGpOptions),
    BoTpe(BoTpeOptions),
    Exhaustive,
}

impl StrategySpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            StrategySpec::RandomSearch(_) => "random-search",
            StrategySpec::RfSurrogate(_) => "rf-surrogate",
            StrategySpec::Genetic(_) => "genetic",
            StrategySpec::BoGp(_) => "bo-gp",
            StrategySpec::BoTpe(_) => "bo-tpe",
            StrategySpec::Exhaustive => "exhaustive",
        }
    }

    /// Whether this strategy consumes the pre-generated dataset.
    pub fn uses_dataset(&self) -> bool {
        match self {
            StrategySpec::RandomSearch(o) => o.use_dataset && !o.without_replacement,
            StrategySpec::RfSurrogate(o) => o.use_dataset,
            _ => false,
        }
    }

    /// Smallest budget the strategy accepts.
    pub fn min_budget(&self) -> usize {
        match self {
            StrategySpec::RandomSearch(_) => 1,
            StrategySpec::RfSurrogate(_) => 12,
            StrategySpec::Genetic(_) => 8,
            StrategySpec::BoGp(_) | StrategySpec::BoTpe(_) => 5,
            StrategySpec::Exhaustive => 1,
        }
    }

    /// Validate kind-specific options against the budgets they will run at.
    pub fn validate(&self, budgets: &[usize]) -> Result<()> {
        for &budget in budgets {
            if !matches!(self, StrategySpec::Exhaustive) && budget < self.min_budget() {
                return Err(Error::Budget(format!(
                    "{} needs a budget of at least {}, got {budget}",
                    self.kind_name(),
                    self.min_budget()
                )));
            }
        }
        match self {
            StrategySpec::Genetic(o) => {
                if !(0.0..=1.0).contains(&o.mutation_rate) {
                    return Err(Error::Plan(format!(
                        "ga.mutation_rate {} not in [0,1]",
                        o.mutation_rate
                    )));
                }
                for &budget in budgets {
                    let (pop, gens) = ga_schedule_with(o, budget)?;
                    if pop * gens > budget {
                        return Err(Error::Plan(format!(
                            "ga population {pop} * generations {gens} exceeds budget {budget}"
                        )));
                    }
                }
            }
            StrategySpec::BoGp(o) => {
                if !(0.0..1.0).contains(&o.init_fraction) {
                    return Err(Error::Plan(format!(
                        "bo_gp.init_fraction {} not in [0,1)",
                        o.init_fraction
                    )));
                }
                if o.candidates == 0 || o.length_scale_grid.is_empty() {
                    return Err(Error::Plan(
                        "bo_gp needs candidates >= 1 and a non-empty length_scale_grid".into(),
                    ));
                }
            }
            StrategySpec::BoTpe(o) => {
                if !(0.0 < o.gamma && o.gamma < 1.0) {
                    return Err(Error::Plan(format!("bo_tpe.gamma {} not in (0,1)", o.gamma)));
                }
                if o.candidates == 0 {
                    return Err(Error::Plan("bo_tpe.candidates must be >= 1".into()));
                }
                if let Some(s) = o.startup {
                    if s < 2 {
                        return Err(Error::Plan("bo_tpe.startup must be >= 2".into()));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Run the strategy described by `spec` once.
///
/// `presampled` supplies the dataset slice for dataset-consuming strategies;
/// it must hold exactly `budget` records when given.
pub fn run_strategy(
    spec: &StrategySpec,
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    presampled: Option<&[Eval]>,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    match spec {
        StrategySpec::RandomSearch(o) => {
            run_random_search(space, objective, budget, presampled, o, final_reps, rng)
        }
        StrategySpec::RfSurrogate(o) => {
            run_rf_surrogate(space, objective, budget, presampled, o, final_reps, rng)
        }
        StrategySpec::Genetic(o) => run_ga(space, objective, budget, o, final_reps, rng),
        StrategySpec::BoGp(o) => run_bo_gp(space, objective, budget, o, final_reps, rng),
        StrategySpec::BoTpe(o) => run_bo_tpe(space, objective, budget, o, final_reps, rng),
        StrategySpec::Exhaustive => run_exhaustive(space, objective, final_reps, rng),
    }
}

fn evaluate_into(
    history: &mut Vec<Eval>,
    objective: &dyn Objective,
    c: Configuration,
    rng: &mut TuneRng,
) {
    let m = objective.evaluate_once(&c, rng);
    history.push(Eval { config: c, runtime_ms: m.runtime_ms, penalized: m.penalized });
}

/// First strict minimum of the history (ties keep the earliest).
fn argmin(history: &[Eval]) -> &Eval {
    history
        .iter()
        .reduce(|best, e| if e.runtime_ms < best.runtime_ms { e } else { best })
        .expect("history is never empty")
}

fn finish(
    best_config: Configuration,
    history: Vec<Eval>,
    gp_fallbacks: usize,
    objective: &dyn Objective,
    final_reps: usize,
    rng: &mut TuneRng,
) -> ExperimentOutcome {
    let best_search_runtime_ms = argmin(&history).runtime_ms;
    let final_score = objective.evaluate_final(&best_config, final_reps, rng);
    ExperimentOutcome {
        best_config,
        best_search_runtime_ms,
        final_score,
        evaluations_used: history.len(),
        history,
        gp_fallbacks,
    }
}

/// Random search: `budget` constrained-uniform single evaluations, answer is
/// the argmin.
pub fn run_random_search(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    presampled: Option<&[Eval]>,
    options: &RsOptions,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    if budget < 1 {
        return Err(Error::Budget("random search needs a budget of at least 1".into()));
    }
    let history: Vec<Eval> = if let Some(records) = presampled {
        if records.len() != budget {
            return Err(Error::Capacity(format!(
                "presampled slice has {} records, budget is {budget}",
                records.len()
            )));
        }
        records.to_vec()
    } else if options.without_replacement {
        let configs = space.sample_valid_without_replacement(budget, rng)?;
        let mut history = Vec::with_capacity(budget);
        for c in configs {
            evaluate_into(&mut history, objective, c, rng);
        }
        history
    } else {
        let mut history = Vec::with_capacity(budget);
        for _ in 0..budget {
            let c = space.sample_uniform(true, rng);
            evaluate_into(&mut history, objective, c, rng);
        }
        history
    };
    let best = argmin(&history).config;
    Ok(finish(best, history, 0, objective, final_reps, rng))
}

/// Forest-surrogate search: train on `budget - 10` samples, then evaluate the
/// 10 best-predicted configurations and answer with the best of those.
pub fn run_rf_surrogate(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    presampled: Option<&[Eval]>,
    options: &RfOptions,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    let forest_opts = options.forest_options();
    run_rf_with(
        space,
        objective,
        budget,
        presampled,
        options.pool_cap,
        final_reps,
        rng,
        |train, rng| {
            let model = ForestModel::fit(train, &forest_opts, rng)?;
            Ok(Box::new(move |c: &Configuration| model.predict(c)))
        },
    )
}

/// Forest search with a pluggable predictor factory (the production path fits
/// a forest; tests substitute a perfect oracle).
#[allow(clippy::too_many_arguments)]
fn run_rf_with<F>(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    presampled: Option<&[Eval]>,
    pool_cap: Option<usize>,
    final_reps: usize,
    rng: &mut TuneRng,
    fit: F,
) -> Result<ExperimentOutcome>
where
    F: FnOnce(
        &[(Configuration, f64)],
        &mut TuneRng,
    ) -> Result<Box<dyn Fn(&Configuration) -> f64>>,
{
    const PREDICTION_EVALS: usize = 10;
    if budget < PREDICTION_EVALS + 2 {
        return Err(Error::Budget(format!(
            "forest surrogate needs a budget of at least {}, got {budget}",
            PREDICTION_EVALS + 2
        )));
    }
    let train_n = budget - PREDICTION_EVALS;
    let mut history: Vec<Eval> = if let Some(records) = presampled {
        if records.len() != budget {
            return Err(Error::Capacity(format!(
                "presampled slice has {} records, budget is {budget}",
                records.len()
            )));
        }
        records[..train_n].to_vec()
    } else {
        let mut history = Vec::with_capacity(budget);
        for _ in 0..train_n {
            let c = space.sample_uniform(true, rng);
            evaluate_into(&mut history, objective, c, rng);
        }
        history
    };

    let train: Vec<(Configuration, f64)> =
        history.iter().map(|e| (e.config, e.runtime_ms)).collect();
    let predictor = fit(&train, rng)?;

    // Candidate pool: the whole valid set, or a uniform subsample of it.
    let pool: Vec<Configuration> = match pool_cap {
        Some(cap) if (cap as u64) < space.count_valid() => {
            (0..cap).map(|_| space.sample_uniform(true, rng)).collect()
        }
        _ => space.enumerate_valid()?,
    };
    let mut ranked: Vec<(f64, Configuration)> =
        pool.into_iter().map(|c| (predictor(&c), c)).collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    // Top predictions, deduplicated; the pool refills from the next best.
    let mut top = Vec::with_capacity(PREDICTION_EVALS);
    for (_, c) in &ranked {
        if !top.contains(c) {
            top.push(*c);
            if top.len() == PREDICTION_EVALS {
                break;
            }
        }
    }
    if top.len() < PREDICTION_EVALS {
        return Err(Error::Domain(format!(
            "candidate pool only yielded {} distinct configurations",
            top.len()
        )));
    }

    let first_prediction = history.len();
    for c in top {
        evaluate_into(&mut history, objective, c, rng);
    }
    // The answer is the best of the evaluated predictions, not of the
    // training samples.
    let best = argmin(&history[first_prediction..]).config;
    Ok(finish(best, history, 0, objective, final_reps, rng))
}

/// Population/generation schedule for a budget.
///
/// The canonical sample sizes use a fixed table; other budgets take an even
/// population near sqrt(S) with generations filling the budget.
pub fn ga_schedule(budget: usize) -> (usize, usize) {
    match budget {
        25 => (8, 3),
        50 => (10, 5),
        100 => (10, 10),
        200 => (20, 10),
        400 => (20, 20),
        s => {
            let pop = (2.0 * ((s as f64).sqrt() / 2.0).round()).max(2.0) as usize;
            let generations = (s / pop).max(1);
            (pop, generations)
        }
    }
}

fn ga_schedule_with(options: &GaOptions, budget: usize) -> Result<(usize, usize)> {
    let (default_pop, default_gens) = ga_schedule(budget);
    let pop = options.population.unwrap_or(default_pop);
    let gens = options.generations.unwrap_or(default_gens);
    if pop < 2 || gens < 1 {
        return Err(Error::Plan(format!(
            "ga needs population >= 2 and generations >= 1, got {pop}/{gens}"
        )));
    }
    Ok((pop, gens))
}

/// Crossover: genes at `mask` positions from `a`, the rest from `b`.
pub fn crossover(a: &Configuration, b: &Configuration, mask: [bool; 6]) -> Configuration {
    let av = a.as_array();
    let bv = b.as_array();
    Configuration::from_array(std::array::from_fn(|i| if mask[i] { av[i] } else { bv[i] }))
}

/// Genetic algorithm: truncation selection keeping the top half, refill by
/// 3-of-6 mask crossover plus per-gene mutation, every generation evaluating
/// the full population once.
pub fn run_ga(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    options: &GaOptions,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    if budget < 8 {
        return Err(Error::Budget(format!(
            "genetic algorithm needs a budget of at least 8, got {budget}"
        )));
    }
    let (pop_size, generations) = ga_schedule_with(options, budget)?;
    if pop_size * generations > budget {
        return Err(Error::Plan(format!(
            "ga population {pop_size} * generations {generations} exceeds budget {budget}"
        )));
    }
    let ranges = space.ranges();

    let mut population: Vec<Configuration> =
        (0..pop_size).map(|_| space.sample_uniform(true, rng)).collect();
    let mut history: Vec<Eval> = Vec::with_capacity(pop_size * generations);

    for generation in 0..generations {
        let first = history.len();
        for &c in &population {
            evaluate_into(&mut history, objective, c, rng);
        }
        if generation + 1 == generations {
            break;
        }
        let fitness = &history[first..];
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&i, &j| {
            fitness[i].runtime_ms.partial_cmp(&fitness[j].runtime_ms).unwrap().then(i.cmp(&j))
        });
        let keep = pop_size.div_ceil(2);
        let survivors: Vec<Configuration> =
            order[..keep].iter().map(|&i| population[i]).collect();

        let mut next = survivors.clone();
        while next.len() < pop_size {
            let (pa, pb) = pick_parents(&survivors, rng);
            let mask = gene_mask(rng);
            let mut child = crossover(&pa, &pb, mask);
            let mut genes = child.as_array();
            for (d, range) in ranges.iter().enumerate() {
                if rng.random::<f64>() < options.mutation_rate {
                    genes[d] = rng.random_range(range.lo..=range.hi);
                }
            }
            child = Configuration::from_array(genes);
            // repair: resample work-group genes until the constraint holds
            while child.workgroup_product() > space.constraint_limit {
                let mut genes = child.as_array();
                for d in 3..6 {
                    genes[d] = rng.random_range(ranges[d].lo..=ranges[d].hi);
                }
                child = Configuration::from_array(genes);
            }
            next.push(child);
        }
        population = next;
    }
    let best = argmin(&history).config;
    Ok(finish(best, history, 0, objective, final_reps, rng))
}

fn pick_parents(survivors: &[Configuration], rng: &mut TuneRng) -> (Configuration, Configuration) {
    if survivors.len() == 1 {
        return (survivors[0], survivors[0]);
    }
    let i = rng.random_range(0..survivors.len());
    let mut j = rng.random_range(0..survivors.len() - 1);
    if j >= i {
        j += 1;
    }
    (survivors[i], survivors[j])
}

/// Uniformly random 3-of-6 gene mask.
fn gene_mask(rng: &mut TuneRng) -> [bool; 6] {
    let chosen = rand::seq::index::sample(rng, 6, 3);
    let mut mask = [false; 6];
    for i in chosen {
        mask[i] = true;
    }
    mask
}

/// Number of random initialization samples for a GP budget.
pub fn bo_gp_init_count(budget: usize, init_fraction: f64) -> usize {
    ((init_fraction * budget as f64).round() as usize).max(2)
}

/// GP-based Bayesian optimization: random initialization, then one
/// argmax-EI evaluation per iteration over a random box candidate set.
pub fn run_bo_gp(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    options: &BoGpOptions,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    if budget < 5 {
        return Err(Error::Budget(format!(
            "bo-gp needs a budget of at least 5, got {budget}"
        )));
    }
    let n_init = bo_gp_init_count(budget, options.init_fraction).min(budget);
    let mut history: Vec<Eval> = Vec::with_capacity(budget);
    for _ in 0..n_init {
        let c = space.sample_uniform(false, rng);
        evaluate_into(&mut history, objective, c, rng);
    }
    let ranges = space.ranges();
    let mut gp_fallbacks = 0usize;
    while history.len() < budget {
        let train: Vec<(Configuration, f64)> =
            history.iter().map(|e| (e.config, e.runtime_ms)).collect();
        let candidate = match GpModel::fit(
            &train,
            space,
            options.noise_variance,
            &options.length_scale_grid,
        ) {
            Ok(model) => {
                let best_observed = argmin(&history).runtime_ms;
                let mut best: Option<(f64, Configuration)> = None;
                for _ in 0..options.candidates {
                    // continuous box draw rounded to the integer grid
                    let genes: [u32; 6] = std::array::from_fn(|d| {
                        let lo = ranges[d].lo as f64;
                        let hi = ranges[d].hi as f64;
                        rng.random_range(lo..=hi).round() as u32
                    });
                    let c = Configuration::from_array(genes);
                    let (mean, var) = model.posterior(&c);
                    let ei = crate::surrogate::gp::expected_improvement(mean, var, best_observed);
                    let better = match &best {
                        None => true,
                        Some((best_ei, best_c)) => {
                            ei > *best_ei || (ei == *best_ei && c < *best_c)
                        }
                    };
                    if better {
                        best = Some((ei, c));
                    }
                }
                best.expect("candidates >= 1").1
            }
            Err(err) => {
                log::warn!("gp fit failed, falling back to a random sample: {err}");
                gp_fallbacks += 1;
                space.sample_uniform(false, rng)
            }
        };
        evaluate_into(&mut history, objective, candidate, rng);
    }
    let best = argmin(&history).config;
    Ok(finish(best, history, gp_fallbacks, objective, final_reps, rng))
}

/// Default TPE startup count: min(20, ceil(S/4)).
pub fn bo_tpe_startup_count(budget: usize) -> usize {
    budget.div_ceil(4).clamp(2, 20)
}

/// TPE-based Bayesian optimization: random startup, then one evaluation per
/// iteration of the best-scoring candidate drawn from the good density.
pub fn run_bo_tpe(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    options: &BoTpeOptions,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    if budget < 5 {
        return Err(Error::Budget(format!(
            "bo-tpe needs a budget of at least 5, got {budget}"
        )));
    }
    let startup = options.startup.unwrap_or_else(|| bo_tpe_startup_count(budget)).min(budget);
    let mut history: Vec<Eval> = Vec::with_capacity(budget);
    for _ in 0..startup {
        let c = space.sample_uniform(false, rng);
        evaluate_into(&mut history, objective, c, rng);
    }
    while history.len() < budget {
        let observations: Vec<(Configuration, f64)> =
            history.iter().map(|e| (e.config, e.runtime_ms)).collect();
        let pair = ParzenPair::fit(&observations, options.gamma, space)?;
        let mut best: Option<(f64, Configuration)> = None;
        for _ in 0..options.candidates {
            let c = pair.sample_good(rng);
            let score = pair.score(&c);
            let better = match &best {
                None => true,
                Some((best_score, best_c)) => {
                    score > *best_score || (score == *best_score && c < *best_c)
                }
            };
            if better {
                best = Some((score, c));
            }
        }
        evaluate_into(&mut history, objective, best.expect("candidates >= 1").1, rng);
    }
    let best = argmin(&history).config;
    Ok(finish(best, history, 0, objective, final_reps, rng))
}

/// Evaluate every valid configuration once; the ultimate baseline and the
/// brute-force oracle for tests.
pub fn run_exhaustive(
    space: &SearchSpace,
    objective: &dyn Objective,
    final_reps: usize,
    rng: &mut TuneRng,
) -> Result<ExperimentOutcome> {
    let n_valid = space.count_valid();
    if n_valid > EXHAUSTIVE_GUARD {
        return Err(Error::SpaceTooLarge { actual: n_valid, guard: EXHAUSTIVE_GUARD });
    }
    let mut history = Vec::with_capacity(n_valid as usize);
    for c in space.enumerate_valid()? {
        evaluate_into(&mut history, objective, c, rng);
    }
    let best = argmin(&history).config;
    Ok(finish(best, history, 0, objective, final_reps, rng))
}
