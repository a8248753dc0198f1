//! The TOML plan-file format: space, benchmarks, strategies with namespaced
//! hyperparameter tables, sample sizes, experiment counts and seeds. Unknown
//! keys are rejected, defaults are applied on load, and the resolved plan can
//! be dumped back out as a plan file that reproduces the run exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{
    ObjectiveKind, ObjectiveSpec, DEFAULT_EXTERNAL_TIMEOUT, DEFAULT_PENALTY_MS,
};
use crate::space::{ParamRange, SearchSpace};
use crate::strategies::{
    BoGpOptions, BoTpeOptions, GaOptions, RfOptions, RsOptions, StrategySpec,
};
use crate::tournament::{BenchmarkEntry, StrategyEntry, TournamentPlan};

/// Default noise scale applied to synthetic benchmarks in plan files.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SpaceDoc {
    thread_ranges: [[u32; 2]; 3],
    workgroup_ranges: [[u32; 2]; 3],
    constraint_limit: u64,
}

impl Default for SpaceDoc {
    fn default() -> Self {
        Self::from_space(&SearchSpace::default())
    }
}

impl SpaceDoc {
    fn to_space(&self) -> Result<SearchSpace> {
        let range = |pair: [u32; 2]| -> Result<ParamRange> {
            if pair[0] < 1 || pair[1] < pair[0] {
                return Err(Error::Plan(format!(
                    "range [{},{}] must satisfy 1 <= lo <= hi",
                    pair[0], pair[1]
                )));
            }
            Ok(ParamRange::new(pair[0], pair[1]))
        };
        Ok(SearchSpace {
            thread_ranges: [
                range(self.thread_ranges[0])?,
                range(self.thread_ranges[1])?,
                range(self.thread_ranges[2])?,
            ],
            workgroup_ranges: [
                range(self.workgroup_ranges[0])?,
                range(self.workgroup_ranges[1])?,
                range(self.workgroup_ranges[2])?,
            ],
            constraint_limit: self.constraint_limit,
        })
    }

    fn from_space(space: &SearchSpace) -> Self {
        let pair = |r: &ParamRange| [r.lo, r.hi];
        Self {
            thread_ranges: [
                pair(&space.thread_ranges[0]),
                pair(&space.thread_ranges[1]),
                pair(&space.thread_ranges[2]),
            ],
            workgroup_ranges: [
                pair(&space.workgroup_ranges[0]),
                pair(&space.workgroup_ranges[1]),
                pair(&space.workgroup_ranges[2]),
            ],
            constraint_limit: space.constraint_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TournamentDoc {
    sample_sizes: Vec<usize>,
    /// When omitted, each size gets its schedule default
    /// ([`crate::tournament::default_experiments_for`]).
    #[serde(skip_serializing_if = "Option::is_none")]
    experiments_per_size: Option<Vec<usize>>,
    final_repetitions: usize,
    dataset_size: usize,
    regenerate_dataset_per_size: bool,
}

impl Default for TournamentDoc {
    fn default() -> Self {
        Self {
            sample_sizes: crate::tournament::DEFAULT_SAMPLE_SIZES.to_vec(),
            experiments_per_size: None,
            final_repetitions: crate::objective::DEFAULT_FINAL_REPETITIONS,
            dataset_size: crate::tournament::DEFAULT_DATASET_SIZE,
            regenerate_dataset_per_size: false,
        }
    }
}

impl TournamentDoc {
    fn resolved_experiments(&self) -> Vec<usize> {
        self.experiments_per_size.clone().unwrap_or_else(|| {
            self.sample_sizes
                .iter()
                .map(|&s| crate::tournament::default_experiments_for(s))
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ReportDoc {
    alpha: f64,
    confidence_level: f64,
}

impl Default for ReportDoc {
    fn default() -> Self {
        Self { alpha: 0.01, confidence_level: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkDoc {
    id: String,
    kind: ObjectiveKind,
    #[serde(default = "default_noise")]
    noise_sigma: f64,
    #[serde(default = "default_penalty")]
    penalty_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(default = "default_timeout")]
    timeout_s: f64,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_SIGMA
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY_MS
}

fn default_timeout() -> f64 {
    DEFAULT_EXTERNAL_TIMEOUT.as_secs_f64()
}

impl BenchmarkDoc {
    fn to_entry(&self) -> Result<BenchmarkEntry> {
        if self.noise_sigma < 0.0 {
            return Err(Error::Plan(format!(
                "benchmark {:?}: noise_sigma must be >= 0",
                self.id
            )));
        }
        if self.penalty_ms <= 0.0 {
            return Err(Error::Plan(format!(
                "benchmark {:?}: penalty_ms must be > 0",
                self.id
            )));
        }
        if self.kind == ObjectiveKind::External && self.command.is_none() {
            return Err(Error::Plan(format!(
                "benchmark {:?}: external benchmarks need a command",
                self.id
            )));
        }
        if self.kind != ObjectiveKind::External && self.command.is_some() {
            return Err(Error::Plan(format!(
                "benchmark {:?}: command only applies to external benchmarks",
                self.id
            )));
        }
        Ok(BenchmarkEntry {
            id: self.id.clone(),
            objective: ObjectiveSpec {
                kind: self.kind,
                noise_sigma: self.noise_sigma,
                penalty_ms: self.penalty_ms,
                command: self.command.clone(),
                timeout_s: self.timeout_s,
            },
        })
    }

    fn from_entry(entry: &BenchmarkEntry) -> Self {
        Self {
            id: entry.id.clone(),
            kind: entry.objective.kind,
            noise_sigma: entry.objective.noise_sigma,
            penalty_ms: entry.objective.penalty_ms,
            command: entry.objective.command.clone(),
            timeout_s: entry.objective.timeout_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rs: Option<RsOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rf: Option<RfOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ga: Option<GaOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bo_gp: Option<BoGpOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bo_tpe: Option<BoTpeOptions>,
}

impl StrategyDoc {
    fn to_entry(&self) -> Result<StrategyEntry> {
        let mismatch = |table: &str| {
            Error::Plan(format!(
                "strategy {:?}: the {table} option table does not apply to kind {:?}",
                self.id, self.kind
            ))
        };
        let mut tables: Vec<&str> = Vec::new();
        if self.rs.is_some() {
            tables.push("rs");
        }
        if self.rf.is_some() {
            tables.push("rf");
        }
        if self.ga.is_some() {
            tables.push("ga");
        }
        if self.bo_gp.is_some() {
            tables.push("bo_gp");
        }
        if self.bo_tpe.is_some() {
            tables.push("bo_tpe");
        }
        let expect_only = |allowed: Option<&str>| -> Result<()> {
            for t in &tables {
                if Some(*t) != allowed {
                    return Err(mismatch(t));
                }
            }
            Ok(())
        };
        let spec = match self.kind.as_str() {
            "random-search" => {
                expect_only(Some("rs"))?;
                StrategySpec::RandomSearch(self.rs.clone().unwrap_or_default())
            }
            "rf-surrogate" => {
                expect_only(Some("rf"))?;
                StrategySpec::RfSurrogate(self.rf.clone().unwrap_or_default())
            }
            "genetic" => {
                expect_only(Some("ga"))?;
                StrategySpec::Genetic(self.ga.clone().unwrap_or_default())
            }
            "bo-gp" => {
                expect_only(Some("bo_gp"))?;
                StrategySpec::BoGp(self.bo_gp.clone().unwrap_or_default())
            }
            "bo-tpe" => {
                expect_only(Some("bo_tpe"))?;
                StrategySpec::BoTpe(self.bo_tpe.clone().unwrap_or_default())
            }
            "exhaustive" => {
                expect_only(None)?;
                StrategySpec::Exhaustive
            }
            other => {
                return Err(Error::Plan(format!(
                    "strategy {:?}: unknown kind {other:?} (expected one of random-search, \
                     rf-surrogate, genetic, bo-gp, bo-tpe, exhaustive)",
                    self.id
                )))
            }
        };
        Ok(StrategyEntry { id: self.id.clone(), spec })
    }

    fn from_entry(entry: &StrategyEntry) -> Self {
        let mut doc = Self {
            id: entry.id.clone(),
            kind: entry.spec.kind_name().to_string(),
            rs: None,
            rf: None,
            ga: None,
            bo_gp: None,
            bo_tpe: None,
        };
        match &entry.spec {
            StrategySpec::RandomSearch(o) => doc.rs = Some(o.clone()),
            StrategySpec::RfSurrogate(o) => doc.rf = Some(o.clone()),
            StrategySpec::Genetic(o) => doc.ga = Some(o.clone()),
            StrategySpec::BoGp(o) => doc.bo_gp = Some(o.clone()),
            StrategySpec::BoTpe(o) => doc.bo_tpe = Some(o.clone()),
            StrategySpec::Exhaustive => {}
        }
        doc
    }
}

/// A parsed plan file. Use [`PlanFile::to_plan`] to validate and resolve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    master_seed: u64,
    #[serde(default)]
    space: SpaceDoc,
    #[serde(default)]
    tournament: TournamentDoc,
    #[serde(default)]
    report: ReportDoc,
    benchmarks: Vec<BenchmarkDoc>,
    strategies: Vec<StrategyDoc>,
}

impl PlanFile {
    /// Parse plan text; diagnostics carry the offending key and position.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Plan(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Resolve defaults and validate into an executable plan.
    pub fn to_plan(&self) -> Result<TournamentPlan> {
        let plan = TournamentPlan {
            benchmarks: self
                .benchmarks
                .iter()
                .map(|b| b.to_entry())
                .collect::<Result<_>>()?,
            strategies: self
                .strategies
                .iter()
                .map(|s| s.to_entry())
                .collect::<Result<_>>()?,
            sample_sizes: self.tournament.sample_sizes.clone(),
            experiments_per_size: self.tournament.resolved_experiments(),
            final_repetitions: self.tournament.final_repetitions,
            master_seed: self.master_seed,
            space: self.space.to_space()?,
            dataset_size: self.tournament.dataset_size,
            regenerate_dataset_per_size: self.tournament.regenerate_dataset_per_size,
            alpha: self.report.alpha,
            confidence_level: self.report.confidence_level,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// The fully resolved plan-file form of an executable plan.
    pub fn from_plan(plan: &TournamentPlan) -> Self {
        Self {
            master_seed: plan.master_seed,
            space: SpaceDoc::from_space(&plan.space),
            tournament: TournamentDoc {
                sample_sizes: plan.sample_sizes.clone(),
                experiments_per_size: Some(plan.experiments_per_size.clone()),
                final_repetitions: plan.final_repetitions,
                dataset_size: plan.dataset_size,
                regenerate_dataset_per_size: plan.regenerate_dataset_per_size,
            },
            report: ReportDoc { alpha: plan.alpha, confidence_level: plan.confidence_level },
            benchmarks: plan.benchmarks.iter().map(BenchmarkDoc::from_entry).collect(),
            strategies: plan.strategies.iter().map(StrategyDoc::from_entry).collect(),
        }
    }

    /// TOML text of the resolved plan (all defaults explicit).
    pub fn resolved_text(plan: &TournamentPlan) -> Result<String> {
        toml::to_string(&Self::from_plan(plan))
            .map_err(|e| Error::Plan(format!("cannot serialize resolved plan: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY_PLAN: &str = r#"
master_seed = 42

[tournament]
sample_sizes = [25, 50]
experiments_per_size = [4, 2]
dataset_size = 200

[[benchmarks]]
id = "add"
kind = "synthetic-add"

[[benchmarks]]
id = "mandel"
kind = "synthetic-mandelbrot"
noise_sigma = 0.0

[[strategies]]
id = "rs"
kind = "random-search"

[[strategies]]
id = "ga"
kind = "genetic"
[strategies.ga]
mutation_rate = 0.2

[[strategies]]
id = "gp"
kind = "bo-gp"
[strategies.bo_gp]
candidates = 100
"#;

    #[test]
    fn toy_plan_parses_with_defaults() {
        let plan = PlanFile::parse(TOY_PLAN).unwrap().to_plan().unwrap();
        assert_eq!(plan.master_seed, 42);
        assert_eq!(plan.sample_sizes, vec![25, 50]);
        assert_eq!(plan.final_repetitions, 10);
        assert_eq!(plan.space, SearchSpace::default());
        assert_eq!(plan.benchmarks[0].objective.noise_sigma, DEFAULT_NOISE_SIGMA);
        assert_eq!(plan.benchmarks[1].objective.noise_sigma, 0.0);
        assert_eq!(plan.alpha, 0.01);
        match &plan.strategies[1].spec {
            StrategySpec::Genetic(o) => assert_eq!(o.mutation_rate, 0.2),
            other => panic!("expected genetic, got {other:?}"),
        }
        match &plan.strategies[2].spec {
            StrategySpec::BoGp(o) => {
                assert_eq!(o.candidates, 100);
                assert_eq!(o.init_fraction, 0.08);
            }
            other => panic!("expected bo-gp, got {other:?}"),
        }
    }

    #[test]
    fn omitted_experiment_counts_follow_the_size_schedule() {
        let text = r#"
master_seed = 5
[tournament]
sample_sizes = [25, 50, 100, 200, 400, 1000]
[[benchmarks]]
id = "add"
kind = "synthetic-add"
[[strategies]]
id = "rs"
kind = "random-search"
[strategies.rs]
use_dataset = false
"#;
        let plan = PlanFile::parse(text).unwrap().to_plan().unwrap();
        assert_eq!(plan.experiments_per_size, vec![800, 400, 200, 100, 50, 20]);
    }

    #[test]
    fn fully_default_tournament_matches_the_study_schedule() {
        let text = r#"
master_seed = 5
[[benchmarks]]
id = "add"
kind = "synthetic-add"
[[strategies]]
id = "rs"
kind = "random-search"
"#;
        let plan = PlanFile::parse(text).unwrap().to_plan().unwrap();
        assert_eq!(plan.sample_sizes, vec![25, 50, 100, 200, 400]);
        assert_eq!(plan.experiments_per_size, vec![800, 400, 200, 100, 50]);
        assert_eq!(plan.dataset_size, 20_000);
        assert_eq!(plan.final_repetitions, 10);
        // every cell consumes the whole dataset exactly
        for (s, e) in plan.sample_sizes.iter().zip(&plan.experiments_per_size) {
            assert_eq!(s * e, 20_000);
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = PlanFile::parse("master_seed = 1\nbogus_key = 2\nbenchmarks = []\nstrategies = []")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "diagnostic was: {msg}");
    }

    #[test]
    fn mismatched_option_table_is_rejected() {
        let text = r#"
master_seed = 1
[[benchmarks]]
id = "add"
kind = "synthetic-add"
[[strategies]]
id = "rs"
kind = "random-search"
[strategies.ga]
mutation_rate = 0.5
"#;
        let err = PlanFile::parse(text).unwrap().to_plan().unwrap_err();
        assert!(err.to_string().contains("ga option table"), "{err}");
    }

    #[test]
    fn resolved_dump_round_trips_identically() {
        let plan = PlanFile::parse(TOY_PLAN).unwrap().to_plan().unwrap();
        let dump = PlanFile::resolved_text(&plan).unwrap();
        let reparsed = PlanFile::parse(&dump).unwrap().to_plan().unwrap();
        assert_eq!(plan, reparsed);
        // a second resolution round is byte-stable
        assert_eq!(dump, PlanFile::resolved_text(&reparsed).unwrap());
    }

    #[test]
    fn external_benchmark_requires_command() {
        let text = r#"
master_seed = 1
[[benchmarks]]
id = "ext"
kind = "external"
[[strategies]]
id = "rs"
kind = "random-search"
"#;
        let err = PlanFile::parse(text).unwrap().to_plan().unwrap_err();
        assert!(err.to_string().contains("command"), "{err}");
    }

    #[test]
    fn ga_budget_overrides_are_validated() {
        let text = r#"
master_seed = 1
[tournament]
sample_sizes = [25]
experiments_per_size = [2]
[[benchmarks]]
id = "add"
kind = "synthetic-add"
[[strategies]]
id = "ga"
kind = "genetic"
[strategies.ga]
population = 10
generations = 10
"#;
        let err = PlanFile::parse(text).unwrap().to_plan().unwrap_err();
        assert!(err.to_string().contains("exceeds budget"), "{err}");
    }
}
