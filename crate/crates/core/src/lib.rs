//! Autotuning search-strategy workbench.
//!
//! The crate bundles everything needed to run desk-scale tournaments between
//! black-box search strategies on a constrained integer tuning space:
//!
//! - [`space`] — the 6-parameter search space (3 thread-coarsening factors,
//!   3 work-group sizes) with its work-group product constraint.
//! - [`objective`] — synthetic performance landscapes, an external-command
//!   adapter, noise injection and the single-run / final-10-run protocol.
//! - [`surrogate`] — random-forest regression, Gaussian-process regression
//!   with Expected Improvement, and Parzen good/bad density estimators.
//! - [`strategies`] — random search, RF-surrogate search, a genetic
//!   algorithm, GP- and TPE-based Bayesian optimization, plus an exhaustive
//!   oracle strategy.
//! - [`stats`] — Mann-Whitney U (exact and normal-approximate), the common
//!   language effect size, percent-of-optimum, speedup and confidence
//!   intervals.
//! - [`tournament`] — replicated, seed-derived experiment scheduling with an
//!   append-only, resumable raw-results store.
//! - [`report`] — aggregation of raw results into comparison matrices with
//!   significance flags, emitted as CSV, JSON and SVG heatmaps.
//! - [`plan`] — the TOML plan-file format consumed by the CLI.

pub mod error;
pub mod objective;
pub mod plan;
pub mod report;
pub mod space;
pub mod stats;
pub mod strategies;
pub mod surrogate;
pub mod tournament;

pub use error::{Error, Result};

/// Deterministic random stream used throughout the crate.
///
/// Every experiment owns one, seeded through
/// [`tournament::derive_seed`], so replays are bit-identical across
/// process restarts and parallelism degrees.
pub type TuneRng = rand_chacha::ChaCha8Rng;
