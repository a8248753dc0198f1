//! Measurement functions: synthetic performance landscapes, an
//! external-command adapter, multiplicative lognormal noise and the
//! single-run / final-10-run measurement protocol.
//!
//! The synthetic landscapes are deterministic stand-ins for GPU kernels. They
//! encode warp quantization (efficiency plateaus at work-group products that
//! are multiples of 32), a thread-coarsening sweet spot, and per-landscape
//! character: a work-group aspect-ratio ridge for the harris-like landscape
//! and sinusoidal multimodality for the mandelbrot-like one. Their optima are
//! established by brute force in tests, never assumed.

use std::io::Read;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Configuration;
use crate::TuneRng;

/// Work-group product above which the synthetic "hardware" rejects a
/// configuration and the penalty constant is returned.
pub const HARDWARE_WORKGROUP_LIMIT: u64 = 256;

/// Default penalty for constraint-violating or failed runs, in ms.
pub const DEFAULT_PENALTY_MS: f64 = 10_000.0;

/// Default number of repetitions for the final measurement.
pub const DEFAULT_FINAL_REPETITIONS: usize = 10;

/// Default timeout for one external-command run.
pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(60);

/// One objective evaluation result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Measured (or penalty) runtime in milliseconds; always positive.
    pub runtime_ms: f64,
    /// Whether this run hit the constraint/failure penalty.
    pub penalized: bool,
}

/// Mean of repeated final evaluations of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalScore {
    pub mean_runtime_ms: f64,
    pub samples: Vec<f64>,
}

impl FinalScore {
    pub fn repetitions(&self) -> usize {
        self.samples.len()
    }
}

/// Which measurement function backs an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    #[serde(rename = "synthetic-add")]
    SyntheticAdd,
    #[serde(rename = "synthetic-harris")]
    SyntheticHarris,
    #[serde(rename = "synthetic-mandelbrot")]
    SyntheticMandelbrot,
    #[serde(rename = "external")]
    External,
}

impl ObjectiveKind {
    pub fn is_synthetic(&self) -> bool {
        !matches!(self, ObjectiveKind::External)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::SyntheticAdd => "synthetic-add",
            ObjectiveKind::SyntheticHarris => "synthetic-harris",
            ObjectiveKind::SyntheticMandelbrot => "synthetic-mandelbrot",
            ObjectiveKind::External => "external",
        }
    }
}

/// A measurement function plus its noise and failure-penalty settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Lognormal noise scale; 0 disables noise.
    pub noise_sigma: f64,
    /// Runtime assigned to constraint-violating or failed runs, in ms.
    pub penalty_ms: f64,
    /// Command template for [`ObjectiveKind::External`]; must contain the
    /// placeholders `{xt} {yt} {zt} {xw} {yw} {zw}`.
    pub command: Option<String>,
    /// Timeout for one external run, in seconds.
    pub timeout_s: f64,
}

impl ObjectiveSpec {
    pub fn synthetic(kind: ObjectiveKind, noise_sigma: f64) -> Self {
        assert!(kind.is_synthetic(), "use ObjectiveSpec::external for commands");
        Self {
            kind,
            noise_sigma,
            penalty_ms: DEFAULT_PENALTY_MS,
            command: None,
            timeout_s: DEFAULT_EXTERNAL_TIMEOUT.as_secs_f64(),
        }
    }

    pub fn external(command: impl Into<String>) -> Self {
        Self {
            kind: ObjectiveKind::External,
            noise_sigma: 0.0,
            penalty_ms: DEFAULT_PENALTY_MS,
            command: Some(command.into()),
            timeout_s: DEFAULT_EXTERNAL_TIMEOUT.as_secs_f64(),
        }
    }

    /// Deterministic noiseless landscape value for a synthetic objective.
    ///
    /// Returns `penalty_ms` when the work-group product exceeds the hardware
    /// limit of 256. External objectives are a wrong-kind error.
    pub fn base_value(&self, c: &Configuration) -> Result<f64> {
        if !self.kind.is_synthetic() {
            return Err(Error::WrongObjectiveKind(
                "base_value is only defined for synthetic objectives".into(),
            ));
        }
        if c.workgroup_product() > HARDWARE_WORKGROUP_LIMIT {
            return Ok(self.penalty_ms);
        }
        let t = c.thread_product() as f64;
        let w = c.workgroup_product() as f64;
        let warp_eff = w / (32.0 * (w / 32.0).ceil());
        let add = 1.0
            + 0.6 * (1.0 - warp_eff)
            + 0.25 * (t.log2() - 1.0).abs()
            + 0.15 * (w.log2() - 5.0).abs();
        Ok(match self.kind {
            ObjectiveKind::SyntheticAdd => add,
            ObjectiveKind::SyntheticHarris => {
                add + 0.4 * ((c.xw as f64).log2() - (c.yw as f64).log2()).abs()
                    + if c.zw > 1 { 0.2 } else { 0.0 }
            }
            ObjectiveKind::SyntheticMandelbrot => {
                let phase = (c.xt * c.yw + c.yt * c.xw) as f64;
                add + 0.3 * (1.0 + phase.sin()) / 2.0
            }
            ObjectiveKind::External => unreachable!(),
        })
    }
}

/// A measurement function a strategy can query.
///
/// Implementations must be pure given the explicit random stream so that
/// experiments replay bit-identically.
pub trait Objective {
    /// One measurement, as used during search.
    fn evaluate_once(&self, c: &Configuration, rng: &mut TuneRng) -> Measurement;

    /// `reps` independent measurements of the final configuration; the mean
    /// compensates for runtime variance.
    fn evaluate_final(&self, c: &Configuration, reps: usize, rng: &mut TuneRng) -> FinalScore {
        assert!(reps >= 1, "final evaluation needs at least one repetition");
        let samples: Vec<f64> = (0..reps)
            .map(|_| self.evaluate_once(c, rng).runtime_ms)
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        FinalScore { mean_runtime_ms: mean, samples }
    }
}

impl Objective for ObjectiveSpec {
    fn evaluate_once(&self, c: &Configuration, rng: &mut TuneRng) -> Measurement {
        match self.kind {
            ObjectiveKind::External => {
                let template = self.command.as_deref().unwrap_or("");
                match run_external(template, c, Duration::from_secs_f64(self.timeout_s)) {
                    Ok(runtime_ms) => Measurement { runtime_ms, penalized: false },
                    Err(err) => {
                        log::warn!("external run penalized: {err}");
                        Measurement { runtime_ms: self.penalty_ms, penalized: true }
                    }
                }
            }
            _ => {
                let base = self.base_value(c).expect("synthetic kind");
                if base >= self.penalty_ms {
                    // Penalized values carry the constant without noise.
                    return Measurement { runtime_ms: self.penalty_ms, penalized: true };
                }
                let runtime_ms = if self.noise_sigma > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    base * (self.noise_sigma * z).exp()
                } else {
                    base
                };
                Measurement { runtime_ms, penalized: false }
            }
        }
    }
}

/// Substitute the six parameters into `template`, run it through the shell,
/// and parse a decimal runtime in ms from the last line of stdout.
///
/// Child contract: print the runtime as the last stdout line. Nonzero exit,
/// unparseable output, or a timeout yield an error (callers penalize).
pub fn run_external(template: &str, c: &Configuration, timeout: Duration) -> Result<f64> {
    let cmd = substitute(template, c);
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()?;

    let start = Instant::now();
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None => {
                if start.elapsed() > timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::Domain(format!("external command timed out: {cmd}")));
                }
                std::thread::sleep(Duration::from_millis(2));
            }
        }
    };
    let mut stdout = String::new();
    if let Some(mut pipe) = child.stdout.take() {
        pipe.read_to_string(&mut stdout)?;
    }
    if !status.success() {
        return Err(Error::Domain(format!(
            "external command exited with {status}: {cmd}"
        )));
    }
    let last = stdout
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Domain(format!("external command produced no output: {cmd}")))?;
    last.trim()
        .parse::<f64>()
        .map_err(|_| Error::Domain(format!("unparseable runtime line {last:?} from: {cmd}")))
        .and_then(|v| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Domain(format!("non-positive runtime {v} from: {cmd}")))
            }
        })
}

/// Replace the `{xt}..{zw}` placeholders with the configuration's values.
pub fn substitute(template: &str, c: &Configuration) -> String {
    template
        .replace("{xt}", &c.xt.to_string())
        .replace("{yt}", &c.yt.to_string())
        .replace("{zt}", &c.zt.to_string())
        .replace("{xw}", &c.xw.to_string())
        .replace("{yw}", &c.yw.to_string())
        .replace("{zw}", &c.zw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SearchSpace;
    use rand::SeedableRng;

    fn add_spec() -> ObjectiveSpec {
        ObjectiveSpec::synthetic(ObjectiveKind::SyntheticAdd, 0.0)
    }

    #[test]
    fn base_value_penalizes_oversized_workgroup() {
        let spec = add_spec();
        let v = spec.base_value(&Configuration::new(1, 1, 1, 8, 8, 8)).unwrap();
        assert_eq!(v, DEFAULT_PENALTY_MS);
    }

    #[test]
    fn base_value_hand_computed_fixture() {
        // T=2, W=256: warp_eff=1, |log2 2 - 1| = 0, |log2 256 - 5| = 3.
        let spec = add_spec();
        let v = spec.base_value(&Configuration::new(2, 1, 1, 8, 8, 4)).unwrap();
        assert!((v - 1.45).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn base_value_rejects_external_kind() {
        let spec = ObjectiveSpec::external("echo 1.0");
        let err = spec.base_value(&Configuration::new(1, 1, 1, 1, 1, 1)).unwrap_err();
        assert!(matches!(err, Error::WrongObjectiveKind(_)));
    }

    /// Brute-force optimum fixtures over the full valid default space,
    /// frozen from an exhaustive scan (see `global_minima_match_fixtures`).
    pub(crate) const OPTIMA: [(ObjectiveKind, [u32; 6], f64); 3] = [
        (ObjectiveKind::SyntheticAdd, [1, 1, 2, 1, 4, 8], 1.0),
        (ObjectiveKind::SyntheticHarris, [1, 1, 2, 8, 8, 1], 1.15),
        (
            ObjectiveKind::SyntheticMandelbrot,
            [1, 2, 1, 8, 1, 4],
            1.0057903762180664,
        ),
    ];

    #[test]
    fn global_minima_match_fixtures() {
        let space = SearchSpace::default();
        let all = space.enumerate_valid().unwrap();
        for (kind, cfg, value) in OPTIMA {
            let spec = ObjectiveSpec::synthetic(kind, 0.0);
            let best = all
                .iter()
                .map(|c| (spec.base_value(c).unwrap(), *c))
                .min_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap();
            assert_eq!(best.1, Configuration::from_array(cfg), "{kind:?}");
            assert!((best.0 - value).abs() < 1e-12, "{kind:?}: {} vs {value}", best.0);
        }
    }

    #[test]
    fn penalty_exceeds_every_valid_landscape_value() {
        let space = SearchSpace::default();
        let all = space.enumerate_valid().unwrap();
        for kind in [
            ObjectiveKind::SyntheticAdd,
            ObjectiveKind::SyntheticHarris,
            ObjectiveKind::SyntheticMandelbrot,
        ] {
            let spec = ObjectiveSpec::synthetic(kind, 0.0);
            let max = all
                .iter()
                .map(|c| spec.base_value(c).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max < spec.penalty_ms, "{kind:?}: max {max}");
        }
    }

    #[test]
    fn noiseless_evaluation_is_deterministic() {
        let spec = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticMandelbrot, 0.0);
        let c = Configuration::new(3, 2, 1, 4, 4, 2);
        let mut rng = TuneRng::seed_from_u64(0);
        let a = spec.evaluate_once(&c, &mut rng);
        let b = spec.evaluate_once(&c, &mut rng);
        assert_eq!(a.runtime_ms.to_bits(), b.runtime_ms.to_bits());
        assert_eq!(a.runtime_ms.to_bits(), spec.base_value(&c).unwrap().to_bits());
        assert!(!a.penalized);
    }

    #[test]
    fn invalid_config_measurement_is_penalized() {
        let spec = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticAdd, 0.5);
        let mut rng = TuneRng::seed_from_u64(1);
        let m = spec.evaluate_once(&Configuration::new(1, 1, 1, 8, 8, 8), &mut rng);
        assert!(m.penalized);
        assert_eq!(m.runtime_ms, DEFAULT_PENALTY_MS);
    }

    #[test]
    fn lognormal_noise_mean_identity() {
        // E[base * exp(sigma Z)] = base * exp(sigma^2 / 2).
        let sigma = 0.05;
        let spec = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticAdd, sigma);
        let c = Configuration::new(2, 1, 1, 8, 4, 1);
        let base = spec.base_value(&c).unwrap();
        let mut rng = TuneRng::seed_from_u64(42);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| spec.evaluate_once(&c, &mut rng).runtime_ms)
            .sum::<f64>()
            / n as f64;
        let expect = base * (sigma * sigma / 2.0).exp();
        assert!((mean - expect).abs() / expect < 0.01, "mean {mean} vs {expect}");
    }

    #[test]
    fn final_score_mean_matches_samples() {
        let spec = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticAdd, 0.05);
        let c = Configuration::new(2, 1, 1, 8, 4, 1);
        let mut rng = TuneRng::seed_from_u64(3);
        let score = spec.evaluate_final(&c, 10, &mut rng);
        assert_eq!(score.repetitions(), 10);
        let mean = score.samples.iter().sum::<f64>() / 10.0;
        assert!((score.mean_runtime_ms - mean).abs() < 1e-15);
    }

    #[test]
    fn final_score_noiseless_equals_base() {
        let spec = add_spec();
        let c = Configuration::new(2, 1, 1, 8, 4, 1);
        let mut rng = TuneRng::seed_from_u64(4);
        let score = spec.evaluate_final(&c, 10, &mut rng);
        assert_eq!(score.mean_runtime_ms, spec.base_value(&c).unwrap());
    }

    #[test]
    fn final_score_single_repetition() {
        let spec = add_spec();
        let mut rng = TuneRng::seed_from_u64(5);
        let score = spec.evaluate_final(&Configuration::new(2, 1, 1, 8, 4, 1), 1, &mut rng);
        assert_eq!(score.samples.len(), 1);
    }

    #[test]
    fn final_score_standard_error_matches_monte_carlo() {
        // SE of the 10-rep mean is close to sigma * base / sqrt(10) for small sigma.
        let sigma = 0.05;
        let spec = ObjectiveSpec::synthetic(ObjectiveKind::SyntheticAdd, sigma);
        let c = Configuration::new(2, 1, 1, 8, 4, 1);
        let base = spec.base_value(&c).unwrap();
        let mut rng = TuneRng::seed_from_u64(6);
        let trials = 1000;
        let means: Vec<f64> = (0..trials)
            .map(|_| spec.evaluate_final(&c, 10, &mut rng).mean_runtime_ms)
            .collect();
        let grand = means.iter().sum::<f64>() / trials as f64;
        let sd = (means.iter().map(|m| (m - grand).powi(2)).sum::<f64>()
            / (trials - 1) as f64)
            .sqrt();
        let expect = sigma * base / (10.0f64).sqrt();
        assert!((sd - expect).abs() / expect < 0.15, "sd {sd} vs {expect}");
    }

    #[test]
    fn external_constant_program() {
        let c = Configuration::new(1, 1, 1, 1, 1, 1);
        let v = run_external("echo 42.0", &c, Duration::from_secs(5)).unwrap();
        assert_eq!(v, 42.0);
    }

    #[test]
    fn external_substitutes_parameters() {
        let c = Configuration::new(3, 1, 1, 2, 2, 1);
        assert_eq!(substitute("run {xt} {yt} {zt} {xw} {yw} {zw}", &c), "run 3 1 1 2 2 1");
        let v = run_external("echo {xt}", &c, Duration::from_secs(5)).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn external_failure_paths_penalize() {
        let spec = ObjectiveSpec::external("exit 3");
        let mut rng = TuneRng::seed_from_u64(0);
        let m = spec.evaluate_once(&Configuration::new(1, 1, 1, 1, 1, 1), &mut rng);
        assert!(m.penalized);
        assert_eq!(m.runtime_ms, DEFAULT_PENALTY_MS);

        let garbage = ObjectiveSpec::external("echo not-a-number");
        let m = garbage.evaluate_once(&Configuration::new(1, 1, 1, 1, 1, 1), &mut rng);
        assert!(m.penalized);
    }

    #[test]
    fn external_parses_last_line() {
        let c = Configuration::new(1, 1, 1, 1, 1, 1);
        let v = run_external("printf 'log line\\n12.5\\n'", &c, Duration::from_secs(5)).unwrap();
        assert_eq!(v, 12.5);
    }

    #[test]
    fn external_timeout_penalizes() {
        let mut spec = ObjectiveSpec::external("sleep 5; echo 1.0");
        spec.timeout_s = 0.05;
        let mut rng = TuneRng::seed_from_u64(0);
        let m = spec.evaluate_once(&Configuration::new(1, 1, 1, 1, 1, 1), &mut rng);
        assert!(m.penalized);
    }
}
