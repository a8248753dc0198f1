//! Append-only line-delimited stores for trials, outcomes and datasets.
//!
//! One record per line, fixed field order, UTF-8. Floats are written with
//! Rust's shortest round-trip formatting, so parsing a store back yields
//! bit-identical values and rebuilt reports are exact. Resume works by record
//! count: a complete experiment contributes `evaluations_used +
//! final_repetitions` trial lines and one outcome line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::space::Configuration;
use crate::strategies::Eval;

pub const TRIALS_HEADER: &str =
    "benchmark,strategy,size,experiment,evaluation,xt,yt,zt,xw,yw,zw,runtime_ms,penalized";
pub const OUTCOMES_HEADER: &str = "benchmark,strategy,size,experiment,xt,yt,zt,xw,yw,zw,\
                                   best_search_runtime_ms,final_mean_ms,evaluations_used,\
                                   final_repetitions";
pub const DATASET_HEADER: &str = "xt,yt,zt,xw,yw,zw,runtime_ms,penalized";

/// One persisted objective evaluation with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub benchmark: String,
    pub strategy: String,
    pub sample_size: usize,
    pub experiment_index: usize,
    pub evaluation_index: usize,
    pub config: Configuration,
    pub runtime_ms: f64,
    pub penalized: bool,
}

impl TrialRecord {
    fn to_line(&self) -> String {
        let c = self.config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.benchmark,
            self.strategy,
            self.sample_size,
            self.experiment_index,
            self.evaluation_index,
            c.xt,
            c.yt,
            c.zt,
            c.xw,
            c.yw,
            c.zw,
            self.runtime_ms,
            self.penalized as u8
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(Error::StoreParse(format!("trial line has {} fields: {line:?}", f.len())));
        }
        Ok(Self {
            benchmark: f[0].to_string(),
            strategy: f[1].to_string(),
            sample_size: parse(f[2], line)?,
            experiment_index: parse(f[3], line)?,
            evaluation_index: parse(f[4], line)?,
            config: Configuration::new(
                parse(f[5], line)?,
                parse(f[6], line)?,
                parse(f[7], line)?,
                parse(f[8], line)?,
                parse(f[9], line)?,
                parse(f[10], line)?,
            ),
            runtime_ms: parse(f[11], line)?,
            penalized: parse::<u8>(f[12], line)? != 0,
        })
    }
}

/// One persisted experiment outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub benchmark: String,
    pub strategy: String,
    pub sample_size: usize,
    pub experiment_index: usize,
    pub best_config: Configuration,
    pub best_search_runtime_ms: f64,
    pub final_mean_ms: f64,
    pub evaluations_used: usize,
    pub final_repetitions: usize,
}

impl OutcomeRecord {
    fn to_line(&self) -> String {
        let c = self.best_config;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.benchmark,
            self.strategy,
            self.sample_size,
            self.experiment_index,
            c.xt,
            c.yt,
            c.zt,
            c.xw,
            c.yw,
            c.zw,
            self.best_search_runtime_ms,
            self.final_mean_ms,
            self.evaluations_used,
            self.final_repetitions
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(Error::StoreParse(format!(
                "outcome line has {} fields: {line:?}",
                f.len()
            )));
        }
        Ok(Self {
            benchmark: f[0].to_string(),
            strategy: f[1].to_string(),
            sample_size: parse(f[2], line)?,
            experiment_index: parse(f[3], line)?,
            best_config: Configuration::new(
                parse(f[4], line)?,
                parse(f[5], line)?,
                parse(f[6], line)?,
                parse(f[7], line)?,
                parse(f[8], line)?,
                parse(f[9], line)?,
            ),
            best_search_runtime_ms: parse(f[10], line)?,
            final_mean_ms: parse(f[11], line)?,
            evaluations_used: parse(f[12], line)?,
            final_repetitions: parse(f[13], line)?,
        })
    }
}

fn parse<T: std::str::FromStr>(field: &str, line: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::StoreParse(format!("bad field {field:?} in line {line:?}")))
}

/// Append-oriented writer; writes the matching header on an empty file.
pub struct StoreWriter {
    inner: BufWriter<File>,
}

impl StoreWriter {
    pub fn trials(path: &Path) -> Result<Self> {
        Self::open(path, TRIALS_HEADER)
    }

    pub fn outcomes(path: &Path) -> Result<Self> {
        Self::open(path, OUTCOMES_HEADER)
    }

    fn open(path: &Path, header: &str) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let empty = file.metadata()?.len() == 0;
        let mut inner = BufWriter::new(file);
        if empty {
            writeln!(inner, "{header}")?;
        }
        Ok(Self { inner })
    }

    pub fn write_trial(&mut self, record: &TrialRecord) -> Result<()> {
        writeln!(self.inner, "{}", record.to_line())?;
        Ok(())
    }

    pub fn write_outcome(&mut self, record: &OutcomeRecord) -> Result<()> {
        writeln!(self.inner, "{}", record.to_line())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }

    /// Rewrite `path` keeping its header and the first `records` data lines.
    /// A missing file becomes an empty one (header added on next open).
    pub fn truncate_to(path: &Path, records: usize) -> Result<()> {
        if !path.exists() {
            File::create(path)?;
            return Ok(());
        }
        let reader = BufReader::new(File::open(path)?);
        let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
        let keep = lines.len().min(1 + records);
        let mut out = BufWriter::new(File::create(path)?);
        for line in &lines[..keep] {
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Persist a pre-generated dataset in one go.
    pub fn write_dataset(path: &Path, dataset: &[Eval]) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{DATASET_HEADER}")?;
        for e in dataset {
            let c = e.config;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.xt, c.yt, c.zt, c.xw, c.yw, c.zw, e.runtime_ms, e.penalized as u8
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Readers for the persisted stores. A truncated trailing line (from a killed
/// writer) is dropped; malformed interior lines are errors.
pub struct StoreReader;

impl StoreReader {
    pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
        Self::read_records(path, TrialRecord::parse)
    }

    pub fn read_outcomes(path: &Path) -> Result<Vec<OutcomeRecord>> {
        Self::read_records(path, OutcomeRecord::parse)
    }

    pub fn read_dataset(path: &Path) -> Result<Vec<Eval>> {
        Self::read_records(path, |line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::StoreParse(format!(
                    "dataset line has {} fields: {line:?}",
                    f.len()
                )));
            }
            Ok(Eval {
                config: Configuration::new(
                    parse(f[0], line)?,
                    parse(f[1], line)?,
                    parse(f[2], line)?,
                    parse(f[3], line)?,
                    parse(f[4], line)?,
                    parse(f[5], line)?,
                ),
                runtime_ms: parse(f[6], line)?,
                penalized: parse::<u8>(f[7], line)? != 0,
            })
        })
    }

    fn read_records<T>(path: &Path, parse_line: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
        let reader = BufReader::new(File::open(path)?);
        let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
        let mut out = Vec::with_capacity(lines.len().saturating_sub(1));
        for (i, line) in lines.iter().enumerate().skip(1) {
            match parse_line(line) {
                Ok(r) => out.push(r),
                Err(_) if i + 1 == lines.len() => break, // partial trailing write
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}
