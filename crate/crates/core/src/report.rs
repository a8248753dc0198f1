//! Aggregation of raw tournament results into comparison matrices:
//! percent-of-optimum, median speedup over random search, and the common
//! language effect size over random search, plus pairwise one-sided
//! significance tests. Matrices are emitted as CSV, a single JSON document
//! and SVG heatmaps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    cles, confidence_interval, mann_whitney_u, median, Alternative, SamplePair,
};
use crate::tournament::store::{OutcomeRecord, StoreReader};
use crate::tournament::{paths, TournamentPlan};

/// Relative median gap below which a pairwise difference is never flagged.
pub const MIN_RELATIVE_GAP: f64 = 0.01;

/// How a benchmark's reference optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimumSource {
    /// Exhaustive scan of the noiseless synthetic landscape.
    #[serde(rename = "brute-force-noiseless")]
    BruteForceNoiseless,
    /// Minimum final score observed anywhere in the study.
    #[serde(rename = "study-minimum")]
    StudyMinimum,
}

/// strategies x sizes value matrix (rows follow the plan's strategy order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub values: Vec<Vec<f64>>,
}

impl Matrix {
    fn get(&self, strategy: usize, size: usize) -> f64 {
        self.values[strategy][size]
    }
}

/// Pairwise test results at one sample size; entry (a, b) tests "a is less
/// than b" one-sided. Diagonal p entries are 1, gaps 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub sample_size: usize,
    pub p_less: Vec<Vec<f64>>,
    /// Relative median gap (median_b - median_a) / median_b.
    pub rel_median_gap: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
}

/// Per-benchmark matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    pub optimum_ms: f64,
    pub optimum_source: OptimumSource,
    pub percent_of_optimum: Matrix,
    pub median_speedup_vs_rs: Option<Matrix>,
    pub cles_vs_rs: Option<Matrix>,
    pub pairwise: Vec<PairwiseMatrix>,
}

/// Aggregate percent-of-optimum across benchmarks for one (strategy, size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub sample_size: usize,
    pub mean_percent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Fixed definition strings embedded in the emitted report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub percent_of_optimum: String,
    pub median_speedup: String,
    pub cles: String,
    pub significance: String,
    pub optimum_policy: String,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self {
            percent_of_optimum: "100 * optimum / median(per-experiment final mean runtimes); \
                                 higher is better"
                .into(),
            median_speedup: "median(baseline final means) / median(strategy final means)".into(),
            cles: "P(baseline final mean > strategy final mean) + 0.5 P(equal); probability the \
                   strategy beats the baseline"
                .into(),
            significance: "one-sided Mann-Whitney U p < alpha AND relative median gap > 1%"
                .into(),
            optimum_policy: "brute-force noiseless optimum for noiseless synthetic benchmarks, \
                             otherwise the minimum final score observed in the study"
                .into(),
        }
    }
}

/// The full comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub confidence_level: f64,
    /// Strategy id treated as the random-search baseline, when present.
    pub baseline: Option<String>,
    pub sample_sizes: Vec<usize>,
    pub strategies: Vec<String>,
    pub metadata: ReportMetadata,
    pub benchmarks: Vec<BenchmarkReport>,
    pub aggregate: Vec<AggregateRow>,
}

/// Whether a pair (a better than b) passes the significance rule: one-sided
/// MWU p < alpha and the medians differ by more than `min_rel_gap`
/// relatively.
pub fn significant_pair(a: &[f64], b: &[f64], alpha: f64, min_rel_gap: f64) -> bool {
    let med_a = median(a).unwrap_or(f64::NAN);
    let med_b = median(b).unwrap_or(f64::NAN);
    if !(med_a.is_finite() && med_b.is_finite()) || med_b <= 0.0 {
        return false;
    }
    let gap = (med_b - med_a) / med_b;
    if gap <= min_rel_gap {
        return false;
    }
    match SamplePair::new(a.to_vec(), b.to_vec()) {
        Ok(pair) => mann_whitney_u(&pair, Alternative::Less).p_value < alpha,
        Err(_) => false,
    }
}

/// Per-experiment final means grouped by (benchmark, size index, strategy index).
type Cells = BTreeMap<(String, usize, usize), Vec<f64>>;

fn collect_cells(plan: &TournamentPlan, outcomes: &[OutcomeRecord]) -> Result<Cells> {
    let strategy_index: BTreeMap<&str, usize> = plan
        .strategies
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let size_index: BTreeMap<usize, usize> = plan
        .sample_sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let mut cells: Cells = BTreeMap::new();
    for o in outcomes {
        let si = *strategy_index.get(o.strategy.as_str()).ok_or_else(|| {
            Error::StoreParse(format!("outcome references unknown strategy {:?}", o.strategy))
        })?;
        let zi = *size_index.get(&o.sample_size).ok_or_else(|| {
            Error::StoreParse(format!("outcome references unknown size {}", o.sample_size))
        })?;
        cells
            .entry((o.benchmark.clone(), zi, si))
            .or_default()
            .push(o.final_mean_ms);
    }
    // refuse on incomplete cells, listing them
    let mut missing = Vec::new();
    for b in &plan.benchmarks {
        for (zi, &size) in plan.sample_sizes.iter().enumerate() {
            for (si, s) in plan.strategies.iter().enumerate() {
                let have = cells
                    .get(&(b.id.clone(), zi, si))
                    .map(|v| v.len())
                    .unwrap_or(0);
                let want = plan.experiments_per_size[zi];
                if have != want {
                    missing.push(format!("{}/{}/S{size} ({have}/{want})", b.id, s.id));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteStore(missing));
    }
    Ok(cells)
}

/// Reference optimum for one benchmark per the optimum policy.
fn benchmark_optimum(
    plan: &TournamentPlan,
    benchmark: &str,
    outcomes: &[OutcomeRecord],
) -> Result<(f64, OptimumSource)> {
    let entry = plan
        .benchmarks
        .iter()
        .find(|b| b.id == benchmark)
        .expect("benchmark exists");
    if entry.objective.kind.is_synthetic() && entry.objective.noise_sigma == 0.0 {
        if let Ok(configs) = plan.space.enumerate_valid() {
            let best = configs
                .iter()
                .map(|c| entry.objective.base_value(c).expect("synthetic"))
                .fold(f64::INFINITY, f64::min);
            return Ok((best, OptimumSource::BruteForceNoiseless));
        }
        // space too large to enumerate: fall through to the study minimum
    }
    let best = outcomes
        .iter()
        .filter(|o| o.benchmark == benchmark)
        .map(|o| o.final_mean_ms)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Domain(format!("no outcomes for benchmark {benchmark:?}")));
    }
    Ok((best, OptimumSource::StudyMinimum))
}

/// Build the comparison report from persisted outcomes.
///
/// Pure aggregation: rebuilding from the same store yields identical bytes.
pub fn build_report(plan: &TournamentPlan, outcomes: &[OutcomeRecord]) -> Result<ComparisonReport> {
    let cells = collect_cells(plan, outcomes)?;
    let n_strategies = plan.strategies.len();
    let n_sizes = plan.sample_sizes.len();
    let baseline_idx = plan
        .strategies
        .iter()
        .position(|s| matches!(s.spec, crate::strategies::StrategySpec::RandomSearch(_)));

    let mut benchmarks = Vec::with_capacity(plan.benchmarks.len());
    for b in &plan.benchmarks {
        let (optimum_ms, optimum_source) = benchmark_optimum(plan, &b.id, outcomes)?;
        let cell = |zi: usize, si: usize| -> &Vec<f64> { &cells[&(b.id.clone(), zi, si)] };

        let mut percent = vec![vec![0.0; n_sizes]; n_strategies];
        for si in 0..n_strategies {
            for zi in 0..n_sizes {
                percent[si][zi] =
                    crate::stats::percent_of_optimum(cell(zi, si), optimum_ms)?;
            }
        }

        let (speedup, cles_m) = if let Some(bi) = baseline_idx {
            let mut speedup = vec![vec![0.0; n_sizes]; n_strategies];
            let mut cles_m = vec![vec![0.0; n_sizes]; n_strategies];
            for si in 0..n_strategies {
                for zi in 0..n_sizes {
                    let rs = cell(zi, bi);
                    let alg = cell(zi, si);
                    speedup[si][zi] = crate::stats::median_speedup(alg, rs)?;
                    let pair = SamplePair::new(rs.clone(), alg.clone())?;
                    cles_m[si][zi] = cles(&pair);
                }
            }
            (Some(Matrix { values: speedup }), Some(Matrix { values: cles_m }))
        } else {
            (None, None)
        };

        let mut pairwise = Vec::with_capacity(n_sizes);
        for (zi, &sample_size) in plan.sample_sizes.iter().enumerate() {
            let mut p_less = vec![vec![1.0; n_strategies]; n_strategies];
            let mut rel_median_gap = vec![vec![0.0; n_strategies]; n_strategies];
            let significant = vec![vec![false; n_strategies]; n_strategies];
            for a in 0..n_strategies {
                for bdx in 0..n_strategies {
                    if a == bdx {
                        continue;
                    }
                    let pair = SamplePair::new(cell(zi, a).clone(), cell(zi, bdx).clone())?;
                    p_less[a][bdx] = mann_whitney_u(&pair, Alternative::Less).p_value;
                    let med_a = median(cell(zi, a))?;
                    let med_b = median(cell(zi, bdx))?;
                    rel_median_gap[a][bdx] = (med_b - med_a) / med_b;
                }
            }
            let mut pw = PairwiseMatrix { sample_size, p_less, rel_median_gap, significant };
            pw.apply_significance(plan.alpha);
            pairwise.push(pw);
        }

        benchmarks.push(BenchmarkReport {
            benchmark: b.id.clone(),
            optimum_ms,
            optimum_source,
            percent_of_optimum: Matrix { values: percent },
            median_speedup_vs_rs: speedup,
            cles_vs_rs: cles_m,
            pairwise,
        });
    }

    // aggregate percent-of-optimum across benchmarks
    let mut aggregate = Vec::new();
    for (si, s) in plan.strategies.iter().enumerate() {
        for (zi, &sample_size) in plan.sample_sizes.iter().enumerate() {
            let values: Vec<f64> = benchmarks
                .iter()
                .map(|br| br.percent_of_optimum.get(si, zi))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let (ci_low, ci_high) = if values.len() >= 2 {
                confidence_interval(&values, plan.confidence_level)?
            } else {
                (mean, mean)
            };
            aggregate.push(AggregateRow {
                strategy: s.id.clone(),
                sample_size,
                mean_percent: mean,
                ci_low,
                ci_high,
            });
        }
    }

    Ok(ComparisonReport {
        alpha: plan.alpha,
        confidence_level: plan.confidence_level,
        baseline: baseline_idx.map(|i| plan.strategies[i].id.clone()),
        sample_sizes: plan.sample_sizes.clone(),
        strategies: plan.strategies.iter().map(|s| s.id.clone()).collect(),
        metadata: ReportMetadata::default(),
        benchmarks,
        aggregate,
    })
}

/// Re-apply the significance rule with a different threshold.
pub fn significance_flags(report: &mut ComparisonReport, alpha: f64) {
    report.alpha = alpha;
    for br in &mut report.benchmarks {
        for pw in &mut br.pairwise {
            pw.apply_significance(alpha);
        }
    }
}

impl PairwiseMatrix {
    fn apply_significance(&mut self, alpha: f64) {
        let n = self.p_less.len();
        for a in 0..n {
            for b in 0..n {
                self.significant[a][b] = a != b
                    && self.p_less[a][b] < alpha
                    && self.rel_median_gap[a][b] > MIN_RELATIVE_GAP;
            }
        }
    }
}

/// Load the resolved plan and outcomes from a store directory and build the
/// report.
pub fn build_report_from_store(store_dir: &Path) -> Result<ComparisonReport> {
    let plan = crate::plan::PlanFile::load(&store_dir.join(paths::RESOLVED_PLAN))?.to_plan()?;
    let outcomes = StoreReader::read_outcomes(&store_dir.join(paths::OUTCOMES))?;
    build_report(&plan, &outcomes)
}

/// Output formats for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Write the report files into `dir`; returns the created paths.
pub fn emit(report: &ComparisonReport, formats: &[Format], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Csv => emit_csv(report, dir, &mut written)?,
            Format::Json => {
                let path = dir.join("report.json");
                let mut text = serde_json::to_string_pretty(report)
                    .map_err(|e| Error::Domain(format!("json serialization: {e}")))?;
                text.push('\n');
                std::fs::write(&path, text)?;
                written.push(path);
            }
            Format::Svg => emit_svg(report, dir, &mut written)?,
        }
    }
    Ok(written)
}

fn matrix_csv(report: &ComparisonReport, matrix: &Matrix) -> String {
    let mut out = String::from("strategy");
    for s in &report.sample_sizes {
        out.push(',');
        out.push_str(&s.to_string());
    }
    out.push('\n');
    for (si, strategy) in report.strategies.iter().enumerate() {
        out.push_str(strategy);
        for zi in 0..report.sample_sizes.len() {
            out.push(',');
            out.push_str(&matrix.get(si, zi).to_string());
        }
        out.push('\n');
    }
    out
}

fn emit_csv(report: &ComparisonReport, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    for br in &report.benchmarks {
        let mut files = vec![(
            format!("percent_of_optimum__{}.csv", br.benchmark),
            matrix_csv(report, &br.percent_of_optimum),
        )];
        if let Some(m) = &br.median_speedup_vs_rs {
            files.push((format!("speedup_vs_rs__{}.csv", br.benchmark), matrix_csv(report, m)));
        }
        if let Some(m) = &br.cles_vs_rs {
            files.push((format!("cles_vs_rs__{}.csv", br.benchmark), matrix_csv(report, m)));
        }
        for pw in &br.pairwise {
            let mut out = String::from("p_less");
            for s in &report.strategies {
                out.push(',');
                out.push_str(s);
            }
            out.push('\n');
            for (a, strategy) in report.strategies.iter().enumerate() {
                out.push_str(strategy);
                for b in 0..report.strategies.len() {
                    out.push(',');
                    out.push_str(&pw.p_less[a][b].to_string());
                }
                out.push('\n');
            }
            files.push((format!("pvalues__{}__s{}.csv", br.benchmark, pw.sample_size), out));
        }
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    let mut out = String::from("strategy,sample_size,mean_percent,ci_low,ci_high\n");
    for row in &report.aggregate {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.strategy, row.sample_size, row.mean_percent, row.ci_low, row.ci_high
        ));
    }
    let path = dir.join("aggregate_percent_of_optimum.csv");
    std::fs::write(&path, out)?;
    written.push(path);
    Ok(())
}

fn emit_svg(report: &ComparisonReport, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    for br in &report.benchmarks {
        let mut matrices = vec![(
            format!("heatmap_percent_of_optimum__{}.svg", br.benchmark),
            format!("{} percent of optimum", br.benchmark),
            &br.percent_of_optimum,
            1usize,
        )];
        if let Some(m) = &br.median_speedup_vs_rs {
            matrices.push((
                format!("heatmap_speedup_vs_rs__{}.svg", br.benchmark),
                format!("{} median speedup over baseline", br.benchmark),
                m,
                3,
            ));
        }
        if let Some(m) = &br.cles_vs_rs {
            matrices.push((
                format!("heatmap_cles_vs_rs__{}.svg", br.benchmark),
                format!("{} CLES over baseline", br.benchmark),
                m,
                3,
            ));
        }
        for (name, title, matrix, precision) in matrices {
            let path = dir.join(name);
            std::fs::write(&path, heatmap_svg(report, &title, matrix, precision))?;
            written.push(path);
        }
    }
    Ok(())
}

/// Self-contained heatmap: one rect per (strategy, size) cell with a
/// light-to-dark ramp over the observed range and the value printed inside.
fn heatmap_svg(report: &ComparisonReport, title: &str, matrix: &Matrix, precision: usize) -> String {
    const CELL_W: f64 = 76.0;
    const CELL_H: f64 = 30.0;
    const LABEL_W: f64 = 110.0;
    const HEADER_H: f64 = 52.0;
    let n_rows = report.strategies.len();
    let n_cols = report.sample_sizes.len();
    let width = LABEL_W + CELL_W * n_cols as f64 + 10.0;
    let height = HEADER_H + CELL_H * n_rows as f64 + 10.0;

    let flat: Vec<f64> = matrix.values.iter().flatten().copied().collect();
    let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="monospace" font-size="12">"#
    );
    svg.push('\n');
    svg.push_str(&format!(r#"<text x="6" y="16" font-size="13">{title}</text>"#));
    svg.push('\n');
    for (zi, size) in report.sample_sizes.iter().enumerate() {
        let x = LABEL_W + CELL_W * (zi as f64 + 0.5);
        svg.push_str(&format!(
            r#"<text x="{x}" y="{}" text-anchor="middle">{size}</text>"#,
            HEADER_H - 8.0
        ));
        svg.push('\n');
    }
    for (si, strategy) in report.strategies.iter().enumerate() {
        let y = HEADER_H + CELL_H * (si as f64 + 0.62);
        svg.push_str(&format!(r#"<text x="6" y="{y}">{strategy}</text>"#));
        svg.push('\n');
        for zi in 0..n_cols {
            let v = matrix.get(si, zi);
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let (r, g, b) = ramp(t);
            let x = LABEL_W + CELL_W * zi as f64;
            let y = HEADER_H + CELL_H * si as f64;
            svg.push_str(&format!(
                r#"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="rgb({r},{g},{b})" stroke="white"/>"#
            ));
            svg.push('\n');
            let text_fill = if t > 0.55 { "white" } else { "black" };
            svg.push_str(&format!(
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{text_fill}">{v:.precision$}</text>"#,
                x + CELL_W / 2.0,
                y + CELL_H * 0.64,
            ));
            svg.push('\n');
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Sequential light-to-dark blue ramp.
fn ramp(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (mix(247.0, 8.0), mix(251.0, 48.0), mix(255.0, 107.0))
}
