//! Nonparametric comparison machinery: Mann-Whitney U (exact and
//! normal-approximate), the common language effect size, medians,
//! percent-of-optimum, speedup over a baseline, and t confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Combined sample size up to which the U test enumerates the permutation
/// distribution exactly; larger samples use the normal approximation.
pub const EXACT_LIMIT: usize = 16;

/// Two independent samples of final runtimes, one entry per experiment.
#[derive(Debug, Clone)]
pub struct SamplePair {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SamplePair {
    /// Both samples must be non-empty with finite, positive values.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Domain("samples must be non-empty".into()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Domain("sample values must be finite and positive".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// Direction of the alternative hypothesis for the U test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alternative {
    /// Sample a tends to be less than sample b.
    Less,
    /// Sample a tends to be greater than sample b.
    Greater,
    TwoSided,
}

/// How the p-value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    NormalApprox,
}

/// Result of a Mann-Whitney U test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// U statistic of sample a; in [0, n_a * n_b].
    pub u_statistic: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method: Method,
}

/// Average ranks of the pooled sample (ties share the mean rank).
fn average_ranks(pooled: &[f64]) -> Vec<f64> {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block gets the average rank
        let rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

/// U statistic of the first `n_a` pooled entries, from average ranks.
/// Equals #(a_i > b_j) + 0.5 * #(a_i == b_j) exactly.
fn u_from_ranks(ranks: &[f64], n_a: usize) -> f64 {
    let r_a: f64 = ranks[..n_a].iter().sum();
    r_a - (n_a * (n_a + 1)) as f64 / 2.0
}

/// Mann-Whitney U test of `pair.a` against `pair.b`.
///
/// For combined sizes up to [`EXACT_LIMIT`] the p-value enumerates every
/// partition of the pooled values into groups of the observed sizes (average
/// ranks make this exact under ties as well). Larger samples use the normal
/// approximation with tie-corrected variance and a 0.5 continuity correction.
pub fn mann_whitney_u(pair: &SamplePair, alternative: Alternative) -> TestResult {
    let n_a = pair.a.len();
    let n_b = pair.b.len();
    let pooled: Vec<f64> = pair.a.iter().chain(&pair.b).copied().collect();
    let ranks = average_ranks(&pooled);
    let u_obs = u_from_ranks(&ranks, n_a);

    if n_a + n_b <= EXACT_LIMIT {
        let (p_less, p_greater) = exact_tail_probabilities(&ranks, n_a, u_obs);
        let p_value = match alternative {
            Alternative::Less => p_less,
            Alternative::Greater => p_greater,
            Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
        };
        return TestResult { u_statistic: u_obs, p_value, alternative, method: Method::Exact };
    }

    let n = (n_a + n_b) as f64;
    let prod = (n_a * n_b) as f64;
    let mean = prod / 2.0;
    let tie_term = tie_correction(&pooled) / (n * (n - 1.0));
    let var = prod / 12.0 * ((n + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0 // all values tied: no evidence in any direction
    } else {
        let sd = var.sqrt();
        let normal = Normal::standard();
        let p_less = normal.cdf((u_obs + 0.5 - mean) / sd);
        let p_greater = 1.0 - normal.cdf((u_obs - 0.5 - mean) / sd);
        match alternative {
            Alternative::Less => p_less,
            Alternative::Greater => p_greater,
            Alternative::TwoSided => (2.0 * p_less.min(p_greater)).min(1.0),
        }
    };
    TestResult { u_statistic: u_obs, p_value, alternative, method: Method::NormalApprox }
}

/// Sum of t^3 - t over tie groups of the pooled sample.
fn tie_correction(pooled: &[f64]) -> f64 {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        sum += t * t * t - t;
        i = j;
    }
    sum
}

/// Exact one-sided tail probabilities P(U <= u_obs) and P(U >= u_obs) by
/// enumerating every size-n_a subset of the pooled ranks as group a.
fn exact_tail_probabilities(ranks: &[f64], n_a: usize, u_obs: f64) -> (f64, f64) {
    let n = ranks.len();
    debug_assert!(n <= EXACT_LIMIT);
    let offset = (n_a * (n_a + 1)) as f64 / 2.0;
    let mut total = 0u64;
    let mut low = 0u64;
    let mut high = 0u64;
    // U values are multiples of 0.5, so comparisons are exact in f64.
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n_a {
            continue;
        }
        let mut r = 0.0;
        for (i, &rank) in ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                r += rank;
            }
        }
        let u = r - offset;
        total += 1;
        if u <= u_obs {
            low += 1;
        }
        if u >= u_obs {
            high += 1;
        }
    }
    (low as f64 / total as f64, high as f64 / total as f64)
}

/// Common language effect size A(a, b) = P(a > b) + 0.5 P(a == b),
/// computed exactly from average ranks.
pub fn cles(pair: &SamplePair) -> f64 {
    let n_a = pair.a.len();
    let n_b = pair.b.len();
    let pooled: Vec<f64> = pair.a.iter().chain(&pair.b).copied().collect();
    let ranks = average_ranks(&pooled);
    u_from_ranks(&ranks, n_a) / (n_a as f64 * n_b as f64)
}

/// Median with the two middle order statistics averaged for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("median of empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// 100 * optimum / median(runtimes); higher is better with a 100% ceiling
/// when the optimum really is the global minimum.
pub fn percent_of_optimum(runtimes: &[f64], optimum: f64) -> Result<f64> {
    if optimum <= 0.0 || !optimum.is_finite() {
        return Err(Error::Domain(format!("optimum must be positive, got {optimum}")));
    }
    if runtimes.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Domain("runtimes must be finite and positive".into()));
    }
    Ok(100.0 * (optimum / median(runtimes)?))
}

/// Ratio of medians: median(baseline) / median(algorithm).
pub fn median_speedup(alg: &[f64], baseline: &[f64]) -> Result<f64> {
    Ok(median(baseline)? / median(alg)?)
}

/// Student-t confidence interval for the mean: mean +/- t * sd / sqrt(n).
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::Domain("confidence interval needs at least 2 values".into()));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::Domain(format!("confidence level {level} not in (0,1)")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::Numerical(format!("t distribution: {e}")))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * sd / n.sqrt();
    Ok((mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &[f64], b: &[f64]) -> SamplePair {
        SamplePair::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn mwu_separated_fixture() {
        // All 20 partitions enumerated: only one has U = 0, so p = 1/20.
        let r = mann_whitney_u(&pair(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), Alternative::Less);
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.u_statistic, 0.0);
        assert!((r.p_value - 0.05).abs() < 1e-15, "p {}", r.p_value);
    }

    #[test]
    fn mwu_identical_samples_two_sided() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&pair(&v, &v), Alternative::TwoSided);
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn mwu_rejects_empty_sample() {
        assert!(SamplePair::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn mwu_symmetry_of_one_sided_p() {
        let a = [1.5, 3.0, 9.0, 2.0];
        let b = [2.5, 8.0, 1.0];
        let p1 = mann_whitney_u(&pair(&a, &b), Alternative::Less).p_value;
        let p2 = mann_whitney_u(&pair(&b, &a), Alternative::Greater).p_value;
        assert_eq!(p1, p2);
    }

    #[test]
    fn mwu_normal_approx_against_shuffle_oracle() {
        use crate::TuneRng;
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        use rand_distr::StandardNormal;

        // n = m = 30 gaussians: approximate p within 0.005 of a permutation
        // estimate from 10^6 shuffles.
        let mut rng = TuneRng::seed_from_u64(123);
        let a: Vec<f64> = (0..30)
            .map(|_| 10.0 + rand::Rng::sample::<f64, _>(&mut rng, StandardNormal))
            .collect();
        let b: Vec<f64> = (0..30)
            .map(|_| 10.3 + rand::Rng::sample::<f64, _>(&mut rng, StandardNormal))
            .collect();
        let r = mann_whitney_u(&pair(&a, &b), Alternative::Less);
        assert_eq!(r.method, Method::NormalApprox);

        let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
        let ranks = average_ranks(&pooled);
        let mut idx: Vec<usize> = (0..60).collect();
        let shuffles = 1_000_000;
        let mut at_or_below = 0u64;
        for _ in 0..shuffles {
            idx.shuffle(&mut rng);
            let r_sum: f64 = idx[..30].iter().map(|&i| ranks[i]).sum();
            let u = r_sum - (30.0 * 31.0) / 2.0;
            if u <= r.u_statistic {
                at_or_below += 1;
            }
        }
        let mc = at_or_below as f64 / shuffles as f64;
        assert!(
            (r.p_value - mc).abs() < 0.005,
            "normal {} vs monte-carlo {}",
            r.p_value,
            mc
        );
    }

    #[test]
    fn mwu_rank_based_shift_invariance() {
        let a = [1.0, 5.0, 3.0, 8.0, 2.0];
        let b = [4.0, 6.0, 7.0];
        let r1 = mann_whitney_u(&pair(&a, &b), Alternative::Less);
        let shifted_a: Vec<f64> = a.iter().map(|v| v + 100.0).collect();
        let shifted_b: Vec<f64> = b.iter().map(|v| v + 100.0).collect();
        let r2 = mann_whitney_u(&pair(&shifted_a, &shifted_b), Alternative::Less);
        assert_eq!(r1.u_statistic, r2.u_statistic);
        assert_eq!(r1.p_value, r2.p_value);
    }

    /// Brute-force oracle: per-partition pairwise count of wins and half-ties.
    fn oracle_exact_p_less(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = pooled.len();
        let n_a = a.len();
        let u_of = |sel: &[f64], rest: &[f64]| -> f64 {
            let mut u = 0.0;
            for x in sel {
                for y in rest {
                    if x > y {
                        u += 1.0;
                    } else if x == y {
                        u += 0.5;
                    }
                }
            }
            u
        };
        let u_obs = u_of(a, b);
        let mut total = 0u64;
        let mut low = 0u64;
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != n_a {
                continue;
            }
            let mut sel = Vec::with_capacity(n_a);
            let mut rest = Vec::with_capacity(n - n_a);
            for (i, &v) in pooled.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sel.push(v);
                } else {
                    rest.push(v);
                }
            }
            total += 1;
            if u_of(&sel, &rest) <= u_obs {
                low += 1;
            }
        }
        low as f64 / total as f64
    }

    #[test]
    fn mwu_exact_matches_pairwise_oracle_with_ties() {
        let a = [2.0, 2.0, 5.0, 1.0];
        let b = [2.0, 4.0, 5.0];
        let r = mann_whitney_u(&pair(&a, &b), Alternative::Less);
        let expect = oracle_exact_p_less(&a, &b);
        assert!((r.p_value - expect).abs() < 1e-12, "{} vs {expect}", r.p_value);
    }

    #[test]
    fn cles_hand_fixture() {
        // pairs: (2>1), (2==2 -> 0.5), (3>1), (3>2) = 3.5 of 4
        let a = cles(&pair(&[2.0, 3.0], &[1.0, 2.0]));
        assert_eq!(a, 0.875);
    }

    #[test]
    fn cles_identical_samples() {
        let v = [5.0, 6.0, 7.0];
        assert_eq!(cles(&pair(&v, &v)), 0.5);
    }

    #[test]
    fn cles_complete_dominance() {
        assert_eq!(cles(&pair(&[10.0, 11.0], &[1.0, 2.0, 3.0])), 1.0);
    }

    #[test]
    fn percent_of_optimum_definitional() {
        assert_eq!(percent_of_optimum(&[12.5], 10.0).unwrap(), 80.0);
        assert_eq!(percent_of_optimum(&[10.0, 10.0, 10.0], 10.0).unwrap(), 100.0);
        assert!(percent_of_optimum(&[1.0], 0.0).is_err());
    }

    #[test]
    fn median_even_count_averages_middle_pair() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn median_speedup_definitional() {
        let alg = [10.0, 10.0];
        let rs = [12.0, 12.0];
        assert_eq!(median_speedup(&alg, &rs).unwrap(), 1.2);
        assert_eq!(median_speedup(&rs, &rs).unwrap(), 1.0);
    }

    #[test]
    fn confidence_interval_t_table_fixture() {
        // t_{0.975,2} = 4.302652...; half-width = t * 1/sqrt(3)
        let (lo, hi) = confidence_interval(&[1.0, 2.0, 3.0], 0.95).unwrap();
        let half = (hi - lo) / 2.0;
        assert!((half - 2.484).abs() < 1e-3, "half {half}");
        assert!(((lo + hi) / 2.0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn confidence_interval_degenerate_and_errors() {
        let (lo, hi) = confidence_interval(&[4.0, 4.0, 4.0, 4.0], 0.95).unwrap();
        assert_eq!((lo, hi), (4.0, 4.0));
        assert!(confidence_interval(&[1.0], 0.95).is_err());
    }

    proptest::proptest! {
        #[test]
        fn prop_cles_antisymmetry(
            a in proptest::collection::vec(1.0f64..100.0, 1..20),
            b in proptest::collection::vec(1.0f64..100.0, 1..20),
        ) {
            let ab = cles(&pair(&a, &b));
            let ba = cles(&pair(&b, &a));
            proptest::prop_assert!((ab + ba - 1.0).abs() < 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn prop_cles_monotone_transform_invariance(
            a in proptest::collection::vec(1.0f64..100.0, 1..15),
            b in proptest::collection::vec(1.0f64..100.0, 1..15),
        ) {
            let before = cles(&pair(&a, &b));
            // strictly increasing transform applied jointly
            let ta: Vec<f64> = a.iter().map(|v| v.exp().ln() * 2.0 + 1.0).collect();
            let tb: Vec<f64> = b.iter().map(|v| v.exp().ln() * 2.0 + 1.0).collect();
            let after = cles(&pair(&ta, &tb));
            proptest::prop_assert!((before - after).abs() < 1e-12);
        }

        #[test]
        fn prop_mwu_p_in_unit_interval(
            a in proptest::collection::vec(1.0f64..50.0, 1..12),
            b in proptest::collection::vec(1.0f64..50.0, 1..12),
        ) {
            for alt in [Alternative::Less, Alternative::Greater, Alternative::TwoSided] {
                let r = mann_whitney_u(&pair(&a, &b), alt);
                proptest::prop_assert!((0.0..=1.0).contains(&r.p_value));
                proptest::prop_assert!(r.u_statistic >= 0.0);
                proptest::prop_assert!(r.u_statistic <= (a.len() * b.len()) as f64);
            }
        }
    }
}
