//! Parzen good/bad density estimators over the integer parameter ranges.
//!
//! The observation history is split at the `ceil(gamma * n)` lowest runtimes
//! into a "good" and a "bad" set. Each set gets one add-one-smoothed discrete
//! histogram per dimension over that dimension's full integer range, and
//! candidates are ranked by the product of per-dimension density ratios
//! good(x) / bad(x). Dimensions are modeled independently (the space is a
//! flat box, so no tree structure is needed).

use rand::Rng;

use crate::error::{Error, Result};
use crate::space::{Configuration, SearchSpace};
use crate::TuneRng;

/// Default quantile separating good from bad observations.
pub const DEFAULT_GAMMA: f64 = 0.15;

/// Default number of candidates drawn from the good density per iteration.
pub const DEFAULT_CANDIDATES: usize = 24;

#[derive(Debug, Clone)]
struct DimensionDensity {
    lo: u32,
    good: Vec<f64>,
    bad: Vec<f64>,
}

impl DimensionDensity {
    fn bin(&self, v: u32) -> usize {
        (v.saturating_sub(self.lo) as usize).min(self.good.len() - 1)
    }
}

/// Per-dimension good/bad histograms fitted from an observation history.
#[derive(Debug, Clone)]
pub struct ParzenPair {
    dims: Vec<DimensionDensity>,
    gamma: f64,
    good_count: usize,
}

impl ParzenPair {
    /// Split `history` at the `ceil(gamma * n)` lowest runtimes and build the
    /// smoothed per-dimension histograms. Ties in runtime break by history
    /// order, so fits are deterministic.
    pub fn fit(
        history: &[(Configuration, f64)],
        gamma: f64,
        space: &SearchSpace,
    ) -> Result<Self> {
        if history.len() < 2 {
            return Err(Error::Domain(format!(
                "parzen fit needs at least 2 observations, got {}",
                history.len()
            )));
        }
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(Error::Domain(format!("gamma {gamma} not in (0,1)")));
        }
        let n = history.len();
        let n_good = ((gamma * n as f64).ceil() as usize).clamp(1, n - 1);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            history[i].1.partial_cmp(&history[j].1).unwrap().then(i.cmp(&j))
        });
        let good_idx = &order[..n_good];
        let bad_idx = &order[n_good..];

        let ranges = space.ranges();
        let mut dims = Vec::with_capacity(6);
        for d in 0..6 {
            let lo = ranges[d].lo;
            let bins = ranges[d].len() as usize;
            let count = |idx: &[usize]| -> Vec<f64> {
                let mut counts = vec![0u64; bins];
                for &i in idx {
                    let v = history[i].0.as_array()[d];
                    let b = (v.saturating_sub(lo) as usize).min(bins - 1);
                    counts[b] += 1;
                }
                // add-one smoothing: every bin strictly positive, sums to 1
                let total = idx.len() as f64 + bins as f64;
                counts.iter().map(|&c| (c as f64 + 1.0) / total).collect()
            };
            dims.push(DimensionDensity { lo, good: count(good_idx), bad: count(bad_idx) });
        }
        Ok(Self { dims, gamma, good_count: n_good })
    }

    /// Product over dimensions of good_density(c_d) / bad_density(c_d).
    pub fn score(&self, c: &Configuration) -> f64 {
        let raw = c.as_array();
        self.dims
            .iter()
            .zip(raw)
            .map(|(dim, v)| {
                let b = dim.bin(v);
                dim.good[b] / dim.bad[b]
            })
            .product()
    }

    /// Draw one configuration from the good density (independent per-dim
    /// categorical draws).
    pub fn sample_good(&self, rng: &mut TuneRng) -> Configuration {
        let mut vals = [0u32; 6];
        for (d, dim) in self.dims.iter().enumerate() {
            let u: f64 = rng.random::<f64>();
            let mut acc = 0.0;
            let mut chosen = dim.good.len() - 1;
            for (b, &p) in dim.good.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = b;
                    break;
                }
            }
            vals[d] = dim.lo + chosen as u32;
        }
        Configuration::from_array(vals)
    }

    /// Size of the good set after the quantile split.
    pub fn good_count(&self) -> usize {
        self.good_count
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Good-density mass of value `v` in dimension `d` (0..6).
    pub fn good_mass(&self, d: usize, v: u32) -> f64 {
        let dim = &self.dims[d];
        dim.good[dim.bin(v)]
    }

    /// Bad-density mass of value `v` in dimension `d` (0..6).
    pub fn bad_mass(&self, d: usize, v: u32) -> f64 {
        let dim = &self.dims[d];
        dim.bad[dim.bin(v)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn history_of(configs: &[([u32; 6], f64)]) -> Vec<(Configuration, f64)> {
        configs
            .iter()
            .map(|(c, y)| (Configuration::from_array(*c), *y))
            .collect()
    }

    #[test]
    fn ceiling_split_arithmetic() {
        let space = SearchSpace::default();
        let history: Vec<(Configuration, f64)> = (0..10)
            .map(|i| (Configuration::new(1 + i, 1, 1, 1, 1, 1), i as f64))
            .collect();
        let pair = ParzenPair::fit(&history, 0.15, &space).unwrap();
        assert_eq!(pair.good_count(), 2); // ceil(0.15 * 10) = 2
    }

    #[test]
    fn identical_observations_give_ratio_one() {
        // gamma 0.5 makes the good and bad sets the same size; with every
        // observation identical the smoothed histograms are equal, so the
        // ratio is exactly 1 everywhere.
        let space = SearchSpace::default();
        let history = history_of(&[
            ([3, 3, 3, 2, 2, 2], 1.0),
            ([3, 3, 3, 2, 2, 2], 1.0),
            ([3, 3, 3, 2, 2, 2], 1.0),
            ([3, 3, 3, 2, 2, 2], 1.0),
        ]);
        let pair = ParzenPair::fit(&history, 0.5, &space).unwrap();
        assert_eq!(pair.score(&Configuration::from_array([3, 3, 3, 2, 2, 2])), 1.0);
        assert_eq!(pair.score(&Configuration::from_array([1, 1, 1, 1, 1, 1])), 1.0);
        assert_eq!(pair.score(&Configuration::from_array([16, 9, 4, 8, 7, 6])), 1.0);
    }

    #[test]
    fn four_observation_pencil_and_paper_fixture() {
        // gamma 0.25 -> good set = single best observation (runtime 1.0)
        let space = SearchSpace::default();
        let history = history_of(&[
            ([1, 1, 1, 1, 1, 1], 4.0),
            ([2, 2, 2, 2, 2, 2], 1.0),
            ([3, 3, 3, 3, 3, 3], 3.0),
            ([2, 1, 1, 2, 1, 1], 2.0),
        ]);
        let pair = ParzenPair::fit(&history, 0.25, &space).unwrap();
        assert_eq!(pair.good_count(), 1);

        // thread dims have 16 bins, workgroup dims 8; densities are
        // (count + 1) / (set size + bins)
        let c = Configuration::from_array([2, 2, 2, 2, 2, 2]);
        let good_t = 2.0 / 17.0; // count 1 + smoothing over 16 bins, n=1
        let bad_xt = (1.0 + 1.0) / (3.0 + 16.0); // xt=2 appears once in bad
        let bad_yt = 1.0 / 19.0; // yt=2 absent from bad
        let bad_zt = 1.0 / 19.0;
        let good_w = 2.0 / 9.0; // workgroup dims: 8 bins, n=1
        let bad_xw = 2.0 / 11.0; // xw=2 appears once in bad
        let bad_yw = 1.0 / 11.0;
        let bad_zw = 1.0 / 11.0;
        let expect = (good_t / bad_xt)
            * (good_t / bad_yt)
            * (good_t / bad_zt)
            * (good_w / bad_xw)
            * (good_w / bad_yw)
            * (good_w / bad_zw);
        assert!((pair.score(&c) - expect).abs() < 1e-12, "{} vs {expect}", pair.score(&c));
        // the good config appears only in the good set, so its ratio exceeds 1
        assert!(pair.score(&c) > 1.0);
    }

    #[test]
    fn densities_sum_to_one() {
        let space = SearchSpace::default();
        let mut rng = TuneRng::seed_from_u64(3);
        let history: Vec<(Configuration, f64)> = (0..50)
            .map(|i| (space.sample_uniform(true, &mut rng), (i % 7) as f64))
            .collect();
        let pair = ParzenPair::fit(&history, 0.15, &space).unwrap();
        for dim in &pair.dims {
            let gs: f64 = dim.good.iter().sum();
            let bs: f64 = dim.bad.iter().sum();
            assert!((gs - 1.0).abs() < 1e-12, "good sums to {gs}");
            assert!((bs - 1.0).abs() < 1e-12, "bad sums to {bs}");
            assert!(dim.good.iter().chain(&dim.bad).all(|&p| p > 0.0));
        }
    }

    #[test]
    fn fit_requires_two_observations() {
        let space = SearchSpace::default();
        let one = history_of(&[([1, 1, 1, 1, 1, 1], 1.0)]);
        assert!(ParzenPair::fit(&one, 0.15, &space).is_err());
    }

    #[test]
    fn sampled_candidates_stay_in_range() {
        let space = SearchSpace::default();
        let mut rng = TuneRng::seed_from_u64(9);
        let history: Vec<(Configuration, f64)> = (0..30)
            .map(|i| (space.sample_uniform(true, &mut rng), i as f64))
            .collect();
        let pair = ParzenPair::fit(&history, 0.15, &space).unwrap();
        for _ in 0..1000 {
            let c = pair.sample_good(&mut rng);
            assert!(space.contains(&c));
        }
    }
}
