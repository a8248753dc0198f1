//! Gaussian-process regression with a Matérn 5/2 kernel and the Expected
//! Improvement acquisition function.
//!
//! Model: inputs are min-max normalized to the unit cube using the search
//! space ranges; targets are standardized to zero mean and unit variance, so
//! the kernel signal variance is 1 and the prior mean is the training mean.
//! The posterior is the standard noisy-GP posterior with a 1e-6 jitter on the
//! covariance diagonal (escalated up to 1e-3 before giving up). The length
//! scale is picked from a small grid by maximizing the log marginal
//! likelihood.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::space::{Configuration, SearchSpace};

/// Default observation noise variance (in standardized target units).
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.01;

/// Default length-scale grid searched by marginal likelihood.
pub const DEFAULT_LENGTH_SCALE_GRID: [f64; 3] = [0.1, 0.2, 0.5];

const BASE_JITTER: f64 = 1e-6;
const MAX_JITTER: f64 = 1e-3;

/// A fitted Gaussian-process model.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<[f64; 6]>,
    chol: Lower,
    alpha: Vec<f64>,
    bounds: [(f64, f64); 6],
    length_scale: f64,
    noise_variance: f64,
    y_mean: f64,
    y_std: f64,
    log_marginal: f64,
}

impl GpModel {
    /// Fit with the length scale chosen from `grid` by marginal likelihood.
    pub fn fit(
        samples: &[(Configuration, f64)],
        space: &SearchSpace,
        noise_variance: f64,
        grid: &[f64],
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Domain("length-scale grid must be non-empty".into()));
        }
        let mut best: Option<GpModel> = None;
        let mut last_err = None;
        for &ls in grid {
            match Self::fit_with_length_scale(samples, space, noise_variance, ls) {
                Ok(model) => {
                    if best.as_ref().is_none_or(|b| model.log_marginal > b.log_marginal) {
                        best = Some(model);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numerical("gp fit failed".into())))
    }

    /// Fit with a fixed length scale.
    pub fn fit_with_length_scale(
        samples: &[(Configuration, f64)],
        space: &SearchSpace,
        noise_variance: f64,
        length_scale: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("gp fit needs at least 1 training point".into()));
        }
        if length_scale <= 0.0 || noise_variance < 0.0 {
            return Err(Error::Domain("length_scale > 0 and noise_variance >= 0 required".into()));
        }
        let bounds = space.ranges().map(|r| (r.lo as f64, r.hi as f64));
        let x: Vec<[f64; 6]> = samples.iter().map(|(c, _)| normalize(c, &bounds)).collect();
        let n = x.len();

        let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let y_var = if n > 1 {
            ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let y_std = y_var.sqrt().max(1e-12);
        let y_standardized: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_std).collect();

        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = matern52(&x[i], &x[j], length_scale);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }

        let mut jitter = BASE_JITTER;
        let chol = loop {
            match cholesky(&k, n, noise_variance + jitter) {
                Some(l) => break l,
                None if jitter < MAX_JITTER => jitter *= 10.0,
                None => {
                    return Err(Error::Numerical(format!(
                        "Cholesky failed at jitter {jitter} with {n} points"
                    )))
                }
            }
        };
        let alpha = chol.solve(&y_standardized);

        // log p(y) = -1/2 y^T alpha - sum(log L_ii) - n/2 log(2 pi)
        let fit_term: f64 = -0.5 * dot(&y_standardized, &alpha);
        let det_term: f64 = -(0..n).map(|i| chol.data[i * n + i].ln()).sum::<f64>();
        let log_marginal =
            fit_term + det_term - n as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln();

        Ok(Self {
            x,
            chol,
            alpha,
            bounds,
            length_scale,
            noise_variance,
            y_mean,
            y_std,
            log_marginal,
        })
    }

    /// Posterior mean and variance (in original target units) at a
    /// configuration.
    pub fn posterior(&self, c: &Configuration) -> (f64, f64) {
        let q = normalize(c, &self.bounds);
        let k_star: Vec<f64> =
            self.x.iter().map(|xi| matern52(&q, xi, self.length_scale)).collect();
        let mean_std = dot(&k_star, &self.alpha);
        let v = self.chol.solve_lower(&k_star);
        let var_std = (1.0 - dot(&v, &v)).max(0.0);
        (
            self.y_mean + self.y_std * mean_std,
            self.y_std * self.y_std * var_std,
        )
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal
    }
}

/// Expected Improvement for minimization.
///
/// `EI = (best - mean) Phi(z) + sigma phi(z)` with `z = (best - mean) / sigma`;
/// degenerates to `max(0, best - mean)` when the variance is zero.
pub fn expected_improvement(mean: f64, variance: f64, best_observed: f64) -> f64 {
    debug_assert!(variance >= 0.0);
    let improvement = best_observed - mean;
    let sigma = variance.sqrt();
    if sigma < 1e-15 {
        return improvement.max(0.0);
    }
    let z = improvement / sigma;
    let normal = Normal::standard();
    (improvement * normal.cdf(z) + sigma * normal.pdf(z)).max(0.0)
}

fn normalize(c: &Configuration, bounds: &[(f64, f64); 6]) -> [f64; 6] {
    let raw = c.as_array();
    std::array::from_fn(|d| {
        let (lo, hi) = bounds[d];
        if hi > lo {
            (raw[d] as f64 - lo) / (hi - lo)
        } else {
            0.5
        }
    })
}

/// Matérn 5/2 with unit signal variance.
fn matern52(a: &[f64; 6], b: &[f64; 6], length_scale: f64) -> f64 {
    let mut sq = 0.0;
    for d in 0..6 {
        let diff = (a[d] - b[d]) / length_scale;
        sq += diff * diff;
    }
    let r = sq.sqrt();
    let s = 5.0_f64.sqrt() * r;
    (1.0 + s + 5.0 / 3.0 * sq) * (-s).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor stored dense row-major.
#[derive(Debug, Clone)]
struct Lower {
    data: Vec<f64>,
    n: usize,
}

/// In-place Cholesky of `k + diag_add * I`; `None` on a non-positive pivot.
fn cholesky(k: &[f64], n: usize, diag_add: f64) -> Option<Lower> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = k[i * n + j] + if i == j { diag_add } else { 0.0 };
            for p in 0..j {
                sum -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(Lower { data: l, n })
}

impl Lower {
    /// Solve (L L^T) x = b.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = self.solve_lower(b);
        self.solve_upper(&y)
    }

    /// Forward substitution: L y = b.
    fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for j in 0..i {
                sum -= self.data[i * n + j] * y[j];
            }
            y[i] = sum / self.data[i * n + i];
        }
        y
    }

    /// Back substitution: L^T x = y.
    fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for j in (i + 1)..n {
                sum -= self.data[j * n + i] * x[j];
            }
            x[i] = sum / self.data[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ParamRange;

    fn one_dim_space() -> SearchSpace {
        // only xt varies, so the fixture is a 1-dim slice
        SearchSpace {
            thread_ranges: [
                ParamRange::new(1, 16),
                ParamRange::new(1, 1),
                ParamRange::new(1, 1),
            ],
            workgroup_ranges: [ParamRange::new(1, 1); 3],
            constraint_limit: 256,
        }
    }

    fn slice_config(xt: u32) -> Configuration {
        Configuration::new(xt, 1, 1, 1, 1, 1)
    }

    fn five_point_fixture() -> Vec<(Configuration, f64)> {
        vec![
            (slice_config(1), 1.8),
            (slice_config(4), 1.2),
            (slice_config(8), 0.9),
            (slice_config(12), 1.4),
            (slice_config(16), 2.1),
        ]
    }

    #[test]
    fn zero_noise_posterior_interpolates_training_points() {
        let space = one_dim_space();
        let samples = five_point_fixture();
        let model = GpModel::fit_with_length_scale(&samples, &space, 0.0, 0.3).unwrap();
        for (c, y) in &samples {
            let (mean, var) = model.posterior(c);
            assert!((mean - y).abs() < 1e-6, "mean {mean} vs {y}");
            assert!(var < 1e-6, "var {var}");
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        // tiny length scale: any query off the training points is "far"
        let space = one_dim_space();
        let samples = five_point_fixture();
        let model = GpModel::fit_with_length_scale(&samples, &space, 0.0, 0.005).unwrap();
        let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
        let prior_mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let prior_var = ys.iter().map(|y| (y - prior_mean).powi(2)).sum::<f64>()
            / (ys.len() - 1) as f64;
        let (mean, var) = model.posterior(&slice_config(10));
        assert!((mean - prior_mean).abs() < 1e-3, "mean {mean} vs prior {prior_mean}");
        assert!((var - prior_var).abs() / prior_var < 1e-3, "var {var} vs prior {prior_var}");
    }

    /// Textbook-formula oracle: explicit matrix inverse through
    /// Gauss-Jordan elimination, mirroring the documented model (normalized
    /// inputs, standardized targets, unit signal variance, 1e-6 jitter).
    fn dense_oracle(
        samples: &[(Configuration, f64)],
        space: &SearchSpace,
        noise: f64,
        ls: f64,
        query: &Configuration,
    ) -> (f64, f64) {
        let bounds = space.ranges().map(|r| (r.lo as f64, r.hi as f64));
        let x: Vec<[f64; 6]> = samples.iter().map(|(c, _)| normalize(c, &bounds)).collect();
        let n = x.len();
        let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
        let y_mean = ys.iter().sum::<f64>() / n as f64;
        let y_std = (ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (n - 1) as f64)
            .sqrt()
            .max(1e-12);
        let yz: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_std).collect();

        // K + (noise + jitter) I
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = matern52(&x[i], &x[j], ls)
                    + if i == j { noise + BASE_JITTER } else { 0.0 };
            }
        }
        // Gauss-Jordan inverse
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        for col in 0..n {
            let pivot = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= pivot;
                inv[col * n + j] /= pivot;
            }
            for row in 0..n {
                if row != col {
                    let f = a[row * n + col];
                    for j in 0..n {
                        a[row * n + j] -= f * a[col * n + j];
                        inv[row * n + j] -= f * inv[col * n + j];
                    }
                }
            }
        }
        let q = normalize(query, &bounds);
        let k_star: Vec<f64> = x.iter().map(|xi| matern52(&q, xi, ls)).collect();
        // mean = k*^T K^-1 y ; var = k** - k*^T K^-1 k*
        let mut kinv_y = vec![0.0; n];
        let mut kinv_ks = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                kinv_y[i] += inv[i * n + j] * yz[j];
                kinv_ks[i] += inv[i * n + j] * k_star[j];
            }
        }
        let mean_std = dot(&k_star, &kinv_y);
        let var_std = 1.0 - dot(&k_star, &kinv_ks);
        (y_mean + y_std * mean_std, y_std * y_std * var_std)
    }

    #[test]
    fn posterior_matches_dense_linear_algebra_oracle() {
        let space = one_dim_space();
        let samples = five_point_fixture();
        let noise = 0.01;
        let ls = 0.2;
        let model = GpModel::fit_with_length_scale(&samples, &space, noise, ls).unwrap();
        for xt in 1..=16 {
            let q = slice_config(xt);
            let (m, v) = model.posterior(&q);
            let (om, ov) = dense_oracle(&samples, &space, noise, ls, &q);
            assert!((m - om).abs() < 1e-8, "xt={xt}: mean {m} vs {om}");
            assert!((v - ov).abs() < 1e-8, "xt={xt}: var {v} vs {ov}");
        }
    }

    #[test]
    fn posterior_variance_nonnegative_everywhere() {
        let space = SearchSpace::default();
        let samples: Vec<(Configuration, f64)> = vec![
            (Configuration::new(2, 1, 1, 8, 4, 1), 1.0),
            (Configuration::new(4, 4, 4, 2, 2, 2), 2.5),
            (Configuration::new(16, 1, 1, 8, 8, 4), 3.0),
        ];
        let model =
            GpModel::fit(&samples, &space, DEFAULT_NOISE_VARIANCE, &DEFAULT_LENGTH_SCALE_GRID)
                .unwrap();
        use rand::SeedableRng;
        let mut rng = crate::TuneRng::seed_from_u64(1);
        for _ in 0..500 {
            let c = space.sample_uniform(false, &mut rng);
            let (_, var) = model.posterior(&c);
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn grid_selection_prefers_higher_marginal_likelihood() {
        let space = one_dim_space();
        let samples = five_point_fixture();
        let picked =
            GpModel::fit(&samples, &space, 0.01, &DEFAULT_LENGTH_SCALE_GRID).unwrap();
        for &ls in &DEFAULT_LENGTH_SCALE_GRID {
            let m = GpModel::fit_with_length_scale(&samples, &space, 0.01, ls).unwrap();
            assert!(picked.log_marginal_likelihood() >= m.log_marginal_likelihood());
        }
    }

    #[test]
    fn fit_requires_training_data() {
        let space = SearchSpace::default();
        assert!(GpModel::fit(&[], &space, 0.01, &DEFAULT_LENGTH_SCALE_GRID).is_err());
    }

    #[test]
    fn ei_closed_form_values() {
        // sigma = 0 cases
        assert_eq!(expected_improvement(5.0, 0.0, 5.0), 0.0);
        assert_eq!(expected_improvement(6.0, 0.0, 5.0), 0.0);
        assert_eq!(expected_improvement(4.0, 0.0, 5.0), 1.0);
        // mean == best, sigma = 1: EI = phi(0) = 1/sqrt(2 pi)
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((expected_improvement(5.0, 1.0, 5.0) - phi0).abs() < 1e-12);
    }

    #[test]
    fn ei_matches_monte_carlo_expectation() {
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        // E[max(best - N(mean, sigma^2), 0)] by simulation
        let (mean, sigma, best) = (1.2, 0.7, 1.0);
        let mut rng = crate::TuneRng::seed_from_u64(77);
        let n = 2_000_000;
        let mc: f64 = (0..n)
            .map(|_| {
                let z: f64 = rand::Rng::sample(&mut rng, StandardNormal);
                (best - (mean + sigma * z)).max(0.0)
            })
            .sum::<f64>()
            / n as f64;
        let ei = expected_improvement(mean, sigma * sigma, best);
        assert!((ei - mc).abs() < 5e-4, "ei {ei} vs mc {mc}");
    }

    proptest::proptest! {
        #[test]
        fn prop_ei_at_least_deterministic_improvement(
            mean in -10.0f64..10.0,
            var in 0.0f64..25.0,
            best in -10.0f64..10.0,
        ) {
            let ei = expected_improvement(mean, var, best);
            proptest::prop_assert!(ei >= 0.0);
            proptest::prop_assert!(ei >= (best - mean).max(0.0) - 1e-12);
        }
    }
}
