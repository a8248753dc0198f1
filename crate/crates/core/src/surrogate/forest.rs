//! Random-forest regression from first principles: CART trees with
//! variance-reduction splits, bootstrap bagging and random feature subsets
//! per split. Leaf values are the mean of the leaf's targets.

use rand::Rng;

use crate::error::{Error, Result};
use crate::space::Configuration;
use crate::TuneRng;

const NUM_FEATURES: usize = 6;

/// Forest hyperparameters.
#[derive(Debug, Clone)]
pub struct ForestOptions {
    pub trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Features considered at each split.
    pub feature_subset: usize,
    /// Bootstrap resampling of the training set per tree.
    pub bootstrap: bool,
}

impl Default for ForestOptions {
    /// 100 trees, depth 10, 2 of 6 features per split, bootstrap on.
    fn default() -> Self {
        Self { trees: 100, max_depth: Some(10), feature_subset: 2, bootstrap: true }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// A fitted bagged regression forest.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
}

impl ForestModel {
    /// Fit a forest on (configuration, runtime) samples.
    pub fn fit(
        samples: &[(Configuration, f64)],
        options: &ForestOptions,
        rng: &mut TuneRng,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Domain(format!(
                "forest fit needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if options.trees == 0 || options.feature_subset == 0 {
            return Err(Error::Domain("forest needs trees >= 1 and feature_subset >= 1".into()));
        }
        let xs: Vec<[f64; NUM_FEATURES]> = samples
            .iter()
            .map(|(c, _)| c.as_array().map(|v| v as f64))
            .collect();
        let ys: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();

        let mut trees = Vec::with_capacity(options.trees);
        for _ in 0..options.trees {
            let indices: Vec<usize> = if options.bootstrap {
                (0..xs.len()).map(|_| rng.random_range(0..xs.len())).collect()
            } else {
                (0..xs.len()).collect()
            };
            let mut builder = TreeBuilder {
                xs: &xs,
                ys: &ys,
                options,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(indices, 0);
            trees.push(Tree { nodes: builder.nodes });
        }
        Ok(Self { trees })
    }

    /// Arithmetic mean of the per-tree predictions.
    pub fn predict(&self, c: &Configuration) -> f64 {
        let x = c.as_array().map(|v| v as f64);
        self.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }
}

struct TreeBuilder<'a> {
    xs: &'a [[f64; NUM_FEATURES]],
    ys: &'a [f64],
    options: &'a ForestOptions,
    rng: &'a mut TuneRng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    /// Grow a node over `indices`; returns its index in the node arena.
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let mean = indices.iter().map(|&i| self.ys[i]).sum::<f64>() / indices.len() as f64;
        let at_depth_limit = self.options.max_depth.is_some_and(|d| depth >= d);
        if indices.len() < 2 || at_depth_limit || self.is_pure(&indices) {
            return self.push_leaf(mean);
        }
        match self.best_split(&indices) {
            None => self.push_leaf(mean),
            Some((feature, threshold)) => {
                let (li, ri): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.xs[i][feature] <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(Node::Leaf(f64::NAN)); // placeholder
                let left = self.grow(li, depth + 1);
                let right = self.grow(ri, depth + 1);
                self.nodes[slot] = Node::Split { feature, threshold, left, right };
                slot
            }
        }
    }

    fn push_leaf(&mut self, value: f64) -> usize {
        self.nodes.push(Node::Leaf(value));
        self.nodes.len() - 1
    }

    fn is_pure(&self, indices: &[usize]) -> bool {
        let first = self.ys[indices[0]];
        indices.iter().all(|&i| self.ys[i] == first)
    }

    /// Best (feature, threshold) among a random feature subset, by total
    /// child sum-of-squares (equivalent to maximum variance reduction).
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let k = self.options.feature_subset.min(NUM_FEATURES);
        let features = rand::seq::index::sample(self.rng, NUM_FEATURES, k);
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in features {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|&a, &b| {
                self.xs[a][feature]
                    .partial_cmp(&self.xs[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            // prefix sums over the sorted order
            let n = order.len();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let total_sum: f64 = order.iter().map(|&i| self.ys[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| self.ys[i] * self.ys[i]).sum();
            for cut in 1..n {
                let y = self.ys[order[cut - 1]];
                sum += y;
                sum_sq += y * y;
                let lv = self.xs[order[cut - 1]][feature];
                let rv = self.xs[order[cut]][feature];
                if lv == rv {
                    continue; // no threshold separates equal values
                }
                let left_n = cut as f64;
                let right_n = (n - cut) as f64;
                let sse_left = sum_sq - sum * sum / left_n;
                let rs = total_sum - sum;
                let sse_right = (total_sq - sum_sq) - rs * rs / right_n;
                let sse = sse_left + sse_right;
                let threshold = (lv + rv) / 2.0;
                if best.is_none() || sse < best.unwrap().0 {
                    best = Some((sse, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}
