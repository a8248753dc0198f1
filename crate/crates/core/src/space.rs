//! The 6-parameter integer tuning space and its work-group constraint.
//!
//! A configuration has three thread-coarsening factors (default range 1..=16)
//! and three work-group sizes (default range 1..=8). A configuration is valid
//! when the product of its work-group sizes does not exceed the constraint
//! limit (default 256). The default space has 16^3 * 8^3 = 2,097,152
//! configurations before the constraint is applied.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard for full enumeration; spaces above this refuse to enumerate.
pub const ENUMERATION_GUARD: u64 = 50_000_000;

/// One point in the tuning space: thread-coarsening factors and
/// work-group sizes per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub xt: u32,
    pub yt: u32,
    pub zt: u32,
    pub xw: u32,
    pub yw: u32,
    pub zw: u32,
}

impl Configuration {
    pub fn new(xt: u32, yt: u32, zt: u32, xw: u32, yw: u32, zw: u32) -> Self {
        Self { xt, yt, zt, xw, yw, zw }
    }

    /// All six parameters in lexicographic field order.
    pub fn as_array(&self) -> [u32; 6] {
        [self.xt, self.yt, self.zt, self.xw, self.yw, self.zw]
    }

    pub fn from_array(v: [u32; 6]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    /// Product of the three thread-coarsening factors.
    pub fn thread_product(&self) -> u64 {
        self.xt as u64 * self.yt as u64 * self.zt as u64
    }

    /// Product of the three work-group sizes.
    pub fn workgroup_product(&self) -> u64 {
        self.xw as u64 * self.yw as u64 * self.zw as u64
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({},{},{},{},{},{})",
            self.xt, self.yt, self.zt, self.xw, self.yw, self.zw
        )
    }
}

/// Inclusive integer interval for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: u32,
    pub hi: u32,
}

impl ParamRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> u64 {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo) as u64 + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, v: u32) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        rng.random_range(self.lo..=self.hi)
    }
}

/// The tunable parameter space: per-dimension ranges plus the upper bound on
/// the work-group product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub thread_ranges: [ParamRange; 3],
    pub workgroup_ranges: [ParamRange; 3],
    pub constraint_limit: u64,
}

impl Default for SearchSpace {
    /// Thread ranges [1,16]^3, work-group ranges [1,8]^3, limit 256.
    fn default() -> Self {
        Self {
            thread_ranges: [ParamRange::new(1, 16); 3],
            workgroup_ranges: [ParamRange::new(1, 8); 3],
            constraint_limit: 256,
        }
    }
}

impl SearchSpace {
    /// Cube space with one thread range and one work-group range applied to
    /// all three dimensions each.
    pub fn cube(thread: ParamRange, workgroup: ParamRange, constraint_limit: u64) -> Self {
        Self {
            thread_ranges: [thread; 3],
            workgroup_ranges: [workgroup; 3],
            constraint_limit,
        }
    }

    /// All six ranges in lexicographic dimension order (xt..zw).
    pub fn ranges(&self) -> [ParamRange; 6] {
        [
            self.thread_ranges[0],
            self.thread_ranges[1],
            self.thread_ranges[2],
            self.workgroup_ranges[0],
            self.workgroup_ranges[1],
            self.workgroup_ranges[2],
        ]
    }

    /// Total number of configurations ignoring the constraint.
    pub fn total_size(&self) -> u64 {
        self.ranges().iter().map(|r| r.len()).product()
    }

    /// Whether the configuration lies inside the box (ignores the constraint).
    pub fn contains(&self, c: &Configuration) -> bool {
        self.ranges()
            .iter()
            .zip(c.as_array())
            .all(|(r, v)| r.contains(v))
    }

    /// Whether the configuration satisfies the work-group product constraint.
    ///
    /// Out-of-range configurations are a domain error.
    pub fn is_valid(&self, c: &Configuration) -> Result<bool> {
        if !self.contains(c) {
            return Err(Error::Domain(format!(
                "configuration {c} is outside the space ranges"
            )));
        }
        Ok(c.workgroup_product() <= self.constraint_limit)
    }

    /// All valid configurations in lexicographic order (xt slowest, zw fastest).
    ///
    /// Refuses when the unconstrained box exceeds [`ENUMERATION_GUARD`].
    pub fn enumerate_valid(&self) -> Result<Vec<Configuration>> {
        let total = self.total_size();
        if total > ENUMERATION_GUARD {
            return Err(Error::SpaceTooLarge { actual: total, guard: ENUMERATION_GUARD });
        }
        let [rxt, ryt, rzt, rxw, ryw, rzw] = self.ranges();
        let mut out = Vec::new();
        for xt in rxt.lo..=rxt.hi {
            for yt in ryt.lo..=ryt.hi {
                for zt in rzt.lo..=rzt.hi {
                    for xw in rxw.lo..=rxw.hi {
                        for yw in ryw.lo..=ryw.hi {
                            for zw in rzw.lo..=rzw.hi {
                                let c = Configuration::new(xt, yt, zt, xw, yw, zw);
                                if c.workgroup_product() <= self.constraint_limit {
                                    out.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Number of valid configurations (via enumeration of the work-group box
    /// only, so it is cheap even for the full default space).
    pub fn count_valid(&self) -> u64 {
        let [rxw, ryw, rzw] = self.workgroup_ranges;
        let mut wg_valid = 0u64;
        for xw in rxw.lo..=rxw.hi {
            for yw in ryw.lo..=ryw.hi {
                for zw in rzw.lo..=rzw.hi {
                    if xw as u64 * yw as u64 * zw as u64 <= self.constraint_limit {
                        wg_valid += 1;
                    }
                }
            }
        }
        let threads: u64 = self.thread_ranges.iter().map(|r| r.len()).product();
        threads * wg_valid
    }

    /// Uniform sample over the full box (`constrained == false`) or over the
    /// valid set via rejection (`constrained == true`).
    pub fn sample_uniform(&self, constrained: bool, rng: &mut impl Rng) -> Configuration {
        loop {
            let c = Configuration::new(
                self.thread_ranges[0].sample(rng),
                self.thread_ranges[1].sample(rng),
                self.thread_ranges[2].sample(rng),
                self.workgroup_ranges[0].sample(rng),
                self.workgroup_ranges[1].sample(rng),
                self.workgroup_ranges[2].sample(rng),
            );
            if !constrained || c.workgroup_product() <= self.constraint_limit {
                return c;
            }
        }
    }

    /// Draw `n` distinct valid configurations uniformly (partial Fisher-Yates
    /// over the enumerated valid set). Test facility for without-replacement
    /// random search; requires an enumerable space.
    pub fn sample_valid_without_replacement(
        &self,
        n: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<Configuration>> {
        let mut pool = self.enumerate_valid()?;
        if n > pool.len() {
            return Err(Error::Domain(format!(
                "requested {n} distinct configurations from a valid set of {}",
                pool.len()
            )));
        }
        for i in 0..n {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(n);
        Ok(pool)
    }
}
