//! AMS second-moment sketch.
//!
//! `N = 96` signed counters `X_j = <Z_j, f>` with 6-wise independent
//! Rademacher vectors `Z_j`. The estimate is the median of 6 group means of
//! `X_j^2`. Sketches built from the same [`AmsSeeds`] merge exactly by adding
//! counters.

use std::sync::Arc;

use crate::error::{check_item, Result, SketchError};
use crate::hashing::{make_rademacher, HashSeed, RademacherHash};
use crate::histogram::{SketchFactory, SuffixSketch};
use crate::median;

pub const AMS_COUNTERS: usize = 96;
pub const AMS_GROUPS: usize = 6;
pub const AMS_GROUP_SIZE: usize = AMS_COUNTERS / AMS_GROUPS;
pub const AMS_INDEPENDENCE: usize = 6;

/// The sign functions `Z_1..Z_N` shared by every sketch of one histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmsSeeds {
    master: HashSeed,
    universe: u64,
    signs: Vec<RademacherHash>,
}

impl AmsSeeds {
    pub fn new(master: HashSeed, universe: u64) -> Result<Arc<Self>> {
        let signs = (0..AMS_COUNTERS as u64)
            .map(|j| make_rademacher(master.derive(j), universe, AMS_INDEPENDENCE))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(AmsSeeds {
            master,
            universe,
            signs,
        }))
    }

    pub fn master(&self) -> HashSeed {
        self.master
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    /// Seeds of the individual sign functions.
    pub fn seeds(&self) -> Vec<u64> {
        self.signs.iter().map(|s| s.seed().0).collect()
    }

    /// All `N` signs of `item`, evaluated once.
    pub fn signs_of(&self, item: u64) -> Result<SignVector> {
        check_item(item, self.universe)?;
        let mut negative = 0u128;
        for (j, z) in self.signs.iter().enumerate() {
            if z.sign(item) < 0 {
                negative |= 1 << j;
            }
        }
        Ok(SignVector(negative))
    }
}

/// `Z_j(item)` for all `j`, packed as a bitmask of the negative signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignVector(pub u128);

impl SignVector {
    #[inline]
    pub fn sign(&self, j: usize) -> i64 {
        if self.0 >> j & 1 == 1 {
            -1
        } else {
            1
        }
    }
}

/// AMS sketch of one stream segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmsSketch {
    seeds: Arc<AmsSeeds>,
    counters: [i64; AMS_COUNTERS],
}

impl AmsSketch {
    pub fn new(seeds: Arc<AmsSeeds>) -> Self {
        AmsSketch {
            seeds,
            counters: [0; AMS_COUNTERS],
        }
    }

    /// Rebuild from stored counters.
    pub fn from_counters(seeds: Arc<AmsSeeds>, counters: [i64; AMS_COUNTERS]) -> Self {
        AmsSketch { seeds, counters }
    }

    pub fn seeds(&self) -> &Arc<AmsSeeds> {
        &self.seeds
    }

    pub fn counters(&self) -> &[i64; AMS_COUNTERS] {
        &self.counters
    }

    pub fn update(&mut self, item: u64) -> Result<()> {
        let signs = self.seeds.signs_of(item)?;
        self.update_signs(&signs);
        Ok(())
    }

    #[inline]
    pub fn update_signs(&mut self, signs: &SignVector) {
        for (j, x) in self.counters.iter_mut().enumerate() {
            *x += signs.sign(j);
        }
    }

    /// Sketch of the concatenated segments.
    pub fn merge(&self, other: &AmsSketch) -> Result<AmsSketch> {
        if self.seeds != other.seeds {
            return Err(SketchError::SeedMismatch);
        }
        let mut out = self.clone();
        for (a, b) in out.counters.iter_mut().zip(&other.counters) {
            *a += b;
        }
        Ok(out)
    }

    /// `Y = (1/N) * sum_j X_j^2`, the plain unbiased estimator.
    pub fn mean_square(&self) -> f64 {
        let sum: f64 = self.counters.iter().map(|&x| (x as f64) * (x as f64)).sum();
        sum / AMS_COUNTERS as f64
    }

    /// Median of the group means of `X_j^2`.
    pub fn estimate(&self) -> f64 {
        let mut means = [0.0; AMS_GROUPS];
        for (g, chunk) in self.counters.chunks(AMS_GROUP_SIZE).enumerate() {
            let s: f64 = chunk.iter().map(|&x| (x as f64) * (x as f64)).sum();
            means[g] = s / AMS_GROUP_SIZE as f64;
        }
        median(&mut means)
    }
}

impl SuffixSketch for AmsSketch {
    type Update = SignVector;

    fn update(&mut self, signs: &SignVector) {
        self.update_signs(signs);
    }

    fn estimate(&self) -> f64 {
        AmsSketch::estimate(self)
    }
}

/// Creates empty AMS sketches over one set of seeds.
#[derive(Debug, Clone)]
pub struct AmsFactory(pub Arc<AmsSeeds>);

impl SketchFactory for AmsFactory {
    type Sketch = AmsSketch;

    fn create(&self) -> AmsSketch {
        AmsSketch::new(self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds(s: u64) -> Arc<AmsSeeds> {
        AmsSeeds::new(HashSeed(s), 1 << 8).unwrap()
    }

    #[test]
    fn single_item_counters_are_signs() {
        let s = seeds(1);
        let mut sk = AmsSketch::new(s.clone());
        sk.update(7).unwrap();
        let z = s.signs_of(7).unwrap();
        for j in 0..AMS_COUNTERS {
            assert_eq!(sk.counters()[j], z.sign(j));
        }
        for _ in 0..4 {
            sk.update(7).unwrap();
        }
        for j in 0..AMS_COUNTERS {
            assert_eq!(sk.counters()[j], 5 * z.sign(j));
        }
        assert_eq!(sk.estimate(), 25.0);
    }

    #[test]
    fn empty_estimate_is_zero() {
        assert_eq!(AmsSketch::new(seeds(2)).estimate(), 0.0);
    }

    #[test]
    fn merge_rejects_foreign_seeds() {
        let a = AmsSketch::new(seeds(1));
        let b = AmsSketch::new(seeds(2));
        assert_eq!(a.merge(&b), Err(SketchError::SeedMismatch));
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let s = seeds(3);
        let mut a = AmsSketch::new(s.clone());
        for i in [1, 2, 2, 9] {
            a.update(i).unwrap();
        }
        assert_eq!(a.merge(&AmsSketch::new(s)).unwrap(), a);
    }

    #[test]
    fn out_of_range_item() {
        let mut a = AmsSketch::new(seeds(3));
        assert!(a.update(256).is_err());
    }
}
