//! Seeded k-wise independent hash families over the Mersenne prime field
//! `2^61 - 1`, plus the bit utilities the sketches share.
//!
//! A family of degree `k` is the set of polynomials of degree `k - 1` with
//! coefficients drawn uniformly from the field. Any `k` distinct inputs map
//! to jointly uniform field elements, which is then reduced to the requested
//! output range (the bias of that reduction is at most `range / 2^61`).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result, SketchError};

/// The field modulus shared by every family.
pub const MERSENNE_61: u64 = (1u64 << 61) - 1;

/// Largest universe any family accepts.
pub const MAX_UNIVERSE: u64 = 1u64 << 32;

/// Independence of the level-sampling hash used by the distinct-elements sketch.
pub const LEVEL_HASH_DEGREE: usize = 8;

/// Seed from which a hash function is derived. Same seed and same family
/// parameters always give the same function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashSeed(pub u64);

impl HashSeed {
    /// Derive an independent child seed, e.g. one per repetition or row.
    pub fn derive(self, label: u64) -> HashSeed {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(label);
        HashSeed(rng.next_u64())
    }
}

impl From<u64> for HashSeed {
    fn from(v: u64) -> Self {
        HashSeed(v)
    }
}

#[inline]
fn reduce(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// A polynomial hash drawn from a k-wise independent family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KWiseHash {
    seed: HashSeed,
    // Highest degree first, evaluated by Horner's rule.
    coeffs: Box<[u64]>,
    universe: u64,
    range: u64,
}

impl KWiseHash {
    /// Draw the member of the degree-`k` family selected by `seed`, mapping
    /// `[0, universe)` into `[0, range)`.
    pub fn new(seed: HashSeed, k: usize, universe: u64, range: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("hash independence k must be positive"));
        }
        if universe == 0 || universe > MAX_UNIVERSE {
            return Err(invalid(format!(
                "universe must be in [1, 2^32], got {universe}"
            )));
        }
        if range == 0 {
            return Err(invalid("hash output range must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        let coeffs = (0..k).map(|_| rng.random_range(0..MERSENNE_61)).collect();
        Ok(KWiseHash {
            seed,
            coeffs,
            universe,
            range,
        })
    }

    pub fn seed(&self) -> HashSeed {
        self.seed
    }

    /// Independence parameter k (number of coefficients).
    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    /// The raw polynomial value in `[0, 2^61 - 1)`.
    #[inline]
    pub fn field_value(&self, x: u64) -> u64 {
        let x = x % MERSENNE_61;
        let mut acc = self.coeffs[0];
        for &c in &self.coeffs[1..] {
            acc = add_mod(mul_mod(acc, x), c);
        }
        acc
    }

    /// Hash value in `[0, range)`.
    #[inline]
    pub fn hash(&self, x: u64) -> u64 {
        self.field_value(x) % self.range
    }
}

/// A ±1 sign function from a k-wise independent family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RademacherHash {
    poly: KWiseHash,
}

impl RademacherHash {
    pub fn seed(&self) -> HashSeed {
        self.poly.seed
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    /// `+1` when the low bit of the polynomial value is set, `-1` otherwise.
    #[inline]
    pub fn sign(&self, x: u64) -> i64 {
        if self.poly.field_value(x) & 1 == 1 {
            1
        } else {
            -1
        }
    }
}

/// Pairwise independent hash `[0, universe) -> [0, range)`.
pub fn make_pairwise(seed: HashSeed, universe: u64, range: u64) -> Result<KWiseHash> {
    KWiseHash::new(seed, 2, universe, range)
}

/// k-wise independent Rademacher signs over `[0, universe)`.
pub fn make_rademacher(seed: HashSeed, universe: u64, k: usize) -> Result<RademacherHash> {
    if k < 2 {
        return Err(invalid("Rademacher independence must be at least 2"));
    }
    Ok(RademacherHash {
        poly: KWiseHash::new(seed, k, universe, 2)?,
    })
}

/// Level hash for lsb sampling: a degree-8 polynomial whose low
/// `ceil(log2 universe)` bits are kept.
pub fn make_level_hash(seed: HashSeed, universe: u64) -> Result<KWiseHash> {
    let bits = ceil_log2(universe);
    KWiseHash::new(seed, LEVEL_HASH_DEGREE, universe, 1u64 << bits)
}

/// `ceil(log2 x)` for `x >= 1`; `ceil_log2(1) == 0`.
pub fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Index of the least significant set bit of `x`, viewed as a `width`-bit
/// word. `lsb(0, width) == width`.
pub fn lsb(x: u64, width: u32) -> Result<u32> {
    if width == 0 || width > 64 {
        return Err(SketchError::Domain(format!("width {width} not in [1, 64]")));
    }
    if width < 64 && x >> width != 0 {
        return Err(SketchError::Domain(format!(
            "{x} does not fit in {width} bits"
        )));
    }
    Ok(if x == 0 { width } else { x.trailing_zeros() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsb_examples() {
        assert_eq!(lsb(10, 16).unwrap(), 1);
        assert_eq!(lsb(0, 16).unwrap(), 16);
        assert_eq!(lsb(1, 16).unwrap(), 0);
        assert_eq!(lsb(8, 16).unwrap(), 3);
        assert_eq!(lsb(1 << 15, 16).unwrap(), 15);
        assert_eq!(lsb(u64::MAX, 64).unwrap(), 0);
    }

    #[test]
    fn lsb_rejects_wide_input() {
        assert!(matches!(lsb(1 << 16, 16), Err(SketchError::Domain(_))));
        assert!(lsb(3, 0).is_err());
    }

    #[test]
    fn mul_mod_matches_u128_reference() {
        let samples = [0, 1, 2, MERSENNE_61 - 1, MERSENNE_61 / 2, 123_456_789_012_345];
        for &a in &samples {
            for &b in &samples {
                let expect = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
                assert_eq!(mul_mod(a, b), expect, "{a} * {b}");
            }
        }
    }

    #[test]
    fn pairwise_is_deterministic() {
        let a = make_pairwise(HashSeed(7), 1 << 16, 16).unwrap();
        let b = make_pairwise(HashSeed(7), 1 << 16, 16).unwrap();
        assert_eq!(a.hash(42), a.hash(42));
        assert_eq!(a.hash(42), b.hash(42));
        assert_eq!(a.degree(), 2);
    }

    #[test]
    fn outputs_stay_in_range_on_small_universe() {
        let m = 1u64 << 10;
        for seed in 0..8 {
            let h = make_pairwise(HashSeed(seed), m, 13).unwrap();
            let lvl = make_level_hash(HashSeed(seed), m).unwrap();
            let z = make_rademacher(HashSeed(seed), m, 6).unwrap();
            for x in 0..m {
                assert!(h.hash(x) < 13);
                assert!(lvl.hash(x) < 1 << 10);
                assert!(lvl.field_value(x) < MERSENNE_61);
                assert!(matches!(z.sign(x), -1 | 1));
            }
        }
    }

    #[test]
    fn pairwise_collision_rate() {
        // 64-element universe, B = 16, averaged over 1000 seeds.
        let mut collisions = 0u64;
        let mut pairs = 0u64;
        for seed in 0..1000 {
            let h = make_pairwise(HashSeed(seed), 64, 16).unwrap();
            let v: Vec<u64> = (0..64).map(|x| h.hash(x)).collect();
            for i in 0..64 {
                for j in i + 1..64 {
                    pairs += 1;
                    collisions += u64::from(v[i] == v[j]);
                }
            }
        }
        let rate = collisions as f64 / pairs as f64;
        assert!((rate - 1.0 / 16.0).abs() <= 0.01, "collision rate {rate}");
    }

    #[test]
    fn pairwise_joint_distribution_is_uniform() {
        // Chi-square over the 16 cells of (h(3), h(11)) with B = 4.
        let trials = 16_000;
        let mut cells = [0u32; 16];
        for seed in 0..trials {
            let h = make_pairwise(HashSeed(seed), 1 << 10, 4).unwrap();
            cells[(h.hash(3) * 4 + h.hash(11)) as usize] += 1;
        }
        let expected = trials as f64 / 16.0;
        let chi2: f64 = cells
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 15 degrees of freedom; 37.7 is the 0.999 quantile.
        assert!(chi2 < 37.7, "chi2 {chi2}, cells {cells:?}");
    }

    #[test]
    fn rademacher_mean_is_zero() {
        let m = 1u64 << 12;
        let mut sum = 0i64;
        for seed in 0..100 {
            let z = make_rademacher(HashSeed(seed), m, 6).unwrap();
            sum += (0..m).map(|x| z.sign(x)).sum::<i64>();
        }
        let mean = sum as f64 / (100 * m) as f64;
        assert!(mean.abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn rademacher_pairs_are_orthogonal() {
        let (i, j) = (17u64, 4001u64);
        let sum: i64 = (0..1000)
            .map(|seed| {
                let z = make_rademacher(HashSeed(seed), 1 << 12, 6).unwrap();
                z.sign(i) * z.sign(j)
            })
            .sum();
        let mean = sum as f64 / 1000.0;
        assert!(mean.abs() <= 0.05, "mean {mean}");
    }

    #[test]
    fn rademacher_is_deterministic() {
        let a = make_rademacher(HashSeed(99), 1 << 16, 6).unwrap();
        let b = make_rademacher(HashSeed(99), 1 << 16, 6).unwrap();
        for x in [0, 1, 500, 65_535] {
            assert_eq!(a.sign(x), b.sign(x));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(make_pairwise(HashSeed(1), 0, 4).is_err());
        assert!(make_pairwise(HashSeed(1), 4, 0).is_err());
        assert!(make_pairwise(HashSeed(1), MAX_UNIVERSE + 1, 4).is_err());
        assert!(make_rademacher(HashSeed(1), 16, 1).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s = HashSeed(5);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(3), s.derive(3));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1 << 16), 16);
        assert_eq!(ceil_log2((1 << 16) + 1), 17);
    }
}
