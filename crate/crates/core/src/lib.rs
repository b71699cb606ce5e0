//! Sliding-window streaming sketches.
//!
//! The [`histogram`] module keeps a compacted list of suffix sketches whose
//! estimates bracket any window value of a smooth function. On top of it:
//!
//! - [`distinct`]: `(1 + eps)`-approximate distinct counting with a shared,
//!   compressible level table.
//! - [`heavy`]: l2 and lp heavy hitters from an F2 histogram, per-instance
//!   candidate finders and per-item windowed counters.
//! - [`f2`] and [`counter`]: the AMS sketch and the exponential-histogram
//!   counter used by the heavy-hitter pipeline.
//! - [`oracle`]: exact answers from the full window, for testing.

pub mod counter;
pub mod distinct;
pub mod error;
pub mod f2;
pub mod hashing;
pub mod heavy;
pub mod histogram;
pub mod oracle;
mod wire;

pub use counter::CounterHistogram;
pub use distinct::{DistinctParams, DistinctSketch, LevelTable};
pub use error::{Result, SketchError};
pub use f2::{AmsFactory, AmsSeeds, AmsSketch};
pub use hashing::{lsb, HashSeed, KWiseHash};
pub use heavy::{HeavyHitterState, HeavyParams};
pub use histogram::{ExactCount, SketchFactory, SmoothHistogram, SuffixSketch};
pub use oracle::WindowBuffer;

/// Median of `values`; the mean of the two middle values for even lengths.
/// Reorders `values`. Returns 0 for an empty slice.
pub fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
