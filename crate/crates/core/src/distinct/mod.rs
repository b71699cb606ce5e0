//! Sliding-window distinct-element counting.
//!
//! Small windows are answered exactly from a bounded set of recently seen
//! items. Past that, every repetition keeps one [`LevelTable`] that encodes
//! the level-sampled bucket bitmaps of all live suffix instances, and the
//! answer is the median over repetitions of `2^k * phi_inv(B, occupancy_k)`
//! for the query instance.

mod encoding;
mod phi;
mod table;

pub use encoding::{
    column_bits, decode_column, encode_column, ColumnCodec, TableSnapshot, TABLE_MAGIC,
    TABLE_VERSION,
};
pub use phi::{phi, phi_inv};
pub use table::LevelTable;

use crate::error::{check_item, invalid, Result};
use crate::hashing::HashSeed;
use crate::histogram::{
    bracket_position, compaction_factor, compaction_victims, expired_prefix, window_start,
};
use crate::median;

/// Construction parameters for [`DistinctSketch`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctParams {
    pub window: u64,
    pub epsilon: f64,
    pub universe: u64,
    pub seed: u64,
    /// `None` picks `max(3, 2 * ceil(log2 log2 n) + 1)`.
    pub repetitions: Option<usize>,
    /// Answer small windows exactly. Switching it off forces the table path.
    pub exact_small_set: bool,
}

impl DistinctParams {
    pub fn new(window: u64, epsilon: f64, universe: u64) -> Self {
        DistinctParams {
            window,
            epsilon,
            universe,
            seed: 0,
            repetitions: None,
            exact_small_set: true,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn repetitions(mut self, r: usize) -> Self {
        self.repetitions = Some(r);
        self
    }

    pub fn exact_small_set(mut self, on: bool) -> Self {
        self.exact_small_set = on;
        self
    }

    /// Buckets per row, `ceil(100 / eps^2)`.
    pub fn buckets(&self) -> usize {
        (100.0 / (self.epsilon * self.epsilon)).ceil() as usize
    }

    /// Capacity of the exact small set, `ceil(4 / eps^2)`.
    pub fn small_set_capacity(&self) -> usize {
        (4.0 / (self.epsilon * self.epsilon)).ceil() as usize
    }
}

/// Default repetition count for window length `n`.
pub fn default_repetitions(window: u64) -> usize {
    let lg = (window as f64).log2();
    if lg <= 1.0 {
        return 3;
    }
    (2 * lg.log2().ceil() as usize + 1).max(3)
}

/// Items whose last arrival is recent, tracked exactly until more than
/// `capacity` distinct items share the window. Saturation is permanent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSmallSet {
    capacity: usize,
    entries: Vec<(u64, u64)>,
    saturated: bool,
}

impl ExactSmallSet {
    pub fn new(capacity: usize) -> Self {
        ExactSmallSet {
            capacity,
            entries: Vec::new(),
            saturated: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Record an arrival of `item` at position `clock`, forgetting entries
    /// last seen before `window_start`.
    pub fn observe(&mut self, item: u64, clock: u64, window_start: u64) {
        if self.saturated {
            return;
        }
        self.entries.retain(|&(_, last)| last >= window_start);
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == item) {
            e.1 = clock;
        } else if self.entries.len() < self.capacity {
            self.entries.push((item, clock));
        } else {
            self.saturated = true;
            self.entries.clear();
        }
    }

    pub fn count_since(&self, window_start: u64) -> usize {
        self.entries
            .iter()
            .filter(|&&(_, last)| last >= window_start)
            .count()
    }
}

/// Sliding-window `(1 + eps)`-approximate distinct counter.
#[derive(Debug, Clone)]
pub struct DistinctSketch {
    params: DistinctParams,
    gamma: f64,
    clock: u64,
    starts: Vec<u64>,
    tables: Vec<LevelTable>,
    small: Option<ExactSmallSet>,
}

impl DistinctSketch {
    pub fn new(params: DistinctParams) -> Result<Self> {
        if params.window == 0 {
            return Err(invalid("window length must be at least 1"));
        }
        if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
            return Err(invalid(format!(
                "epsilon must be in (0, 1), got {}",
                params.epsilon
            )));
        }
        let reps = params
            .repetitions
            .unwrap_or_else(|| default_repetitions(params.window));
        if reps == 0 || reps % 2 == 0 || reps > 255 {
            return Err(invalid(format!(
                "repetitions must be odd and in [1, 255], got {reps}"
            )));
        }
        let master = HashSeed(params.seed);
        let tables = (0..reps)
            .map(|r| LevelTable::new(master.derive(r as u64), params.universe, params.buckets()))
            .collect::<Result<Vec<_>>>()?;
        if tables[0].rows() > u8::MAX as usize {
            return Err(invalid("universe too large"));
        }
        let small = params
            .exact_small_set
            .then(|| ExactSmallSet::new(params.small_set_capacity()));
        Ok(DistinctSketch {
            gamma: compaction_factor(params.epsilon),
            params,
            clock: 0,
            starts: Vec::new(),
            tables,
            small,
        })
    }

    pub fn params(&self) -> &DistinctParams {
        &self.params
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn window_start(&self) -> u64 {
        window_start(self.clock, self.params.window)
    }

    /// Live instance start positions, oldest first.
    pub fn starts(&self) -> &[u64] {
        &self.starts
    }

    pub fn instance_count(&self) -> usize {
        self.starts.len()
    }

    pub fn tables(&self) -> &[LevelTable] {
        &self.tables
    }

    pub fn small_set(&self) -> Option<&ExactSmallSet> {
        self.small.as_ref()
    }

    pub fn insert(&mut self, item: u64) -> Result<()> {
        check_item(item, self.params.universe)?;
        self.clock += 1;
        let ws = self.window_start();
        if let Some(small) = &mut self.small {
            small.observe(item, self.clock, ws);
        }

        self.starts.push(self.clock);
        for t in &mut self.tables {
            t.push_instance(self.clock);
            t.record(item);
        }

        let estimates = self.instance_estimates();
        for j in compaction_victims(&estimates, self.gamma).into_iter().rev() {
            self.starts.remove(j);
            for t in &mut self.tables {
                t.merge_into_previous(j);
            }
        }

        for _ in 0..expired_prefix(&self.starts, ws) {
            self.starts.remove(0);
            for t in &mut self.tables {
                t.expire_oldest();
            }
        }
        Ok(())
    }

    /// Median-over-repetitions estimate of every live suffix, oldest first.
    pub fn instance_estimates(&self) -> Vec<f64> {
        let per_rep: Vec<Vec<f64>> = self.tables.iter().map(|t| t.estimates()).collect();
        let mut buf = vec![0.0; per_rep.len()];
        (0..self.starts.len())
            .map(|i| {
                for (slot, rep) in buf.iter_mut().zip(&per_rep) {
                    *slot = rep[i];
                }
                median(&mut buf)
            })
            .collect()
    }

    /// True when the exact small set is answering queries.
    pub fn is_exact(&self) -> bool {
        self.small.as_ref().is_some_and(|s| !s.is_saturated())
    }

    /// Estimated number of distinct items among the last `n` arrivals.
    pub fn query(&self) -> f64 {
        let ws = self.window_start();
        if let Some(small) = self.small.as_ref().filter(|s| !s.is_saturated()) {
            return small.count_since(ws) as f64;
        }
        let Some(j) = bracket_position(&self.starts, ws) else {
            return 0.0;
        };
        let mut per_rep: Vec<f64> = self.tables.iter().map(|t| t.estimate(j)).collect();
        median(&mut per_rep)
    }

    /// Tables in rank form, ready for the compact encoding.
    pub fn snapshot(&self) -> TableSnapshot {
        TableSnapshot {
            rows: self.tables[0].rows() as u8,
            buckets: self.tables[0].buckets() as u32,
            window: self.params.window,
            starts: self.starts.clone(),
            repetitions: self.tables.iter().map(|t| t.ranked_cells()).collect(),
        }
    }

    pub fn serialize_table(&self) -> Result<Vec<u8>> {
        self.snapshot().to_bytes()
    }

    pub fn deserialize_table(bytes: &[u8]) -> Result<TableSnapshot> {
        TableSnapshot::from_bytes(bytes)
    }

    /// Size of the serialized tables in bytes.
    pub fn encoded_len(&self) -> usize {
        self.snapshot().encoded_len()
    }
}
