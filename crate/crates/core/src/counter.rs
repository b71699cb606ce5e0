//! Windowed count of a single item with a deterministic exponential histogram.
//!
//! Buckets hold power-of-two counts and the position of their newest
//! arrival. With `k = ceil(1 / eps)` there are at most `k + 1` buckets of
//! each size; the two oldest of a size merge when a `(k + 2)`-th appears.
//! The oldest bucket may straddle the window start and counts for half.

use std::collections::VecDeque;

use crate::error::{invalid, Result, SketchError};
use crate::histogram::window_start;

/// One bucket: `size` arrivals, the newest at position `newest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bucket {
    pub newest: u64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterHistogram {
    epsilon: f64,
    k: usize,
    window: u64,
    last_clock: u64,
    // Oldest first.
    buckets: VecDeque<Bucket>,
}

impl CounterHistogram {
    pub fn new(window: u64, epsilon: f64) -> Result<Self> {
        if window == 0 {
            return Err(invalid("window length must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must be in (0, 1], got {epsilon}")));
        }
        Ok(CounterHistogram {
            epsilon,
            k: (1.0 / epsilon).ceil() as usize,
            window,
            last_clock: 0,
            buckets: VecDeque::new(),
        })
    }

    /// Rebuild from stored buckets (oldest first).
    pub fn from_buckets(
        window: u64,
        epsilon: f64,
        last_clock: u64,
        buckets: Vec<Bucket>,
    ) -> Result<Self> {
        let mut c = CounterHistogram::new(window, epsilon)?;
        let ordered = buckets.windows(2).all(|w| w[0].newest < w[1].newest);
        let sized = buckets.iter().all(|b| b.size.is_power_of_two());
        if !ordered || !sized || buckets.last().is_some_and(|b| b.newest > last_clock) {
            return Err(SketchError::Decode("malformed counter buckets".into()));
        }
        c.last_clock = last_clock;
        c.buckets = buckets.into();
        Ok(c)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn last_clock(&self) -> u64 {
        self.last_clock
    }

    /// Buckets, oldest first.
    pub fn buckets(&self) -> impl Iterator<Item = &Bucket> {
        self.buckets.iter()
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Largest bucket count the shape invariant allows.
    pub fn bucket_cap(&self) -> usize {
        (self.k + 1) * ((self.window as f64).log2().ceil() as usize + 2)
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    /// Advance to position `clock`, recording an arrival if `arrived`.
    pub fn observe(&mut self, arrived: bool, clock: u64) -> Result<()> {
        if clock <= self.last_clock {
            return Err(SketchError::NonMonotoneClock {
                last: self.last_clock,
                got: clock,
            });
        }
        self.last_clock = clock;
        self.expire(clock);
        if arrived {
            self.buckets.push_back(Bucket {
                newest: clock,
                size: 1,
            });
            self.cascade();
        }
        debug_assert!(self.buckets.len() <= self.bucket_cap());
        Ok(())
    }

    /// Drop buckets whose newest arrival left the window ending at `clock`.
    pub fn expire(&mut self, clock: u64) {
        let ws = window_start(clock, self.window);
        while self.buckets.front().is_some_and(|b| b.newest < ws) {
            self.buckets.pop_front();
        }
    }

    fn cascade(&mut self) {
        let mut size = 1;
        // Buckets of one size are contiguous; walk from the newest end.
        let mut end = self.buckets.len();
        loop {
            let mut begin = end;
            while begin > 0 && self.buckets[begin - 1].size == size {
                begin -= 1;
            }
            if end - begin < self.k + 2 {
                break;
            }
            let newer = self.buckets[begin + 1].newest;
            self.buckets.remove(begin + 1);
            self.buckets[begin] = Bucket {
                newest: newer,
                size: size * 2,
            };
            end = begin + 1;
            size *= 2;
        }
    }

    /// Estimate for the window ending at the last observed position.
    pub fn estimate(&self) -> f64 {
        self.estimate_at(self.last_clock)
    }

    /// Estimate for the window ending at `clock >= last_clock`, without
    /// recording anything.
    pub fn estimate_at(&self, clock: u64) -> f64 {
        let ws = window_start(clock, self.window);
        let mut live = self.buckets.iter().skip_while(|b| b.newest < ws);
        let Some(oldest) = live.next() else {
            return 0.0;
        };
        let rest: u64 = live.map(|b| b.size).sum();
        let straddle = if oldest.size == 1 {
            1.0
        } else {
            oldest.size as f64 / 2.0
        };
        rest as f64 + straddle
    }

    /// Bucket sizes are non-increasing from oldest to newest, and every size
    /// below the largest occurs `k` or `k + 1` times.
    pub fn is_canonical(&self) -> bool {
        let sizes: Vec<u64> = self.buckets.iter().map(|b| b.size).collect();
        if sizes.windows(2).any(|w| w[0] < w[1]) || sizes.iter().any(|s| !s.is_power_of_two()) {
            return false;
        }
        let Some(&largest) = sizes.first() else {
            return true;
        };
        let mut s = 1;
        while s <= largest {
            let count = sizes.iter().filter(|&&x| x == s).count();
            if count > self.k + 1 || (s < largest && count < self.k) {
                return false;
            }
            s *= 2;
        }
        true
    }
}
