//! Smooth histogram over suffix sketches.
//!
//! A new sketch instance starts at every arrival. After each arrival the
//! interior instance `j` is dropped whenever its neighbours already bracket
//! it tightly, i.e. `est(j + 1) >= gamma * est(j - 1)` with
//! `gamma = 1 - eps / 4`, and the oldest instance is dropped once the second
//! oldest has also left the window. For a smooth, monotone target this keeps
//! `O((1 / beta) log n)` instances whose estimates bracket every window value.
//!
//! Positions are 1-based. After arrival `i` the window is `{i - n + 1, ..., i}`
//! and an instance is expired when its start lies before `i - n + 1`.

use crate::error::{invalid, Result, SketchError};

/// A sketch of one stream suffix.
pub trait SuffixSketch {
    /// What the histogram hands every live instance per arrival. Sketches that
    /// share hash functions across instances precompute the hashed form once.
    type Update: ?Sized;

    fn update(&mut self, update: &Self::Update);

    /// Approximation of the target function on the suffix seen so far.
    fn estimate(&self) -> f64;
}

/// Creates the empty sketch for a newly started suffix.
pub trait SketchFactory {
    type Sketch: SuffixSketch;
    fn create(&self) -> Self::Sketch;
}

impl<S: SuffixSketch, F: Fn() -> S> SketchFactory for F {
    type Sketch = S;
    fn create(&self) -> S {
        self()
    }
}

/// Window count with an exact counter; the reference smooth function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExactCount(pub u64);

impl SuffixSketch for ExactCount {
    type Update = u64;

    fn update(&mut self, _item: &u64) {
        self.0 += 1;
    }

    fn estimate(&self) -> f64 {
        self.0 as f64
    }
}

/// First position still inside a window of length `window` after `clock` arrivals.
#[inline]
pub fn window_start(clock: u64, window: u64) -> u64 {
    clock.saturating_sub(window) + 1
}

/// The compaction factor `1 - eps / 4`.
#[inline]
pub fn compaction_factor(epsilon: f64) -> f64 {
    1.0 - epsilon / 4.0
}

/// Indices (ascending) of the interior instances removed by the compaction
/// scan, given the current suffix estimates ordered oldest first.
///
/// The scan runs oldest to newest and repeats until a full pass deletes
/// nothing, so the outcome does not depend on mid-scan index shifts.
pub fn compaction_victims(estimates: &[f64], gamma: f64) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..estimates.len()).collect();
    loop {
        let mut changed = false;
        let mut j = 1;
        while j + 1 < alive.len() {
            if estimates[alive[j + 1]] >= gamma * estimates[alive[j - 1]] {
                alive.remove(j);
                changed = true;
            } else {
                j += 1;
            }
        }
        if !changed {
            break;
        }
    }
    let mut victims = Vec::with_capacity(estimates.len() - alive.len());
    let mut next = alive.iter().peekable();
    for i in 0..estimates.len() {
        if next.peek() == Some(&&i) {
            next.next();
        } else {
            victims.push(i);
        }
    }
    victims
}

/// How many of the oldest instances to drop: the oldest goes while the
/// second oldest is also expired.
pub fn expired_prefix(starts: &[u64], window_start: u64) -> usize {
    let mut drop = 0;
    while starts.len() - drop >= 2 && starts[drop + 1] < window_start {
        drop += 1;
    }
    drop
}

/// The instance answering queries: the oldest one that starts inside the
/// window. Falls back to the newest instance (which always starts inside).
pub fn bracket_position(starts: &[u64], window_start: u64) -> Option<usize> {
    if starts.is_empty() {
        return None;
    }
    Some(
        starts
            .iter()
            .position(|&s| s >= window_start)
            .unwrap_or(starts.len() - 1),
    )
}

/// One live suffix sketch.
#[derive(Debug, Clone)]
pub struct Instance<S> {
    pub start: u64,
    pub sketch: S,
}

/// Histogram of suffix sketches answering sliding-window queries.
#[derive(Debug, Clone)]
pub struct SmoothHistogram<F: SketchFactory> {
    window: u64,
    epsilon: f64,
    gamma: f64,
    clock: u64,
    instances: Vec<Instance<F::Sketch>>,
    factory: F,
}

impl<F: SketchFactory> SmoothHistogram<F> {
    pub fn new(window: u64, epsilon: f64, factory: F) -> Result<Self> {
        if window == 0 {
            return Err(invalid("window length must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
        }
        Ok(SmoothHistogram {
            window,
            epsilon,
            gamma: compaction_factor(epsilon),
            clock: 0,
            instances: Vec::new(),
            factory,
        })
    }

    /// Rebuild a histogram from stored instances (oldest first).
    pub fn from_parts(
        window: u64,
        epsilon: f64,
        factory: F,
        clock: u64,
        instances: Vec<Instance<F::Sketch>>,
    ) -> Result<Self> {
        let mut h = SmoothHistogram::new(window, epsilon, factory)?;
        let increasing = instances.windows(2).all(|w| w[0].start < w[1].start);
        if !increasing || instances.last().is_some_and(|i| i.start != clock) {
            return Err(SketchError::Decode("instance starts out of order".into()));
        }
        h.clock = clock;
        h.instances = instances;
        Ok(h)
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of arrivals so far.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn window_start(&self) -> u64 {
        window_start(self.clock, self.window)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn factory(&self) -> &F {
        &self.factory
    }

    /// Live instances, oldest first.
    pub fn live(&self) -> &[Instance<F::Sketch>] {
        &self.instances
    }

    pub fn oldest(&self) -> Option<&Instance<F::Sketch>> {
        self.instances.first()
    }

    pub fn insert(&mut self, update: &<F::Sketch as SuffixSketch>::Update) {
        self.clock += 1;
        for inst in &mut self.instances {
            inst.sketch.update(update);
        }
        let mut fresh = self.factory.create();
        fresh.update(update);
        self.instances.push(Instance {
            start: self.clock,
            sketch: fresh,
        });

        let estimates: Vec<f64> = self.instances.iter().map(|i| i.sketch.estimate()).collect();
        for j in compaction_victims(&estimates, self.gamma).into_iter().rev() {
            self.instances.remove(j);
        }

        let starts: Vec<u64> = self.instances.iter().map(|i| i.start).collect();
        let drop = expired_prefix(&starts, self.window_start());
        self.instances.drain(..drop);
    }

    /// The instance whose estimate answers window queries.
    pub fn query_instance(&self) -> Option<&Instance<F::Sketch>> {
        let starts: Vec<u64> = self.instances.iter().map(|i| i.start).collect();
        bracket_position(&starts, self.window_start()).map(|p| &self.instances[p])
    }

    pub fn query(&self) -> Result<f64> {
        self.query_instance()
            .map(|i| i.sketch.estimate())
            .ok_or(SketchError::EmptyHistogram)
    }

    /// `(start, estimate)` for every live instance, oldest first.
    pub fn instances(&self) -> Vec<(u64, f64)> {
        self.instances
            .iter()
            .map(|i| (i.start, i.sketch.estimate()))
            .collect()
    }

    /// True when another compaction pass would delete nothing.
    pub fn is_compacted(&self) -> bool {
        let estimates: Vec<f64> = self.instances.iter().map(|i| i.sketch.estimate()).collect();
        compaction_victims(&estimates, self.gamma).is_empty()
    }
}
