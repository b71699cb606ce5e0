//! Sliding-window l2 and lp heavy hitters.
//!
//! An F2 smooth histogram at constant accuracy pairs every suffix instance
//! with a [`CandidateFinder`]. Items reported by any live finder get a
//! [`CounterHistogram`]; a query keeps the counted items whose estimate is
//! at least `(eps / 4)` times the l2 estimate of the oldest instance.

mod finder;

pub use finder::{CandidateFinder, FinderHashes, Probe, FINDER_SIGN_INDEPENDENCE};

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::counter::{Bucket, CounterHistogram};
use crate::error::{check_item, invalid, Result, SketchError};
use crate::f2::{AmsSeeds, AmsSketch, SignVector, AMS_COUNTERS};
use crate::hashing::HashSeed;
use crate::histogram::{Instance, SketchFactory, SmoothHistogram, SuffixSketch};
use crate::wire::Reader;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"CHHH";
pub const SNAPSHOT_VERSION: u8 = 1;

/// Accuracy of the F2 histogram.
pub const F2_EPSILON: f64 = 0.5;
/// Relative error of the per-item counters.
pub const COUNTER_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyParams {
    pub window: u64,
    pub epsilon: f64,
    pub p: f64,
    pub universe: u64,
    pub seed: u64,
}

impl HeavyParams {
    pub fn new(window: u64, epsilon: f64, p: f64, universe: u64) -> Self {
        HeavyParams {
            window,
            epsilon,
            p,
            universe,
            seed: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The l2 accuracy that serves lp queries, `eps^(p/2)`.
    pub fn l2_epsilon(&self) -> f64 {
        self.epsilon.powf(self.p / 2.0)
    }

    /// Finder report fraction `theta = eps_2 / 16`.
    pub fn theta(&self) -> f64 {
        self.l2_epsilon() / 16.0
    }

    /// Finder width `ceil(8 / theta^2)`.
    pub fn finder_width(&self) -> usize {
        let t = self.theta();
        (8.0 / (t * t)).ceil() as usize
    }

    /// Finder depth `ceil(4 log2 n)`, at least 1.
    pub fn finder_depth(&self) -> usize {
        ((4.0 * (self.window as f64).log2()).ceil() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(invalid("window length must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must be in (0, 1], got {}", self.epsilon)));
        }
        check_p(self.p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(SketchError::Domain(format!("p must be in (0, 2], got {p}")))
    }
}

/// Everything an instance needs from one arrival, hashed once.
#[derive(Debug, Clone)]
pub struct Arrival {
    pub signs: SignVector,
    pub probe: Probe,
}

/// One suffix instance: AMS sketch plus its paired finder.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyInstance {
    pub ams: AmsSketch,
    pub finder: CandidateFinder,
}

impl SuffixSketch for HeavyInstance {
    type Update = Arrival;

    fn update(&mut self, a: &Arrival) {
        self.ams.update_signs(&a.signs);
        let l2 = self.ams.estimate().sqrt();
        self.finder.update(&a.probe, l2);
    }

    fn estimate(&self) -> f64 {
        self.ams.estimate()
    }
}

#[derive(Debug, Clone)]
pub struct HeavyFactory {
    ams: Arc<AmsSeeds>,
    finder: Arc<FinderHashes>,
    theta: f64,
}

impl SketchFactory for HeavyFactory {
    type Sketch = HeavyInstance;

    fn create(&self) -> HeavyInstance {
        HeavyInstance {
            ams: AmsSketch::new(self.ams.clone()),
            finder: CandidateFinder::new(self.finder.clone(), self.theta),
        }
    }
}

/// A counted item.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracked {
    pub counter: CounterHistogram,
    pub created: u64,
}

#[derive(Debug, Clone)]
pub struct HeavyHitterState {
    params: HeavyParams,
    hist: SmoothHistogram<HeavyFactory>,
    registry: BTreeMap<u64, Tracked>,
}

impl HeavyHitterState {
    pub fn new(params: HeavyParams) -> Result<Self> {
        params.validate()?;
        let master = HashSeed(params.seed);
        let factory = HeavyFactory {
            ams: AmsSeeds::new(master.derive(0), params.universe)?,
            finder: FinderHashes::new(
                master.derive(1),
                params.universe,
                params.finder_depth(),
                params.finder_width(),
            )?,
            theta: params.theta(),
        };
        let hist = SmoothHistogram::new(params.window, F2_EPSILON, factory)?;
        Ok(HeavyHitterState {
            params,
            hist,
            registry: BTreeMap::new(),
        })
    }

    pub fn params(&self) -> &HeavyParams {
        &self.params
    }

    pub fn clock(&self) -> u64 {
        self.hist.clock()
    }

    pub fn histogram(&self) -> &SmoothHistogram<HeavyFactory> {
        &self.hist
    }

    pub fn instance_count(&self) -> usize {
        self.hist.len()
    }

    pub fn instance_starts(&self) -> Vec<u64> {
        self.hist.live().iter().map(|i| i.start).collect()
    }

    pub fn registry(&self) -> &BTreeMap<u64, Tracked> {
        &self.registry
    }

    /// Hard cap on counted items, `ceil(8 / theta^2)` per live instance.
    pub fn registry_cap(&self) -> usize {
        self.params.finder_width() * self.hist.len().max(1)
    }

    pub fn insert(&mut self, item: u64) -> Result<()> {
        check_item(item, self.params.universe)?;
        let f = self.hist.factory();
        let arrival = Arrival {
            signs: f.ams.signs_of(item)?,
            probe: f.finder.probe(item)?,
        };
        self.hist.insert(&arrival);
        let clock = self.hist.clock();

        if let Some(t) = self.registry.get_mut(&item) {
            t.counter.observe(true, clock)?;
        } else if self.hist.live().iter().any(|i| i.sketch.finder.is_candidate(item)) {
            while self.registry.len() >= self.registry_cap() {
                self.evict_one(clock);
            }
            let mut counter = CounterHistogram::new(self.params.window, COUNTER_EPSILON)?;
            counter.observe(true, clock)?;
            self.registry.insert(
                item,
                Tracked {
                    counter,
                    created: clock,
                },
            );
        }

        if clock % self.params.window == 0 {
            self.sweep(clock);
        }
        Ok(())
    }

    fn evict_one(&mut self, clock: u64) {
        let victim = self
            .registry
            .iter()
            .map(|(&item, t)| (t.counter.estimate_at(clock), t.created, item))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|v| v.2);
        if let Some(item) = victim {
            self.registry.remove(&item);
        }
    }

    // Counters whose arrivals all expired carry nothing, unless the oldest
    // finder still reports the item.
    fn sweep(&mut self, clock: u64) {
        let oldest = self.hist.oldest().map(|i| &i.sketch.finder);
        self.registry.retain(|&item, t| {
            t.counter.expire(clock);
            !t.counter.is_empty() || oldest.is_some_and(|f| f.is_candidate(item))
        });
    }

    /// l2 estimate of the oldest instance.
    pub fn l2_estimate(&self) -> f64 {
        self.hist.oldest().map_or(0.0, |i| i.sketch.estimate().sqrt())
    }

    /// Items with counter estimate at least `(eps / 4)` times the l2
    /// estimate, ordered by item.
    pub fn query_l2(&self, epsilon: f64) -> Result<Vec<(u64, f64)>> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must be in (0, 1], got {epsilon}")));
        }
        if self.hist.is_empty() {
            return Ok(Vec::new());
        }
        let cut = epsilon / 4.0 * self.l2_estimate();
        let clock = self.clock();
        Ok(self
            .registry
            .iter()
            .map(|(&item, t)| (item, t.counter.estimate_at(clock)))
            .filter(|&(_, f)| f > 0.0 && f >= cut)
            .collect())
    }

    /// lp heavy hitters via the l2 query at `eps^(p/2)`.
    pub fn query_lp(&self, epsilon: f64, p: f64) -> Result<Vec<(u64, f64)>> {
        check_p(p)?;
        self.query_l2(epsilon.powf(p / 2.0))
    }

    /// Heavy hitters for the configured `eps` and `p`.
    pub fn query(&self) -> Result<Vec<(u64, f64)>> {
        self.query_lp(self.params.epsilon, self.params.p)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.push(SNAPSHOT_VERSION);
        put_u64(&mut out, self.params.window);
        out.extend_from_slice(&self.params.epsilon.to_le_bytes());
        out.extend_from_slice(&self.params.p.to_le_bytes());
        put_u64(&mut out, self.params.seed);
        put_u64(&mut out, self.params.universe);
        put_u64(&mut out, self.hist.clock());

        put_u32(&mut out, self.hist.len() as u32);
        for inst in self.hist.live() {
            put_u64(&mut out, inst.start);
            for x in inst.sketch.ams.counters() {
                out.extend_from_slice(&x.to_le_bytes());
            }
            let table = inst.sketch.finder.table();
            let nonzero: Vec<(usize, i32)> = table
                .iter()
                .enumerate()
                .filter(|e| *e.1 != 0)
                .map(|(i, &v)| (i, v))
                .collect();
            put_u32(&mut out, nonzero.len() as u32);
            for (i, v) in nonzero {
                put_u32(&mut out, i as u32);
                out.extend_from_slice(&v.to_le_bytes());
            }
            let report = inst.sketch.finder.report();
            put_u32(&mut out, report.len() as u32);
            for (item, est) in report {
                put_u64(&mut out, item);
                out.extend_from_slice(&est.to_le_bytes());
            }
        }

        put_u32(&mut out, self.registry.len() as u32);
        for (&item, t) in &self.registry {
            put_u64(&mut out, item);
            put_u64(&mut out, t.created);
            put_u64(&mut out, t.counter.last_clock());
            put_u32(&mut out, t.counter.bucket_count() as u32);
            for b in t.counter.buckets() {
                put_u64(&mut out, b.newest);
                put_u64(&mut out, b.size);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4)? != SNAPSHOT_MAGIC {
            return Err(SketchError::Decode("bad magic".into()));
        }
        let version = rd.u8()?;
        if version != SNAPSHOT_VERSION {
            return Err(SketchError::Decode(format!("unsupported version {version}")));
        }
        let window = rd.u64()?;
        let epsilon = rd.f64()?;
        let p = rd.f64()?;
        let seed = rd.u64()?;
        let universe = rd.u64()?;
        let clock = rd.u64()?;
        let params = HeavyParams {
            window,
            epsilon,
            p,
            universe,
            seed,
        };
        let fresh = HeavyHitterState::new(params.clone())
            .map_err(|e| SketchError::Decode(format!("bad parameters: {e}")))?;
        let factory = fresh.hist.factory().clone();
        let cells = params.finder_depth() * params.finder_width();

        let count = rd.u32()? as usize;
        let mut instances = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let start = rd.u64()?;
            let mut counters = [0i64; AMS_COUNTERS];
            for x in counters.iter_mut() {
                *x = rd.i64()?;
            }
            let mut table = vec![0i32; cells];
            for _ in 0..rd.u32()? {
                let i = rd.u32()? as usize;
                let v = rd.i32()?;
                *table
                    .get_mut(i)
                    .ok_or_else(|| SketchError::Decode("finder cell out of range".into()))? = v;
            }
            let mut candidates = HashMap::new();
            for _ in 0..rd.u32()? {
                let item = rd.u64()?;
                candidates.insert(item, rd.f64()?);
            }
            let mut sketch = factory.create();
            sketch.ams = AmsSketch::from_counters(factory.ams.clone(), counters);
            sketch.finder.restore(table, candidates);
            instances.push(Instance { start, sketch });
        }
        let hist = SmoothHistogram::from_parts(window, F2_EPSILON, factory, clock, instances)?;

        let mut registry = BTreeMap::new();
        for _ in 0..rd.u32()? {
            let item = rd.u64()?;
            let created = rd.u64()?;
            let last = rd.u64()?;
            let mut buckets = Vec::new();
            for _ in 0..rd.u32()? {
                let newest = rd.u64()?;
                let size = rd.u64()?;
                buckets.push(Bucket { newest, size });
            }
            let counter = CounterHistogram::from_buckets(window, COUNTER_EPSILON, last, buckets)?;
            registry.insert(item, Tracked { counter, created });
        }
        if rd.pos != bytes.len() {
            return Err(SketchError::Decode("trailing bytes".into()));
        }
        Ok(HeavyHitterState {
            params,
            hist,
            registry,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}
