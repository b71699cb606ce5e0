//! Acceptance criteria: statistical and exhaustive checks against exact
//! answers, each with a pass/fail verdict and the measured numbers.

use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use slidewin_core::distinct::{phi, phi_inv, ColumnCodec};
use slidewin_core::f2::{AmsSeeds, AmsSketch};
use slidewin_core::heavy::{HeavyHitterState, HeavyParams};
use slidewin_core::oracle::{oracle_distinct, oracle_heavy, WindowBuffer};
use slidewin_core::{
    CounterHistogram, DistinctParams, DistinctSketch, ExactCount, HashSeed, LevelTable,
    SmoothHistogram,
};

use crate::gen::{planted_distinct, LbLayout, Planted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Distinct,
    Hh,
    Counter,
    Histogram,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Distinct => &[1, 2, 8, 9, 10, 11],
            Suite::Hh => &[3, 4, 5],
            Suite::Histogram => &[6],
            Suite::Counter => &[7],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} [{:>2}] {}: {} ({:.2} s",
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(b) = self.budget {
            write!(f, ", budget {} s", b.as_secs())?;
        }
        write!(f, ")")
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "distinct accuracy",
        2 => "exact small-set path",
        3 => "AMS merge identity",
        4 => "F2 tracking",
        5 => "heavy hitters accept/reject",
        6 => "histogram instance bound",
        7 => "counter deterministic guarantee",
        8 => "phi round trip",
        9 => "column encoding bijection",
        10 => "table rebuild equivalence",
        11 => "lb-blocks decodability",
        _ => "unknown",
    }
}

fn budget(id: u8) -> Option<Duration> {
    match id {
        1 | 4 | 11 => Some(Duration::from_secs(60)),
        5 => Some(Duration::from_secs(120)),
        _ => None,
    }
}

/// Worker threads: `CH_THREADS` if set, else the available cores.
pub fn thread_count() -> usize {
    std::env::var("CH_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Seed for trial `trial` of criterion `id` under `master`.
pub fn trial_seed(master: u64, id: u8, trial: u64) -> u64 {
    HashSeed(master).derive(u64::from(id) << 32 | trial).0
}

/// Run one criterion on a pool of [`thread_count`] workers.
pub fn run_criterion(id: u8, master: u64) -> Report {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool");
    let start = Instant::now();
    let out = pool.install(|| match id {
        1 => distinct_accuracy(master),
        2 => exact_path(master),
        3 => ams_merge(master),
        4 => f2_tracking(master),
        5 => heavy_hitters(master),
        6 => instance_bound(),
        7 => counter_exhaustive(),
        8 => phi_round_trip(),
        9 => column_bijection(),
        10 => table_rebuild(master),
        11 => lb_blocks(master),
        _ => outcome(false, format!("no criterion {id}")),
    });
    let elapsed = start.elapsed();
    let budget = budget(id);
    let in_time = budget.is_none_or(|b| elapsed < b);
    let mut detail = out.detail;
    if !in_time {
        detail.push_str("; over budget");
    }
    Report {
        id,
        name: name(id),
        passed: out.passed && in_time,
        detail,
        elapsed,
        budget,
    }
}

/// Run a suite, calling `each` as every criterion finishes.
pub fn run_suite(suite: Suite, master: u64, mut each: impl FnMut(&Report)) -> Vec<Report> {
    suite
        .criteria()
        .iter()
        .map(|&id| {
            let r = run_criterion(id, master);
            each(&r);
            r
        })
        .collect()
}

fn trials<T: Send>(master: u64, id: u8, count: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    (0..count)
        .into_par_iter()
        .map(|t| f(trial_seed(master, id, t)))
        .collect()
}

fn distinct_accuracy(master: u64) -> Outcome {
    let (n, eps, universe) = (1u64 << 12, 0.25, 1u64 << 16);
    let errors: Vec<f64> = trials(master, 1, 30, |seed| {
        let stream = planted_distinct(n, 1 << 10, universe, seed).expect("valid parameters");
        let mut sk = DistinctSketch::new(
            DistinctParams::new(n, eps, universe)
                .seed(seed)
                .repetitions(7),
        )
        .expect("valid parameters");
        let mut buf = WindowBuffer::new(n);
        for &x in &stream {
            sk.insert(x).expect("item in range");
            buf.push(x);
        }
        let exact = oracle_distinct(&buf) as f64;
        (sk.query() - exact).abs() / exact
    });
    let good = errors.iter().filter(|&&e| e <= eps).count();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    outcome(
        good >= 20,
        format!("{good}/30 seeds within eps = {eps} (need 20); worst relative error {worst:.3}"),
    )
}

fn exact_path(master: u64) -> Outcome {
    let results: Vec<(u64, u64)> = trials(master, 2, 1000, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = rng.random_range(1..=64);
        let eps = if rng.random_bool(0.5) { 0.5 } else { 0.25 };
        let alphabet = rng.random_range(1..=100);
        let params = DistinctParams::new(window, eps, 256).seed(seed);
        let capacity = params.small_set_capacity() as u64;
        let mut sk = DistinctSketch::new(params).expect("valid parameters");
        let mut buf = WindowBuffer::new(window);
        let (mut checks, mut wrong) = (0, 0);
        for _ in 0..rng.random_range(0..=300) {
            let x = rng.random_range(0..alphabet);
            sk.insert(x).expect("item in range");
            buf.push(x);
            let exact = oracle_distinct(&buf);
            if sk.is_exact() && exact <= capacity {
                checks += 1;
                wrong += (sk.query() != exact as f64) as u64;
            }
        }
        (checks, wrong)
    });
    let checks: u64 = results.iter().map(|r| r.0).sum();
    let wrong: u64 = results.iter().map(|r| r.1).sum();
    outcome(
        wrong == 0 && checks > 0,
        format!("{wrong} mismatches in {checks} exact-path queries over 1000 streams"),
    )
}

fn ams_merge(master: u64) -> Outcome {
    let bad: Vec<u64> = trials(master, 3, 100, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds = AmsSeeds::new(HashSeed(seed), 1 << 12).expect("valid parameters");
        let len = rng.random_range(1..=1000);
        let stream: Vec<u64> = (0..len).map(|_| rng.random_range(0..1 << 12)).collect();
        let build = |part: &[u64]| {
            let mut sk = AmsSketch::new(seeds.clone());
            part.iter().for_each(|&x| sk.update(x).expect("item in range"));
            sk
        };
        let whole = build(&stream);
        (0..10)
            .filter(|_| {
                let cut = rng.random_range(0..=stream.len());
                let merged = build(&stream[..cut]).merge(&build(&stream[cut..]));
                merged.map_or(true, |m| m.counters() != whole.counters())
            })
            .count() as u64
    });
    let bad: u64 = bad.iter().sum();
    outcome(bad == 0, format!("{bad} of 1000 merges differ from the direct sketch"))
}

fn f2_tracking(master: u64) -> Outcome {
    let ok: Vec<bool> = trials(master, 4, 30, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sk = AmsSketch::new(AmsSeeds::new(HashSeed(seed), 1 << 8).expect("valid"));
        let mut freq = vec![0i64; 1 << 8];
        let mut f2 = 0i64;
        (0..1 << 12).all(|_| {
            let x = rng.random_range(0..1u64 << 8);
            sk.update(x).expect("item in range");
            f2 += 2 * freq[x as usize] + 1;
            freq[x as usize] += 1;
            let est = sk.estimate();
            est >= f2 as f64 / 2.0 && est <= 2.0 * f2 as f64
        })
    });
    let good = ok.iter().filter(|&&b| b).count();
    outcome(
        good >= 20,
        format!("{good}/30 seeds within factor 2 at every prefix (need 20)"),
    )
}

/// One planted heavy-hitter trial: recall of every exact heavy item, and no
/// output at or below the reject threshold.
fn planted_trial(seed: u64, eps: f64, p: f64) -> (bool, bool) {
    let n = 1u64 << 10;
    let universe = 1u64 << 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heavy_item = rng.random_range(0..universe);
    let planted = Planted {
        window: n,
        heavy: vec![(heavy_item, n / 4)],
        filler: n - n / 4,
        prefix: n,
        universe,
    };
    let stream = planted.items(seed).expect("valid parameters");
    let mut state = HeavyHitterState::new(HeavyParams::new(n, eps, p, universe).seed(seed))
        .expect("valid parameters");
    let mut buf = WindowBuffer::new(n);
    for &x in &stream {
        state.insert(x).expect("item in range");
        buf.push(x);
    }
    let sets = oracle_heavy(&buf, eps, p).expect("valid parameters");
    let out = state.query_lp(eps, p).expect("valid parameters");
    let reported: HashSet<u64> = out.iter().map(|o| o.0).collect();
    let recall = sets.heavy.contains(&heavy_item) && sets.heavy.iter().all(|h| reported.contains(h));
    let clean = reported.iter().all(|&i| !sets.below_reject(buf.frequency(i)));
    (recall, clean)
}

fn heavy_hitters(master: u64) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (eps, p) in [(0.9, 2.0), (0.2, 1.0)] {
        let res: Vec<(bool, bool)> = trials(master, 5, 30, |seed| planted_trial(seed, eps, p));
        let both = res.iter().filter(|r| r.0 && r.1).count();
        let recall = res.iter().filter(|r| r.0).count();
        let clean = res.iter().filter(|r| r.1).count();
        passed &= both >= 27;
        parts.push(format!(
            "p = {p}, eps = {eps}: {both}/30 trials clean and complete (recall {recall}, no false {clean}; need 27)"
        ));
    }
    outcome(passed, parts.join("; "))
}

fn instance_bound() -> Outcome {
    let n = 1u64 << 12;
    let mut passed = true;
    let mut parts = Vec::new();
    for beta in [0.5, 0.25, 0.1] {
        let bound = 16.0 / beta * (n as f64).log2() + 2.0;
        let mut h = SmoothHistogram::new(n, beta, ExactCount::default).expect("valid parameters");
        let mut worst = 0;
        for i in 0..10_000u64 {
            h.insert(&i);
            worst = worst.max(h.len());
        }
        passed &= worst as f64 <= bound;
        parts.push(format!("beta {beta}: max {worst} <= {bound:.0}"));
    }
    outcome(passed, parts.join(", "))
}

fn counter_exhaustive() -> Outcome {
    let (n, eps, max_len) = (8u64, 0.5, 16u32);
    let mut checks = 0u64;
    let mut violations = 0u64;
    let mut worst = 0.0f64;
    let mut stack = vec![(CounterHistogram::new(n, eps).expect("valid"), 0u32, 0u64)];
    while let Some((c, t, bits)) = stack.pop() {
        if t == max_len {
            continue;
        }
        for arrived in [false, true] {
            let mut next = c.clone();
            next.observe(arrived, u64::from(t) + 1).expect("clock advances");
            let bits = bits << 1 | arrived as u64;
            let exact = (bits & ((1 << n) - 1)).count_ones() as f64;
            let err = (next.estimate() - exact).abs();
            checks += 1;
            if err > eps * exact {
                violations += 1;
            }
            if exact > 0.0 {
                worst = worst.max(err / exact);
            }
            stack.push((next, t + 1, bits));
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations over {checks} steps of all patterns up to length {max_len}; worst relative error {worst:.3}"
        ),
    )
}

fn phi_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for bins in [16u64, 1600] {
        for t in 0..=3 * bins {
            let t = t as f64;
            let back = phi(t, bins).and_then(|y| phi_inv(bins, y));
            match back {
                Ok(b) => {
                    let err = (b - t).abs() / t.max(1.0);
                    worst = worst.max(err);
                    failures += (err > 1e-9) as u32;
                }
                Err(_) => failures += 1,
            }
        }
    }
    outcome(
        failures == 0,
        format!("{failures} failures; worst scaled error {worst:.2e} (limit 1e-9)"),
    )
}

fn non_increasing_columns(height: usize, max_id: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut col = vec![0u32; height];
    fn fill(i: usize, cap: u32, col: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == col.len() {
            out.push(col.clone());
            return;
        }
        for v in 0..=cap {
            col[i] = v;
            fill(i + 1, v, col, out);
        }
    }
    fill(0, max_id, &mut col, &mut out);
    out
}

fn column_bijection() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (w, l) in [(4usize, 3u32), (6, 5)] {
        let codec = ColumnCodec::new(w, l);
        let columns = non_increasing_columns(w, l);
        let mut ranks: Vec<BigUint> = Vec::with_capacity(columns.len());
        let mut round_trip = true;
        for c in &columns {
            match codec.encode(c) {
                Ok(r) => {
                    round_trip &= codec.decode(&r).ok().as_ref() == Some(c);
                    ranks.push(r);
                }
                Err(_) => round_trip = false,
            }
        }
        ranks.sort();
        let count = codec.count();
        let expected: Vec<BigUint> = (0..columns.len() as u64).map(BigUint::from).collect();
        let ok = round_trip && ranks == expected && count == BigUint::from(columns.len());
        passed &= ok;
        parts.push(format!("(w={w}, L={l}): {} columns, range {count}", columns.len()));
    }
    outcome(passed, parts.join(", "))
}

fn rebuilt_cells(t: &LevelTable, last: &[u64], starts: &[u64]) -> Vec<u64> {
    debug_assert_eq!(last.len(), t.rows() * t.buckets());
    last.iter()
        .map(|&p| match starts.partition_point(|&s| s <= p) {
            0 => 0,
            k => starts[k - 1],
        })
        .collect()
}

fn table_rebuild(master: u64) -> Outcome {
    let bad: Vec<u64> = trials(master, 10, 100, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = rng.random_range(8..=512);
        let alphabet = rng.random_range(1..=1u64 << 10);
        let length = rng.random_range(1..=1usize << 10);
        let mut sk = DistinctSketch::new(
            DistinctParams::new(window, 0.5, 1 << 10)
                .seed(seed)
                .repetitions(3),
        )
        .expect("valid parameters");
        // Per repetition: newest position that set each cell.
        let mut last: Vec<Vec<u64>> = sk
            .tables()
            .iter()
            .map(|t| vec![0; t.rows() * t.buckets()])
            .collect();
        let mut mismatches = 0;
        for pos in 1..=length as u64 {
            let x = rng.random_range(0..alphabet);
            sk.insert(x).expect("item in range");
            for (t, l) in sk.tables().iter().zip(last.iter_mut()) {
                let b = t.bucket_of(x);
                for a in 0..=t.level_of(x) {
                    l[a * t.buckets() + b] = pos;
                }
                let want = rebuilt_cells(t, l, sk.starts());
                let same = (0..t.rows())
                    .flat_map(|a| (0..t.buckets()).map(move |b| (a, b)))
                    .all(|(a, b)| t.entry(a, b) == want[a * t.buckets() + b]);
                mismatches += !same as u64;
            }
        }
        mismatches
    });
    let failing = bad.iter().filter(|&&m| m > 0).count();
    outcome(
        failing == 0,
        format!("{failing}/100 seeds with a table differing from its rebuild"),
    )
}

/// Probe each index `i` with the window starting at its piece (expect the
/// piece to count) and right after it (expect it gone).
fn lb_trial(seed: u64, table_only: bool) -> bool {
    let (n, eps, universe) = (1u64 << 12, 0.25, 1u64 << 16);
    let layout = LbLayout::new(n, eps, seed).expect("feasible layout");
    let mut sk = DistinctSketch::new(
        DistinctParams::new(n, eps, universe)
            .seed(seed)
            .exact_small_set(!table_only),
    )
    .expect("valid parameters");
    for &x in &layout.stream {
        sk.insert(x).expect("item in range");
    }
    (1..=layout.blocks).all(|i| {
        let x_i = layout.x[i as usize - 1];
        [x_i, x_i + 1].into_iter().all(|j| {
            let start = layout.piece_start(i, j);
            let expect_in = layout.distinct_from(start) > layout.size(i);
            let mut probe = sk.clone();
            for _ in 0..layout.pad_for_start(start) {
                probe.insert(0).expect("item in range");
            }
            (probe.query() >= layout.threshold(i)) == expect_in
        })
    })
}

fn lb_blocks(master: u64) -> Outcome {
    // Cross-check the layout's staircase once against the exact window.
    let layout = LbLayout::new(1 << 12, 0.25, trial_seed(master, 11, 0)).expect("feasible");
    let mut buf = WindowBuffer::new(layout.window);
    buf.extend(layout.stream.iter().copied());
    let mut layout_ok = oracle_distinct(&buf) == layout.distinct_from(1);
    for start in 2..=layout.window {
        buf.push(0);
        layout_ok &= oracle_distinct(&buf) == layout.distinct_from(start);
    }

    let default: Vec<bool> = trials(master, 11, 15, |seed| lb_trial(seed, false));
    let table: Vec<bool> = trials(master, 11, 15, |seed| lb_trial(seed, true));
    let a = default.iter().filter(|&&b| b).count();
    let b = table.iter().filter(|&&b| b).count();
    outcome(
        layout_ok && a >= 10 && b >= 10,
        format!(
            "{a}/15 seeds decode every index (table path only: {b}/15; need 10); staircase matches oracle: {layout_ok}"
        ),
    )
}
