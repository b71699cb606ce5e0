use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidewin_core::distinct::{DistinctParams, DistinctSketch, LevelTable};
use slidewin_core::oracle::{oracle_distinct, WindowBuffer};

fn table_path(window: u64, eps: f64, universe: u64, reps: usize, seed: u64) -> DistinctSketch {
    DistinctSketch::new(
        DistinctParams::new(window, eps, universe)
            .seed(seed)
            .repetitions(reps)
            .exact_small_set(false),
    )
    .unwrap()
}

fn columns_non_increasing(t: &LevelTable) -> bool {
    (0..t.buckets()).all(|b| t.column(b).windows(2).all(|w| w[0] >= w[1]))
}

#[test]
fn columns_stay_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sk = table_path(1 << 12, 0.25, 1 << 16, 3, 1);
    for i in 0..10_000 {
        sk.insert(rng.random_range(0..1 << 16)).unwrap();
        if i % 50 == 0 {
            assert!(sk.tables().iter().all(columns_non_increasing));
        }
    }
    assert!(sk.tables().iter().all(columns_non_increasing));
}

/// Table rebuilt from the stream history and the surviving instance starts.
fn rebuilt(t: &LevelTable, history: &[u64], starts: &[u64]) -> Vec<u64> {
    let mut last = vec![0u64; t.rows() * t.buckets()];
    for (pos, &x) in history.iter().enumerate() {
        let b = t.bucket_of(x);
        for a in 0..=t.level_of(x) {
            last[a * t.buckets() + b] = pos as u64 + 1;
        }
    }
    last.into_iter()
        .map(|p| match starts.partition_point(|&s| s <= p) {
            0 => 0,
            k => starts[k - 1],
        })
        .collect()
}

#[test]
fn table_equals_rebuild_from_surviving_starts() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = rng.random_range(16..256);
        let mut sk = table_path(window, 0.5, 1 << 10, 3, seed);
        let alphabet = rng.random_range(1..1 << 10);
        let mut history = Vec::new();
        for _ in 0..1 << 10 {
            let x = rng.random_range(0..alphabet);
            history.push(x);
            sk.insert(x).unwrap();
            for t in sk.tables() {
                let want = rebuilt(t, &history, sk.starts());
                let got: Vec<u64> = (0..t.rows())
                    .flat_map(|a| (0..t.buckets()).map(move |b| (a, b)))
                    .map(|(a, b)| t.entry(a, b))
                    .collect();
                assert_eq!(got, want, "seed {seed}");
            }
        }
    }
}

#[test]
fn level_occupancy_matches_definition() {
    // No expiry: instance 1 sees the whole stream.
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sk = table_path(1 << 20, 0.5, 1 << 10, 1, seed);
        let mut set = HashSet::new();
        for _ in 0..600 {
            let x = rng.random_range(0..1 << 10);
            set.insert(x);
            sk.insert(x).unwrap();
        }
        let t = &sk.tables()[0];
        for k in 0..t.rows() {
            let direct: HashSet<usize> = set
                .iter()
                .filter(|&&s| t.level_of(s) >= k)
                .map(|&s| t.bucket_of(s))
                .collect();
            assert_eq!(t.occupancy(0, k) as usize, direct.len());
            // Occupancy counts are monotone across instance IDs.
            let occ = t.suffix_occupancy(k);
            assert!(occ.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

/// `3n` arrivals whose final window holds exactly `distinct` items.
fn planted_stream(n: usize, distinct: usize, universe: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut ids: Vec<u64> = (0..universe).collect();
    ids.shuffle(rng);
    let (inside, outside) = ids.split_at(distinct);
    let mut window: Vec<u64> = inside.to_vec();
    while window.len() < n {
        window.push(inside[rng.random_range(0..distinct)]);
    }
    window.shuffle(rng);
    let mut stream: Vec<u64> = (0..2 * n)
        .map(|_| outside[rng.random_range(0..outside.len())])
        .collect();
    stream.extend(window);
    stream
}

#[test]
fn accuracy_on_planted_windows() {
    let (n, eps) = (1usize << 12, 0.25);
    let mut good = 0;
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let stream = planted_stream(n, 1 << 10, 1 << 16, &mut rng);
        let mut sk = DistinctSketch::new(
            DistinctParams::new(n as u64, eps, 1 << 16)
                .seed(seed)
                .repetitions(7),
        )
        .unwrap();
        let mut buf = WindowBuffer::new(n as u64);
        for &x in &stream {
            sk.insert(x).unwrap();
            buf.push(x);
        }
        let exact = oracle_distinct(&buf) as f64;
        assert_eq!(exact, 1024.0);
        if (sk.query() - exact).abs() <= eps * exact {
            good += 1;
        }
    }
    assert!(good >= 20, "{good}/30 within eps");
}

#[test]
fn exact_path_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let window = rng.random_range(1..40);
        let mut sk = DistinctSketch::new(DistinctParams::new(window, 0.5, 64)).unwrap();
        let mut buf = WindowBuffer::new(window);
        for _ in 0..rng.random_range(0..120) {
            let x = rng.random_range(0..20);
            sk.insert(x).unwrap();
            buf.push(x);
            if sk.is_exact() {
                assert_eq!(sk.query(), oracle_distinct(&buf) as f64);
            }
        }
    }
}

#[test]
fn expired_window_queries_zero_on_exact_path() {
    let mut sk = DistinctSketch::new(DistinctParams::new(4, 0.5, 64)).unwrap();
    for x in [1, 2, 3] {
        sk.insert(x).unwrap();
    }
    assert_eq!(sk.query(), 3.0);
}

#[test]
fn serialization_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for state in 0..100 {
        let window = rng.random_range(1..200);
        let mut sk = table_path(window, 0.5, 1 << 10, 3, state);
        for _ in 0..rng.random_range(0..400) {
            sk.insert(rng.random_range(0..1 << 10)).unwrap();
        }
        let snap = sk.snapshot();
        let bytes = snap.to_bytes().unwrap();
        assert_eq!(DistinctSketch::deserialize_table(&bytes).unwrap(), snap);
    }
}
