use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidewin_core::heavy::{CandidateFinder, FinderHashes, HeavyHitterState, HeavyParams};
use slidewin_core::oracle::{oracle_heavy, WindowBuffer};
use slidewin_core::HashSeed;

const UNIVERSE: u64 = 1 << 16;

/// `n` filler arrivals, then a window of `heavy` copies of item 0 mixed with
/// `n - heavy` distinct singletons.
fn planted(n: usize, heavy: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut ids: Vec<u64> = (1..UNIVERSE).collect();
    ids.shuffle(rng);
    let mut window = vec![0u64; heavy];
    window.extend_from_slice(&ids[..n - heavy]);
    window.shuffle(rng);
    let mut stream: Vec<u64> = (0..n).map(|_| rng.random_range(1..UNIVERSE)).collect();
    stream.extend(window);
    stream
}

fn run(params: HeavyParams, stream: &[u64]) -> (HeavyHitterState, WindowBuffer) {
    let mut s = HeavyHitterState::new(params.clone()).unwrap();
    let mut buf = WindowBuffer::new(params.window);
    for &x in stream {
        s.insert(x).unwrap();
        buf.push(x);
    }
    (s, buf)
}

#[test]
fn planted_l2_accept_and_reject() {
    let n = 1 << 10;
    let mut good = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stream = planted(n, 256, &mut rng);
        let (s, buf) = run(HeavyParams::new(n as u64, 0.9, 2.0, UNIVERSE).seed(seed), &stream);
        let sets = oracle_heavy(&buf, 0.9, 2.0).unwrap();
        let out = s.query_l2(0.9).unwrap();
        let recalled = sets.heavy.iter().all(|h| out.iter().any(|o| o.0 == *h));
        let clean = out.iter().all(|o| !sets.below_reject(buf.frequency(o.0)));
        good += (recalled && clean) as usize;
    }
    assert!(good >= 9, "{good}/10");
}

#[test]
fn planted_l1_via_lp() {
    let n = 1 << 10;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let stream = planted(n, n / 4, &mut rng);
    let (s, buf) = run(HeavyParams::new(n as u64, 0.2, 1.0, UNIVERSE).seed(3), &stream);
    let sets = oracle_heavy(&buf, 0.2, 1.0).unwrap();
    assert!(sets.heavy.contains(&0));
    let out = s.query_lp(0.2, 1.0).unwrap();
    assert!(out.iter().any(|o| o.0 == 0));
}

#[test]
fn counted_items_are_not_underestimated_by_half() {
    // Every arrival of the heavy item is inside the window and counted.
    let n = 1 << 9;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stream = planted(n, 128, &mut rng);
    let (s, buf) = run(HeavyParams::new(n as u64, 0.9, 2.0, UNIVERSE).seed(4), &stream);
    let exact = buf.frequency(0) as f64;
    let est = s.registry()[&0].counter.estimate_at(s.clock());
    assert!(est >= exact / 2.0 && est <= 1.5 * exact, "{est} vs {exact}");
}

#[test]
fn instances_and_finders_stay_paired_and_bounded() {
    let n = 1u64 << 10;
    let mut s = HeavyHitterState::new(HeavyParams::new(n, 0.9, 2.0, UNIVERSE).seed(1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0;
    for _ in 0..3 * n {
        s.insert(rng.random_range(0..64)).unwrap();
        worst = worst.max(s.instance_count());
        assert!(s.registry().len() <= s.registry_cap());
    }
    // Window F2 is at most n^2, and every second instance shrinks the
    // estimate by the compaction factor.
    let gamma: f64 = 0.875;
    let bound = 2.0 * ((n * n) as f64).ln() / (1.0 / gamma).ln() + 4.0;
    assert!((worst as f64) <= bound, "{worst} > {bound}");
    assert!(worst <= 16 * 10 + 2, "{worst} instances");
}

#[test]
fn same_seed_same_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let stream: Vec<u64> = (0..2000).map(|_| rng.random_range(0..300)).collect();
    let p = HeavyParams::new(256, 0.5, 1.5, 512).seed(8);
    let (a, _) = run(p.clone(), &stream);
    let (b, _) = run(p, &stream);
    assert_eq!(a.query().unwrap(), b.query().unwrap());
    assert_eq!(a.to_bytes(), b.to_bytes());
}

fn segment_l2(freq: &HashMap<u64, i64>) -> f64 {
    (freq.values().map(|&f| (f * f) as f64).sum::<f64>()).sqrt()
}

#[test]
fn finder_reports_planted_item() {
    let theta: f64 = 0.9 / 16.0;
    let width = (8.0 / (theta * theta)).ceil() as usize;
    let depth = 48;
    let len = 1usize << 12;
    // Smallest frequency that is theta-heavy among singletons.
    let f = (1..).find(|&f: &usize| {
        let l2 = ((f * f + len - f) as f64).sqrt();
        f as f64 >= theta * l2
    });
    let f = f.unwrap();
    let mut hits = 0;
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hashes = FinderHashes::new(HashSeed(seed), UNIVERSE, depth, width).unwrap();
        let ams = slidewin_core::f2::AmsSeeds::new(HashSeed(seed + 99), UNIVERSE).unwrap();
        let mut l2 = slidewin_core::AmsSketch::new(ams);
        let mut finder = CandidateFinder::new(hashes.clone(), theta);
        let mut ids: Vec<u64> = (1..UNIVERSE).collect();
        ids.shuffle(&mut rng);
        let mut seg = vec![0u64; f];
        seg.extend_from_slice(&ids[..len - f]);
        seg.shuffle(&mut rng);
        for &x in &seg {
            l2.update(x).unwrap();
            finder.update(&hashes.probe(x).unwrap(), l2.estimate().sqrt());
        }
        hits += finder.is_candidate(0) as usize;
    }
    assert!(hits >= 27, "{hits}/30 with f = {f}");
}

#[test]
fn finder_tail_guarantee() {
    let theta: f64 = 0.05;
    let width = (8.0 / (theta * theta)).ceil() as usize;
    let depth = (4.0 * 12.0f64).ceil() as usize;
    let k = (1.0 / (theta * theta)).floor() as usize;
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let hashes = FinderHashes::new(HashSeed(seed), UNIVERSE, depth, width).unwrap();
        let mut finder = CandidateFinder::new(hashes.clone(), theta);
        let mut freq: HashMap<u64, i64> = HashMap::new();
        for _ in 0..1 << 12 {
            // Skewed: low ids are much more frequent.
            let x = (rng.random_range(0.0f64..1.0).powi(3) * 2000.0) as u64;
            *freq.entry(x).or_default() += 1;
            finder.update(&hashes.probe(x).unwrap(), segment_l2(&freq));
        }
        let mut sorted: Vec<i64> = freq.values().copied().collect();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let tail: i64 = sorted.iter().skip(k).sum();
        for (&x, &f) in &freq {
            let err = (finder.point_estimate_of(x).unwrap() - f as f64).abs();
            assert!(err <= theta * tail as f64, "seed {seed}: item {x} off by {err}, tail {tail}");
        }
    }
}
