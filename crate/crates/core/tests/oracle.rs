use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidewin_core::oracle::{
    oracle_distinct, oracle_distinct_scan, oracle_fp, oracle_fp_scan, WindowBuffer,
};

#[test]
fn independent_implementations_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let window = rng.random_range(1..300);
        let mut buf = WindowBuffer::new(window);
        let alphabet = rng.random_range(1..200);
        buf.extend((0..rng.random_range(0..500)).map(|_| rng.random_range(0..alphabet)));
        assert!(buf.len() as u64 <= window);
        assert_eq!(oracle_distinct(&buf), oracle_distinct_scan(&buf));
        for p in [0.5, 1.0, 1.5, 2.0] {
            let a = oracle_fp(&buf, p).unwrap();
            let b = oracle_fp_scan(&buf, p).unwrap();
            assert!((a.fp - b.fp).abs() <= 1e-9 * a.fp.max(1.0));
        }
        assert_eq!(oracle_fp(&buf, 1.0).unwrap().fp, buf.len() as f64);
    }
}

#[test]
fn distinct_matches_set_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut buf = WindowBuffer::new(1 << 10);
    let draws: Vec<u64> = (0..1 << 10).map(|_| rng.random_range(0..1 << 8)).collect();
    buf.extend(draws.iter().copied());
    assert_eq!(oracle_distinct(&buf), draws.iter().collect::<BTreeSet<_>>().len() as u64);
}

#[test]
fn f2_is_sum_of_squared_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let mut buf = WindowBuffer::new(200);
        buf.extend((0..200).map(|_| rng.random_range(0..30)));
        let sq: u64 = buf.frequencies().values().map(|f| f * f).sum();
        assert_eq!(oracle_fp(&buf, 2.0).unwrap().fp, sq as f64);
    }
}
