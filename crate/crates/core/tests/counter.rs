use std::collections::HashSet;

use slidewin_core::counter::CounterHistogram;

/// Walks every arrival pattern of length up to `max_len`, checking the
/// estimate at each step. States already reached at a shallower depth are
/// not expanded again, so long patterns stay tractable.
fn exhaustive(window: u64, eps: f64, max_len: u64) -> usize {
    let mut seen: HashSet<(Vec<(u64, u64)>, u64)> = HashSet::new();
    let mut stack = vec![(CounterHistogram::new(window, eps).unwrap(), 0u64, Vec::<bool>::new())];
    let mut checked = 0;
    while let Some((c, t, pattern)) = stack.pop() {
        if t == max_len {
            continue;
        }
        for arrived in [false, true] {
            let mut next = c.clone();
            next.observe(arrived, t + 1).unwrap();
            let mut p = pattern.clone();
            p.push(arrived);
            let exact = p.iter().rev().take(window as usize).filter(|&&a| a).count() as f64;
            let est = next.estimate();
            assert!(
                (est - exact).abs() <= eps * exact,
                "pattern {p:?}: estimate {est}, exact {exact}"
            );
            assert!(next.bucket_count() <= next.bucket_cap());
            assert!(next.is_canonical());
            checked += 1;

            // Canonical state: buckets relative to the clock plus the
            // arrivals still in the window.
            let rel: Vec<(u64, u64)> = next.buckets().map(|b| (t + 1 - b.newest, b.size)).collect();
            let bits = p
                .iter()
                .rev()
                .take(window as usize)
                .fold(0u64, |acc, &a| acc << 1 | a as u64);
            let mut key = rel;
            key.push((u64::MAX, bits));
            if seen.insert((key, t + 1)) {
                p.drain(..p.len().saturating_sub(window as usize));
                stack.push((next, t + 1, p));
            }
        }
    }
    checked
}

#[test]
fn deterministic_guarantee_up_to_32_arrivals() {
    assert!(exhaustive(8, 0.5, 32) > 0);
}

#[test]
fn deterministic_guarantee_other_accuracies() {
    for eps in [1.0, 0.34, 0.25] {
        exhaustive(8, eps, 20);
    }
}

#[test]
fn count_four_in_window() {
    let mut c = CounterHistogram::new(8, 0.5).unwrap();
    for (t, a) in [true, false, true, true, false, false, true, false].into_iter().enumerate() {
        c.observe(a, t as u64 + 1).unwrap();
    }
    let e = c.estimate();
    assert!((2.0..=6.0).contains(&e), "{e}");
}

#[test]
fn bucket_cap_on_long_runs() {
    for eps in [0.5, 0.1] {
        let mut c = CounterHistogram::new(1 << 10, eps).unwrap();
        for t in 1..20_000 {
            c.observe(t % 3 != 0, t).unwrap();
            assert!(c.bucket_count() <= c.bucket_cap());
        }
    }
}
