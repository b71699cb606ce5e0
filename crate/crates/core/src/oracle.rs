//! Exact answers from the full window, for testing the sketches.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::error::{invalid, Result};

/// The last `n` arrivals, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBuffer {
    window: u64,
    items: VecDeque<u64>,
}

impl WindowBuffer {
    pub fn new(window: u64) -> Self {
        WindowBuffer {
            window,
            items: VecDeque::new(),
        }
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn push(&mut self, item: u64) {
        self.items.push_back(item);
        if self.items.len() as u64 > self.window {
            self.items.pop_front();
        }
    }

    pub fn items(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.items.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn frequencies(&self) -> HashMap<u64, u64> {
        let mut f = HashMap::new();
        for x in self.items() {
            *f.entry(x).or_insert(0) += 1;
        }
        f
    }

    pub fn frequency(&self, item: u64) -> u64 {
        self.items().filter(|&x| x == item).count() as u64
    }
}

impl Extend<u64> for WindowBuffer {
    fn extend<I: IntoIterator<Item = u64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

pub fn oracle_distinct(buf: &WindowBuffer) -> u64 {
    buf.items().collect::<HashSet<_>>().len() as u64
}

/// Distinct count by sorting; independent of [`oracle_distinct`].
pub fn oracle_distinct_scan(buf: &WindowBuffer) -> u64 {
    let mut v: Vec<u64> = buf.items().collect();
    v.sort_unstable();
    v.dedup();
    v.len() as u64
}

/// `F_p` and `l_p = F_p^(1/p)` of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub fp: f64,
    pub lp: f64,
}

fn moment_from(freqs: impl Iterator<Item = u64>, p: f64) -> Result<Moment> {
    if !(p > 0.0) {
        return Err(invalid(format!("p must be positive, got {p}")));
    }
    let fp: f64 = freqs.map(|f| (f as f64).powf(p)).sum();
    Ok(Moment {
        fp,
        lp: fp.powf(1.0 / p),
    })
}

pub fn oracle_fp(buf: &WindowBuffer, p: f64) -> Result<Moment> {
    moment_from(buf.frequencies().into_values(), p)
}

/// `F_p` from run lengths of the sorted window.
pub fn oracle_fp_scan(buf: &WindowBuffer, p: f64) -> Result<Moment> {
    let mut v: Vec<u64> = buf.items().collect();
    v.sort_unstable();
    let runs = v.chunk_by(|a, b| a == b).map(|r| r.len() as u64);
    moment_from(runs, p)
}

/// Items above the heavy threshold and items at or below the reject
/// threshold, for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavySets {
    /// `eps * l_p`.
    pub heavy_threshold: f64,
    /// `(eps / 12) * l_p`.
    pub light_threshold: f64,
    /// `{i : f_i >= eps * l_p}`.
    pub heavy: BTreeSet<u64>,
    /// `{i in window : f_i <= (eps / 12) * l_p}`.
    pub light: BTreeSet<u64>,
}

impl HeavySets {
    /// True when an item of window frequency `f` must not be reported.
    pub fn below_reject(&self, f: u64) -> bool {
        f as f64 <= self.light_threshold
    }
}

pub fn oracle_heavy(buf: &WindowBuffer, epsilon: f64, p: f64) -> Result<HeavySets> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    let freqs = buf.frequencies();
    let m = moment_from(freqs.values().copied(), p)?;
    let heavy_threshold = epsilon * m.lp;
    let light_threshold = epsilon / 12.0 * m.lp;
    let mut heavy = BTreeSet::new();
    let mut light = BTreeSet::new();
    for (&item, &f) in &freqs {
        let f = f as f64;
        if f >= heavy_threshold {
            heavy.insert(item);
        }
        if f <= light_threshold {
            light.insert(item);
        }
    }
    Ok(HeavySets {
        heavy_threshold,
        light_threshold,
        heavy,
        light,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(items: &[u64]) -> WindowBuffer {
        let mut b = WindowBuffer::new(items.len().max(1) as u64);
        b.extend(items.iter().copied());
        b
    }

    #[test]
    fn distinct_examples() {
        assert_eq!(oracle_distinct(&WindowBuffer::new(4)), 0);
        assert_eq!(oracle_distinct(&buf(&[5, 5, 5])), 1);
    }

    #[test]
    fn window_drops_oldest() {
        let mut b = WindowBuffer::new(3);
        b.extend([1, 2, 3, 4]);
        assert_eq!(b.items().collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn moments() {
        let b = buf(&[1, 1, 2]);
        assert_eq!(oracle_fp(&b, 2.0).unwrap().fp, 5.0);
        assert_eq!(oracle_fp(&b, 1.0).unwrap().fp, 3.0);
        assert!(oracle_fp(&b, 0.0).is_err());
    }

    #[test]
    fn heavy_examples() {
        let sets = oracle_heavy(&buf(&[9; 10]), 1.0, 2.0).unwrap();
        assert_eq!(sets.heavy.into_iter().collect::<Vec<_>>(), vec![9]);

        let distinct: Vec<u64> = (0..100).collect();
        let sets = oracle_heavy(&buf(&distinct), 0.2, 2.0).unwrap();
        assert!(sets.heavy.is_empty());

        let mut planted = vec![7u64; 256];
        planted.extend(1000..1768);
        let sets = oracle_heavy(&buf(&planted), 0.9, 2.0).unwrap();
        let l2 = (256.0f64 * 256.0 + 768.0).sqrt();
        assert!((sets.heavy_threshold - 0.9 * l2).abs() < 1e-9);
        assert!((sets.light_threshold - 0.075 * l2).abs() < 1e-9);
        assert_eq!(sets.heavy.into_iter().collect::<Vec<_>>(), vec![7]);
        assert_eq!(sets.light.len(), 768);
    }
}
