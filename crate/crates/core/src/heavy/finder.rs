//! Candidate finder: a CountSketch that reports items online as soon as
//! their point estimate crosses `theta` times the segment's l2 estimate.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{check_item, Result};
use crate::hashing::{make_pairwise, make_rademacher, HashSeed, KWiseHash, RademacherHash};
use crate::median;

/// Independence of the per-row sign hashes.
pub const FINDER_SIGN_INDEPENDENCE: usize = 4;

/// Row hashes shared by every finder of one heavy-hitter state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinderHashes {
    master: HashSeed,
    universe: u64,
    width: usize,
    buckets: Vec<KWiseHash>,
    signs: Vec<RademacherHash>,
}

impl FinderHashes {
    pub fn new(master: HashSeed, universe: u64, depth: usize, width: usize) -> Result<Arc<Self>> {
        let mut buckets = Vec::with_capacity(depth);
        let mut signs = Vec::with_capacity(depth);
        for row in 0..depth as u64 {
            buckets.push(make_pairwise(master.derive(2 * row), universe, width as u64)?);
            signs.push(make_rademacher(
                master.derive(2 * row + 1),
                universe,
                FINDER_SIGN_INDEPENDENCE,
            )?);
        }
        Ok(Arc::new(FinderHashes {
            master,
            universe,
            width,
            buckets,
            signs,
        }))
    }

    pub fn master(&self) -> HashSeed {
        self.master
    }

    pub fn depth(&self) -> usize {
        self.buckets.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Cell index and sign of `item` in every row.
    pub fn probe(&self, item: u64) -> Result<Probe> {
        check_item(item, self.universe)?;
        let cells = self
            .buckets
            .iter()
            .zip(&self.signs)
            .enumerate()
            .map(|(row, (b, s))| ((row * self.width) as u32 + b.hash(item) as u32, s.sign(item) as i32))
            .collect();
        Ok(Probe { item, cells })
    }
}

/// Hashed form of one item, computed once per arrival.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub item: u64,
    pub cells: Vec<(u32, i32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFinder {
    hashes: Arc<FinderHashes>,
    theta: f64,
    capacity: usize,
    table: Vec<i32>,
    candidates: HashMap<u64, f64>,
}

impl CandidateFinder {
    pub fn new(hashes: Arc<FinderHashes>, theta: f64) -> Self {
        let cells = hashes.depth() * hashes.width();
        CandidateFinder {
            capacity: (2.0 / (theta * theta)).floor().max(1.0) as usize,
            hashes,
            theta,
            table: vec![0; cells],
            candidates: HashMap::new(),
        }
    }

    pub fn hashes(&self) -> &Arc<FinderHashes> {
        &self.hashes
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Most candidates kept at once, `2 / theta^2`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn table(&self) -> &[i32] {
        &self.table
    }

    pub(crate) fn restore(&mut self, table: Vec<i32>, candidates: HashMap<u64, f64>) {
        debug_assert_eq!(table.len(), self.table.len());
        self.table = table;
        self.candidates = candidates;
    }

    /// Add one arrival; `l2` is the current l2 estimate of the segment.
    /// Returns true when the item is (now) reported.
    pub fn update(&mut self, probe: &Probe, l2: f64) -> bool {
        for &(cell, sign) in &probe.cells {
            self.table[cell as usize] += sign;
        }
        let est = self.point_estimate(probe);
        if let Some(e) = self.candidates.get_mut(&probe.item) {
            *e = est;
            return true;
        }
        if est < self.theta * l2 {
            return false;
        }
        self.candidates.insert(probe.item, est);
        if self.candidates.len() > self.capacity {
            self.prune();
        }
        self.candidates.contains_key(&probe.item)
    }

    fn prune(&mut self) {
        let mut all: Vec<(u64, f64)> = self.candidates.drain().collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(self.capacity);
        self.candidates = all.into_iter().collect();
    }

    /// Median over rows of the signed counter reads.
    pub fn point_estimate(&self, probe: &Probe) -> f64 {
        let mut reads: Vec<f64> = probe
            .cells
            .iter()
            .map(|&(cell, sign)| f64::from(self.table[cell as usize] * sign))
            .collect();
        median(&mut reads)
    }

    pub fn point_estimate_of(&self, item: u64) -> Result<f64> {
        Ok(self.point_estimate(&self.hashes.probe(item)?))
    }

    pub fn is_candidate(&self, item: u64) -> bool {
        self.candidates.contains_key(&item)
    }

    /// Reported items with their estimates, ordered by item.
    pub fn report(&self) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = self.candidates.iter().map(|(&i, &e)| (i, e)).collect();
        out.sort_by_key(|e| e.0);
        out
    }
}
