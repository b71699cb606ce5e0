//! The shared level table.
//!
//! One `rows x buckets` table encodes the bucket bitmaps of every live suffix
//! instance at once. Row `a` holds `h2(S_a)` where `S_a` are the items whose
//! level hash has at least `a` trailing zeros. Because a newer suffix is a
//! subset of an older one, each cell only stores the ID of the newest
//! instance whose bitmap has that bit set; instance `i` sees the bit iff the
//! cell holds an ID `>= i`. IDs are the instance start positions, 0 means
//! the bit is set in no live instance.

use crate::error::Result;
use crate::hashing::{lsb, make_level_hash, make_pairwise, HashSeed, KWiseHash};

use super::phi::phi_inv;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Owner {
    id: u64,
    cells: Vec<u32>,
    per_level: Vec<u32>,
}

/// Level table for one repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    rows: usize,
    buckets: usize,
    level_hash: KWiseHash,
    bucket_hash: KWiseHash,
    cells: Vec<u64>,
    // Index of each cell inside its owner's `cells`.
    slot: Vec<u32>,
    owners: Vec<Owner>,
}

impl LevelTable {
    pub fn new(seed: HashSeed, universe: u64, buckets: usize) -> Result<Self> {
        let level_hash = make_level_hash(seed.derive(0), universe)?;
        let bucket_hash = make_pairwise(seed.derive(1), universe, buckets as u64)?;
        let rows = level_hash.range().trailing_zeros() as usize + 1;
        Ok(LevelTable {
            rows,
            buckets,
            level_hash,
            bucket_hash,
            cells: vec![0; rows * buckets],
            slot: vec![0; rows * buckets],
            owners: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    /// Live instance IDs, oldest first.
    pub fn ids(&self) -> Vec<u64> {
        self.owners.iter().map(|o| o.id).collect()
    }

    pub fn level_hash(&self) -> &KWiseHash {
        &self.level_hash
    }

    pub fn bucket_hash(&self) -> &KWiseHash {
        &self.bucket_hash
    }

    /// Deepest row an item reaches: `lsb(h(item))`.
    pub fn level_of(&self, item: u64) -> usize {
        let width = (self.rows - 1) as u32;
        let v = self.level_hash.hash(item);
        if width == 0 {
            0
        } else {
            lsb(v, width).expect("level hash output fits its width") as usize
        }
    }

    pub fn bucket_of(&self, item: u64) -> usize {
        self.bucket_hash.hash(item) as usize
    }

    pub fn entry(&self, row: usize, bucket: usize) -> u64 {
        self.cells[row * self.buckets + bucket]
    }

    /// Column `bucket`, top row first.
    pub fn column(&self, bucket: usize) -> Vec<u64> {
        (0..self.rows).map(|a| self.entry(a, bucket)).collect()
    }

    fn owner_index(&self, id: u64) -> usize {
        self.owners
            .binary_search_by_key(&id, |o| o.id)
            .expect("table entry refers to a live instance")
    }

    /// Start a new (newest) instance.
    pub fn push_instance(&mut self, id: u64) {
        debug_assert!(self.owners.last().map_or(true, |o| o.id < id));
        self.owners.push(Owner {
            id,
            cells: Vec::new(),
            per_level: vec![0; self.rows],
        });
    }

    /// Set the item's cells on every row it reaches to the newest instance.
    pub fn record(&mut self, item: u64) {
        let newest = self.owners.len() - 1;
        let newest_id = self.owners[newest].id;
        let bucket = self.bucket_of(item);
        for row in 0..=self.level_of(item) {
            let cell = row * self.buckets + bucket;
            let old = self.cells[cell];
            if old == newest_id {
                continue;
            }
            if old != 0 {
                let o = self.owner_index(old);
                self.detach(o, cell, row);
            }
            self.cells[cell] = newest_id;
            let owner = &mut self.owners[newest];
            self.slot[cell] = owner.cells.len() as u32;
            owner.cells.push(cell as u32);
            owner.per_level[row] += 1;
        }
    }

    fn detach(&mut self, owner: usize, cell: usize, row: usize) {
        let o = &mut self.owners[owner];
        let pos = self.slot[cell] as usize;
        o.cells.swap_remove(pos);
        if let Some(&moved) = o.cells.get(pos) {
            self.slot[moved as usize] = pos as u32;
        }
        o.per_level[row] -= 1;
    }

    /// Delete interior instance `index`; its bits now belong to the nearest
    /// surviving older instance.
    pub fn merge_into_previous(&mut self, index: usize) {
        assert!(index >= 1 && index < self.owners.len());
        let gone = self.owners.remove(index);
        let target = &mut self.owners[index - 1];
        for &cell in &gone.cells {
            self.cells[cell as usize] = target.id;
            self.slot[cell as usize] = target.cells.len() as u32;
            target.cells.push(cell);
        }
        for (acc, n) in target.per_level.iter_mut().zip(&gone.per_level) {
            *acc += n;
        }
    }

    /// Drop the oldest instance; bits only it held are cleared.
    pub fn expire_oldest(&mut self) {
        let gone = self.owners.remove(0);
        for &cell in &gone.cells {
            self.cells[cell as usize] = 0;
        }
    }

    /// `#{b : T[row][b] >= id of instance index}`, for every instance.
    pub fn suffix_occupancy(&self, row: usize) -> Vec<u32> {
        let mut out = vec![0; self.owners.len()];
        let mut acc = 0;
        for (i, o) in self.owners.iter().enumerate().rev() {
            acc += o.per_level[row];
            out[i] = acc;
        }
        out
    }

    /// Occupancy of row `row` as seen by instance `index`.
    pub fn occupancy(&self, index: usize, row: usize) -> u32 {
        self.owners[index..].iter().map(|o| o.per_level[row]).sum()
    }

    /// Level-sampled estimate for every live instance: pick the shallowest
    /// row whose occupancy is at most `B / 4` and de-bias it with `phi_inv`.
    pub fn estimates(&self) -> Vec<f64> {
        let n = self.owners.len();
        let mut out = vec![f64::NAN; n];
        let mut pending = n;
        let limit = self.buckets as f64 / 4.0;
        for row in 0..self.rows {
            if pending == 0 {
                break;
            }
            let occ = self.suffix_occupancy(row);
            let last = row + 1 == self.rows;
            for i in 0..n {
                if out[i].is_nan() && (f64::from(occ[i]) <= limit || last) {
                    out[i] = self.scaled(row, occ[i]);
                    pending -= 1;
                }
            }
        }
        out
    }

    /// Estimate for one instance.
    pub fn estimate(&self, index: usize) -> f64 {
        let limit = self.buckets as f64 / 4.0;
        for row in 0..self.rows {
            let occ = self.occupancy(index, row);
            if f64::from(occ) <= limit || row + 1 == self.rows {
                return self.scaled(row, occ);
            }
        }
        0.0
    }

    fn scaled(&self, row: usize, occ: u32) -> f64 {
        // The last row can in principle saturate; keep phi_inv in its domain.
        let occ = occ.min(self.buckets as u32 - 1);
        let balls = phi_inv(self.buckets as u64, f64::from(occ)).expect("occupancy below B");
        balls * (1u64 << row) as f64
    }

    /// Cells rewritten as 1-based ranks of their instance (0 = empty).
    pub fn ranked_cells(&self) -> Vec<u32> {
        self.cells
            .iter()
            .map(|&id| {
                if id == 0 {
                    0
                } else {
                    self.owner_index(id) as u32 + 1
                }
            })
            .collect()
    }

    /// Internal bookkeeping matches the cell contents.
    #[doc(hidden)]
    pub fn check_consistency(&self) -> bool {
        let mut per_level = vec![vec![0u32; self.rows]; self.owners.len()];
        for (cell, &id) in self.cells.iter().enumerate() {
            if id == 0 {
                continue;
            }
            let Ok(o) = self.owners.binary_search_by_key(&id, |o| o.id) else {
                return false;
            };
            let owner = &self.owners[o];
            if owner.cells.get(self.slot[cell] as usize) != Some(&(cell as u32)) {
                return false;
            }
            per_level[o][cell / self.buckets] += 1;
        }
        self.owners
            .iter()
            .zip(&per_level)
            .all(|(o, p)| &o.per_level == p && o.cells.len() as u32 == p.iter().sum::<u32>())
    }
}
