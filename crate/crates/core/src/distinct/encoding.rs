//! Compact encoding of level-table columns and the table wire format.
//!
//! A column read top to bottom is non-increasing in instance rank, so a
//! column of height `w` over ranks `0..=L` is a multiset of size `w` drawn
//! from `L + 1` values. There are `C(w + L, L)` of them; each column is
//! stored as its index in the colexicographic order of those multisets.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{invalid, Result, SketchError};
use crate::wire::Reader;

pub const TABLE_MAGIC: &[u8; 4] = b"CHDE";
pub const TABLE_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 2 + 1 + 8;

/// Ranks and unranks monotone columns of a fixed shape.
#[derive(Debug, Clone)]
pub struct ColumnCodec {
    height: usize,
    max_id: u32,
    // binom[n][k] for n <= height + max_id, k <= height
    binom: Vec<Vec<BigUint>>,
}

impl ColumnCodec {
    pub fn new(height: usize, max_id: u32) -> Self {
        let n_max = height + max_id as usize;
        let mut binom = vec![vec![BigUint::zero(); height + 1]; n_max + 1];
        for n in 0..=n_max {
            binom[n][0] = BigUint::one();
            for k in 1..=height.min(n) {
                binom[n][k] = &binom[n - 1][k - 1]
                    + if k <= n - 1 {
                        binom[n - 1][k].clone()
                    } else {
                        BigUint::zero()
                    };
            }
        }
        ColumnCodec {
            height,
            max_id,
            binom,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_id(&self) -> u32 {
        self.max_id
    }

    /// Number of valid columns, `C(height + max_id, max_id)`.
    pub fn count(&self) -> BigUint {
        self.binom[self.height + self.max_id as usize][self.height].clone()
    }

    /// Bytes needed for any rank of this shape.
    pub fn rank_bytes(&self) -> usize {
        let top = self.count() - BigUint::one();
        (top.bits() as usize).div_ceil(8)
    }

    fn c(&self, n: usize, k: usize) -> &BigUint {
        &self.binom[n][k]
    }

    pub fn encode(&self, column: &[u32]) -> Result<BigUint> {
        if column.len() != self.height {
            return Err(invalid(format!(
                "column height {} != {}",
                column.len(),
                self.height
            )));
        }
        if column.iter().any(|&v| v > self.max_id) {
            return Err(SketchError::Domain(format!(
                "column entry exceeds max id {}",
                self.max_id
            )));
        }
        if column.windows(2).any(|w| w[0] < w[1]) {
            return Err(SketchError::NonMonotoneColumn);
        }
        let mut rank = BigUint::zero();
        // Bottom row first gives a non-decreasing sequence d_i; e_i = d_i + i
        // is strictly increasing and ranks as a subset.
        for (i, &d) in column.iter().rev().enumerate() {
            rank += self.c(d as usize + i, i + 1);
        }
        Ok(rank)
    }

    pub fn decode(&self, rank: &BigUint) -> Result<Vec<u32>> {
        if rank >= &self.count() {
            return Err(SketchError::Decode(format!(
                "column rank {rank} out of range"
            )));
        }
        let mut r = rank.clone();
        let mut d = vec![0u32; self.height];
        for i in (0..self.height).rev() {
            // Largest e in [i, i + max_id] with C(e, i + 1) <= r.
            let mut e = i;
            while e < i + self.max_id as usize && self.c(e + 1, i + 1) <= &r {
                e += 1;
            }
            r -= self.c(e, i + 1);
            d[i] = (e - i) as u32;
        }
        d.reverse();
        Ok(d)
    }
}

/// Rank of a monotone column in `[0, C(w + L, L))`.
pub fn encode_column(column: &[u32], max_id: u32) -> Result<BigUint> {
    ColumnCodec::new(column.len(), max_id).encode(column)
}

pub fn decode_column(rank: &BigUint, height: usize, max_id: u32) -> Result<Vec<u32>> {
    ColumnCodec::new(height, max_id).decode(rank)
}

/// Serializable view of the level tables: instance starts plus, per
/// repetition, every cell as a 1-based instance rank (0 = empty), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSnapshot {
    pub rows: u8,
    pub buckets: u32,
    pub window: u64,
    pub starts: Vec<u64>,
    pub repetitions: Vec<Vec<u32>>,
}

impl TableSnapshot {
    fn max_id(&self) -> u32 {
        self.starts.len() as u32
    }

    /// Length of [`Self::to_bytes`] without building the payload.
    pub fn encoded_len(&self) -> usize {
        let mut len = HEADER_LEN + 8 * self.starts.len();
        if !self.starts.is_empty() {
            let width = ColumnCodec::new(self.rows as usize, self.max_id()).rank_bytes();
            len += self.repetitions.len() * (4 + self.buckets as usize * width);
        }
        len
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let l = u16::try_from(self.starts.len())
            .map_err(|_| invalid("too many live instances for the table header"))?;
        let r = u8::try_from(self.repetitions.len())
            .map_err(|_| invalid("too many repetitions for the table header"))?;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(TABLE_MAGIC);
        out.push(TABLE_VERSION);
        out.push(self.rows);
        out.extend_from_slice(&self.buckets.to_le_bytes());
        out.extend_from_slice(&l.to_le_bytes());
        out.push(r);
        out.extend_from_slice(&self.window.to_le_bytes());
        for s in &self.starts {
            out.extend_from_slice(&s.to_le_bytes());
        }
        if self.starts.is_empty() {
            return Ok(out);
        }
        let rows = self.rows as usize;
        let buckets = self.buckets as usize;
        let codec = ColumnCodec::new(rows, self.max_id());
        let width = codec.rank_bytes();
        let mut column = vec![0u32; rows];
        for cells in &self.repetitions {
            if cells.len() != rows * buckets {
                return Err(invalid("repetition has the wrong number of cells"));
            }
            out.extend_from_slice(&((buckets * width) as u32).to_le_bytes());
            for b in 0..buckets {
                for (a, slot) in column.iter_mut().enumerate() {
                    *slot = cells[a * buckets + b];
                }
                let mut bytes = codec.encode(&column)?.to_bytes_le();
                if bytes == [0] {
                    bytes.clear();
                }
                bytes.resize(width, 0);
                out.extend_from_slice(&bytes);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4)? != TABLE_MAGIC {
            return Err(SketchError::Decode("bad magic".into()));
        }
        let version = rd.u8()?;
        if version != TABLE_VERSION {
            return Err(SketchError::Decode(format!("unsupported version {version}")));
        }
        let rows = rd.u8()?;
        let buckets = rd.u32()?;
        let l = rd.u16()? as usize;
        let r = rd.u8()? as usize;
        let window = rd.u64()?;
        if rows == 0 || buckets == 0 {
            return Err(SketchError::Decode("empty table shape".into()));
        }
        let mut starts = Vec::with_capacity(l);
        for _ in 0..l {
            starts.push(rd.u64()?);
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SketchError::Decode("start list not increasing".into()));
        }
        let cells_per = rows as usize * buckets as usize;
        let mut repetitions = Vec::with_capacity(r);
        if l == 0 {
            repetitions.resize(r, vec![0; cells_per]);
        } else {
            let codec = ColumnCodec::new(rows as usize, l as u32);
            let width = codec.rank_bytes();
            for _ in 0..r {
                let len = rd.u32()? as usize;
                if len != buckets as usize * width {
                    return Err(SketchError::Decode("repetition length mismatch".into()));
                }
                let mut cells = vec![0u32; cells_per];
                for b in 0..buckets as usize {
                    let rank = BigUint::from_bytes_le(rd.take(width)?);
                    let column = codec.decode(&rank)?;
                    for (a, v) in column.into_iter().enumerate() {
                        cells[a * buckets as usize + b] = v;
                    }
                }
                repetitions.push(cells);
            }
        }
        if rd.pos != bytes.len() {
            return Err(SketchError::Decode("trailing bytes".into()));
        }
        Ok(TableSnapshot {
            rows,
            buckets,
            window,
            starts,
            repetitions,
        })
    }
}

/// Number of bits needed to tell apart every column of the given shape.
pub fn column_bits(height: usize, max_id: u32) -> u64 {
    let count = ColumnCodec::new(height, max_id).count();
    (count - BigUint::one()).bits()
}
