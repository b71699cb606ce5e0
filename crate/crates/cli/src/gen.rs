//! Stream generators.

use anyhow::{bail, ensure, Result};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::commands::{Command, StreamFile};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn with_queries(items: &[u64], query_every: Option<u64>) -> Vec<Command> {
    let mut out = Vec::with_capacity(items.len() + 1);
    for (i, &x) in items.iter().enumerate() {
        out.push(Command::Arrive(x));
        if query_every.is_some_and(|q| q > 0 && (i as u64 + 1) % q == 0) {
            out.push(Command::Query);
        }
    }
    if out.last() != Some(&Command::Query) && !items.is_empty() {
        out.push(Command::Query);
    }
    out
}

/// `length` items uniform over `[0, universe)`.
pub fn uniform(length: u64, universe: u64, query_every: Option<u64>, seed: u64) -> Result<StreamFile> {
    ensure!(universe >= 1, "universe must be at least 1");
    let mut r = rng(seed);
    let items: Vec<u64> = (0..length).map(|_| r.random_range(0..universe)).collect();
    Ok(StreamFile {
        header: vec![format!("uniform length={length} universe={universe} seed={seed}")],
        commands: with_queries(&items, query_every),
    })
}

/// `length` items with `P(item = k - 1) ~ k^(-exponent)`.
pub fn zipf(
    length: u64,
    universe: u64,
    exponent: f64,
    query_every: Option<u64>,
    seed: u64,
) -> Result<StreamFile> {
    let dist = Zipf::new(universe as f64, exponent)
        .map_err(|e| anyhow::anyhow!("invalid zipf parameters: {e}"))?;
    let mut r = rng(seed);
    let items: Vec<u64> = (0..length)
        .map(|_| dist.sample(&mut r) as u64 - 1)
        .collect();
    Ok(StreamFile {
        header: vec![format!(
            "zipf length={length} universe={universe} exponent={exponent} seed={seed}"
        )],
        commands: with_queries(&items, query_every),
    })
}

/// A window of planted heavy items mixed with distinct singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub window: u64,
    /// `(item, count)` pairs placed in the final window.
    pub heavy: Vec<(u64, u64)>,
    /// Distinct singleton items in the final window.
    pub filler: u64,
    /// Random non-heavy arrivals before the window part.
    pub prefix: u64,
    pub universe: u64,
}

impl Planted {
    pub fn items(&self, seed: u64) -> Result<Vec<u64>> {
        let heavy_total: u64 = self.heavy.iter().map(|h| h.1).sum();
        ensure!(
            heavy_total + self.filler <= self.window,
            "heavy counts plus filler exceed the window"
        );
        let mut heavy_ids: Vec<u64> = self.heavy.iter().map(|h| h.0).collect();
        heavy_ids.sort_unstable();
        heavy_ids.dedup();
        ensure!(heavy_ids.len() == self.heavy.len(), "heavy items must be distinct");
        ensure!(
            heavy_ids.last().is_none_or(|&h| h < self.universe),
            "heavy item outside the universe"
        );
        let free = self.universe - heavy_ids.len() as u64;
        ensure!(
            self.filler <= free && (self.prefix == 0 || free > 0),
            "universe too small for the filler"
        );

        let mut r = rng(seed);
        let is_heavy = |x: &u64| heavy_ids.binary_search(x).is_ok();
        let pick = (self.filler as usize + heavy_ids.len()).min(self.universe as usize);
        let mut fillers: Vec<u64> = index::sample(&mut r, self.universe as usize, pick)
            .into_iter()
            .map(|i| i as u64)
            .filter(|x| !is_heavy(x))
            .collect();
        fillers.truncate(self.filler as usize);

        let mut window: Vec<u64> = self
            .heavy
            .iter()
            .flat_map(|&(x, c)| std::iter::repeat_n(x, c as usize))
            .chain(fillers)
            .collect();
        window.shuffle(&mut r);

        let mut items = Vec::with_capacity((self.prefix + self.window) as usize);
        while (items.len() as u64) < self.prefix {
            let x = r.random_range(0..self.universe);
            if !is_heavy(&x) {
                items.push(x);
            }
        }
        items.extend(window);
        Ok(items)
    }

    pub fn generate(&self, seed: u64) -> Result<StreamFile> {
        let items = self.items(seed)?;
        let mut header = vec![format!(
            "planted window={} universe={} prefix={} filler={} seed={seed}",
            self.window, self.universe, self.prefix, self.filler
        )];
        header.extend(self.heavy.iter().map(|(x, c)| format!("heavy {x} {c}")));
        Ok(StreamFile {
            header,
            commands: with_queries(&items, None),
        })
    }
}

/// `3n` arrivals whose final window of `n` holds exactly `distinct` items,
/// each at least once. Earlier arrivals use disjoint items.
pub fn planted_distinct(window: u64, distinct: u64, universe: u64, seed: u64) -> Result<Vec<u64>> {
    ensure!(distinct >= 1 && distinct <= window, "need 1 <= distinct <= window");
    ensure!(distinct < universe, "universe too small");
    let mut r = rng(seed);
    let mut ids: Vec<u64> = (0..universe).collect();
    ids.shuffle(&mut r);
    let (inside, outside) = ids.split_at(distinct as usize);
    let mut win: Vec<u64> = inside.to_vec();
    while (win.len() as u64) < window {
        win.push(inside[r.random_range(0..inside.len())]);
    }
    win.shuffle(&mut r);
    let mut items: Vec<u64> = (0..2 * window)
        .map(|_| outside[r.random_range(0..outside.len())])
        .collect();
    items.extend(win);
    Ok(items)
}

/// Block layout of the lower-bound stream: the window is split into
/// `l = floor(log2(n) / (6 eps))` blocks; block `l - k + 1` holds pieces of
/// `ceil((1 + 2 eps)^k)` slots, and piece `x_k` of it carries the items
/// `1..=size_k`. Everything else is the pad item 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LbLayout {
    pub window: u64,
    pub epsilon: f64,
    pub blocks: u64,
    pub block_len: u64,
    pub pieces: u64,
    /// `sizes[k - 1]` is the piece size used for index `k`.
    pub sizes: Vec<u64>,
    /// `x[k - 1]` is the 1-based piece holding the items for index `k`.
    pub x: Vec<u64>,
    pub stream: Vec<u64>,
}

impl LbLayout {
    pub fn new(window: u64, epsilon: f64, seed: u64) -> Result<Self> {
        ensure!(epsilon > 0.0 && epsilon < 1.0, "epsilon must be in (0, 1)");
        ensure!(window >= 2, "window too short");
        let blocks = ((window as f64).log2() / (6.0 * epsilon)).floor() as u64;
        if blocks == 0 {
            bail!("no blocks fit: log2(n) / (6 eps) < 1");
        }
        let block_len = window / blocks;
        let sizes: Vec<u64> = (1..=blocks)
            .map(|k| (1.0 + 2.0 * epsilon).powi(k as i32).ceil() as u64)
            .collect();
        let largest = *sizes.last().unwrap();
        if largest > block_len {
            bail!("piece size {largest} exceeds block length {block_len}");
        }
        let pieces = ((window as f64).sqrt().floor() as u64).min(block_len / largest);
        let mut r = rng(seed);
        let x: Vec<u64> = (0..blocks).map(|_| r.random_range(1..=pieces)).collect();

        let mut stream = vec![0u64; (blocks * block_len) as usize];
        let mut layout = LbLayout {
            window,
            epsilon,
            blocks,
            block_len,
            pieces,
            sizes,
            x,
            stream: Vec::new(),
        };
        for k in 1..=blocks {
            let start = layout.piece_start(k, layout.x[k as usize - 1]) as usize - 1;
            for (o, id) in (1..=layout.sizes[k as usize - 1]).enumerate() {
                stream[start + o] = id;
            }
        }
        layout.stream = stream;
        Ok(layout)
    }

    pub fn size(&self, k: u64) -> u64 {
        self.sizes[k as usize - 1]
    }

    /// 1-based stream position where piece `j` of index `k`'s block begins.
    pub fn piece_start(&self, k: u64, j: u64) -> u64 {
        let block = self.blocks - k + 1;
        (block - 1) * self.block_len + (j - 1) * self.size(k) + 1
    }

    /// Pad arrivals needed after the stream so the window starts at `start`.
    pub fn pad_for_start(&self, start: u64) -> u64 {
        (start - 1 + self.window).saturating_sub(self.stream.len() as u64)
    }

    /// Distinct items in the window starting at stream position `start`,
    /// once pad arrivals have moved it there. A piece that is partly expired
    /// still holds the ids of its unexpired tail.
    pub fn distinct_from(&self, start: u64) -> u64 {
        // Piece k keeps ids lo..=size_k; the ranges overlap from 1 upward.
        let mut ranges: Vec<(u64, u64)> = (1..=self.blocks)
            .filter_map(|k| {
                let ps = self.piece_start(k, self.x[k as usize - 1]);
                let lo = start.saturating_sub(ps) + 1;
                (lo <= self.size(k)).then_some((lo, self.size(k)))
            })
            .collect();
        ranges.sort_unstable();
        let mut total = 0;
        let mut covered = 0;
        for (lo, hi) in ranges {
            let from = lo.max(covered + 1);
            if hi >= from {
                total += hi - from + 1;
                covered = hi;
            }
        }
        total + 1
    }

    /// Decision threshold for index `i`: the piece is still in the window iff
    /// the distinct estimate is at least `size_i / (1 + eps) + 1`.
    pub fn threshold(&self, i: u64) -> f64 {
        self.size(i) as f64 / (1.0 + self.epsilon) + 1.0
    }

    /// The stream followed by `n` pad arrivals, each followed by a query, so
    /// the answers trace the whole staircase.
    pub fn to_file(&self, seed: u64) -> StreamFile {
        let mut header = vec![format!(
            "lb-blocks window={} epsilon={} blocks={} block_len={} pieces={} seed={seed}",
            self.window, self.epsilon, self.blocks, self.block_len, self.pieces
        )];
        for k in 1..=self.blocks {
            header.push(format!(
                "index {k} block {} size {} piece {} start {}",
                self.blocks - k + 1,
                self.size(k),
                self.x[k as usize - 1],
                self.piece_start(k, self.x[k as usize - 1])
            ));
        }
        let mut commands: Vec<Command> = self.stream.iter().map(|&x| Command::Arrive(x)).collect();
        commands.push(Command::Query);
        for _ in 0..self.window {
            commands.push(Command::Arrive(0));
            commands.push(Command::Query);
        }
        StreamFile { header, commands }
    }
}

/// The embedded Hamming-distance instances of the second lower-bound stream.
#[derive(Debug, Clone, PartialEq)]
pub struct GapHamming {
    pub window: u64,
    pub epsilon: f64,
    /// `(j, x_j, y_j, far)` for every even `j`, largest first.
    pub instances: Vec<(u32, Vec<bool>, Vec<bool>, bool)>,
    /// Concatenation `w_{2b} w_{2b-1} ... w_{2a}`.
    pub s: Vec<bool>,
}

impl GapHamming {
    pub fn new(window: u64, epsilon: f64, seed: u64) -> Result<Self> {
        ensure!(epsilon > 0.0 && epsilon < 1.0, "epsilon must be in (0, 1)");
        let a = ((1.0 / epsilon).log2() / 2.0).ceil().max(1.0) as u32;
        let b = (((window as f64).log2() - 1.0) / 2.0).floor() as u32;
        ensure!(a < b, "window too short for two instances at this epsilon");
        let mut r = rng(seed);
        let mut instances = Vec::new();
        let mut s = Vec::new();
        for k in (2 * a..=2 * b).rev() {
            let len = 1usize << k;
            if k % 2 == 1 {
                s.extend(std::iter::repeat_n(false, len));
                continue;
            }
            let x: Vec<bool> = (0..len).map(|_| r.random_bool(0.5)).collect();
            let far = r.random_bool(0.5);
            let factor = if far { 1.0 + 4.0 * epsilon } else { 1.0 - 4.0 * epsilon };
            let ham = ((factor * (len / 2) as f64).round().max(0.0) as usize).min(len);
            let mut y = x.clone();
            for i in index::sample(&mut r, len, ham) {
                y[i] = !y[i];
            }
            s.extend_from_slice(&x);
            instances.push((k, x, y, far));
        }
        ensure!(s.len() as u64 <= window, "instances do not fit the window");
        Ok(GapHamming {
            window,
            epsilon,
            instances,
            s,
        })
    }

    /// Alice's `n` arrivals: position `k` if `S[k] = 1`, else 0.
    pub fn alice(&self) -> Vec<u64> {
        (1..=self.window)
            .map(|k| match self.s.get(k as usize - 1) {
                Some(true) => k,
                _ => 0,
            })
            .collect()
    }

    /// Offset of `x_j` inside `S`.
    fn offset(&self, j: u32) -> u64 {
        let top = self.instances[0].0;
        (j + 1..=top).map(|k| 1u64 << k).sum()
    }

    /// Bob's arrivals for instance `j`: pad until `x_j` starts the window
    /// after his own `2^j` arrivals, then `offset + k` for every set bit of
    /// `y_j`. Needs `j` below the largest instance.
    pub fn bob(&self, j: u32) -> Result<Vec<u64>> {
        let Some((_, _, y, _)) = self.instances.iter().find(|e| e.0 == j) else {
            bail!("no instance with j = {j}");
        };
        let off = self.offset(j);
        let Some(pad) = off.checked_sub(1 << j) else {
            bail!("instance j = {j} has no room for Bob's arrivals; pick a smaller one");
        };
        let mut out = vec![0u64; pad as usize];
        out.extend(
            y.iter()
                .enumerate()
                .map(|(k, &bit)| if bit { off + k as u64 + 1 } else { 0 }),
        );
        Ok(out)
    }

    /// Distinct items in the window after Bob's arrivals for instance `j`.
    pub fn expected_distinct(&self, j: u32) -> u64 {
        let mut total = 1;
        for (k, x, y, _) in &self.instances {
            if *k == j {
                total += x.iter().zip(y).filter(|(a, b)| **a || **b).count() as u64;
            } else if *k < j {
                total += x.iter().filter(|&&b| b).count() as u64;
            }
        }
        total
    }

    pub fn to_file(&self, j: u32, seed: u64) -> Result<StreamFile> {
        let mut header = vec![format!(
            "gap-hamming window={} epsilon={} probe={j} seed={seed}",
            self.window, self.epsilon
        )];
        for (k, x, y, far) in &self.instances {
            let ham = x.iter().zip(y).filter(|(a, b)| a != b).count();
            header.push(format!(
                "instance j={k} offset={} ham={ham} far={far}",
                self.offset(*k)
            ));
        }
        header.push(format!("expected distinct after probe {}", self.expected_distinct(j)));
        let mut items = self.alice();
        items.extend(self.bob(j)?);
        Ok(StreamFile {
            header,
            commands: with_queries(&items, None),
        })
    }
}
