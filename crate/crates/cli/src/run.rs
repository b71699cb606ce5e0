//! The `run` command: feed a command stream to one sketch and emit a JSON
//! record per query.

use std::io::{BufRead, Write};

use anyhow::{ensure, Context, Result};
use serde::Serialize;
use slidewin_core::f2::{AmsFactory, AmsSeeds, AMS_COUNTERS};
use slidewin_core::oracle::{oracle_distinct, oracle_fp, oracle_heavy, WindowBuffer};
use slidewin_core::{
    DistinctParams, DistinctSketch, ExactCount, HashSeed, HeavyHitterState, HeavyParams,
    SmoothHistogram,
};

use crate::commands::{read_commands, Command};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Distinct,
    Hh,
    F2,
    Count,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub window: u64,
    pub epsilon: f64,
    pub p: f64,
    pub universe: u64,
    pub seed: u64,
    pub oracle: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.window >= 1, "window must be at least 1");
        ensure!(
            self.epsilon > 0.0 && self.epsilon < 1.0,
            "epsilon must be in (0, 1), got {}",
            self.epsilon
        );
        ensure!(self.p > 0.0 && self.p <= 2.0, "p must be in (0, 2], got {}", self.p);
        ensure!(self.universe >= 1, "universe must be at least 1");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemEstimate {
    pub item: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Exact {
    Value(f64),
    Heavy {
        heavy: Vec<u64>,
        heavy_threshold: f64,
        reject_threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub position: u64,
    pub task: Task,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<ItemEstimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Exact>,
    pub instance_count: usize,
    pub bytes_used: usize,
}

enum Engine {
    Distinct(Box<DistinctSketch>),
    Heavy(Box<HeavyHitterState>),
    F2(SmoothHistogram<AmsFactory>),
    Count(SmoothHistogram<fn() -> ExactCount>),
}

/// One sketch plus, optionally, the exact window.
pub struct Runner {
    config: RunConfig,
    engine: Engine,
    oracle: Option<WindowBuffer>,
    position: u64,
}

impl Runner {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let engine = match config.task {
            Task::Distinct => Engine::Distinct(Box::new(DistinctSketch::new(
                DistinctParams::new(config.window, config.epsilon, config.universe).seed(config.seed),
            )?)),
            Task::Hh => Engine::Heavy(Box::new(HeavyHitterState::new(
                HeavyParams::new(config.window, config.epsilon, config.p, config.universe)
                    .seed(config.seed),
            )?)),
            Task::F2 => {
                let seeds = AmsSeeds::new(HashSeed(config.seed), config.universe)?;
                Engine::F2(SmoothHistogram::new(config.window, config.epsilon, AmsFactory(seeds))?)
            }
            Task::Count => Engine::Count(SmoothHistogram::new(
                config.window,
                config.epsilon,
                ExactCount::default as fn() -> ExactCount,
            )?),
        };
        Ok(Runner {
            oracle: config.oracle.then(|| WindowBuffer::new(config.window)),
            config,
            engine,
            position: 0,
        })
    }

    pub fn arrive(&mut self, item: u64) -> Result<()> {
        match &mut self.engine {
            Engine::Distinct(s) => s.insert(item)?,
            Engine::Heavy(s) => s.insert(item)?,
            Engine::F2(h) => {
                let signs = h.factory().0.signs_of(item)?;
                h.insert(&signs);
            }
            Engine::Count(h) => {
                ensure!(
                    item < self.config.universe,
                    "item {item} outside universe of size {}",
                    self.config.universe
                );
                h.insert(&item);
            }
        }
        if let Some(buf) = &mut self.oracle {
            buf.push(item);
        }
        self.position += 1;
        Ok(())
    }

    pub fn query(&self) -> Result<Record> {
        let c = &self.config;
        let mut rec = Record {
            position: self.position,
            task: c.task,
            estimate: None,
            items: None,
            exact: None,
            instance_count: 0,
            bytes_used: 0,
        };
        match &self.engine {
            Engine::Distinct(s) => {
                rec.estimate = Some(s.query());
                rec.instance_count = s.instance_count();
                rec.bytes_used = s.encoded_len();
            }
            Engine::Heavy(s) => {
                let items = s.query()?;
                rec.items = Some(
                    items
                        .into_iter()
                        .map(|(item, estimate)| ItemEstimate { item, estimate })
                        .collect(),
                );
                rec.instance_count = s.instance_count();
                rec.bytes_used = s.to_bytes().len();
            }
            Engine::F2(h) => {
                rec.estimate = Some(h.query().unwrap_or(0.0));
                rec.instance_count = h.len();
                rec.bytes_used = h.len() * (8 + 8 * AMS_COUNTERS);
            }
            Engine::Count(h) => {
                rec.estimate = Some(h.query().unwrap_or(0.0));
                rec.instance_count = h.len();
                rec.bytes_used = h.len() * 16;
            }
        }
        if let Some(buf) = &self.oracle {
            rec.exact = Some(match c.task {
                Task::Distinct => Exact::Value(oracle_distinct(buf) as f64),
                Task::F2 => Exact::Value(oracle_fp(buf, 2.0)?.fp),
                Task::Count => Exact::Value(buf.len() as f64),
                Task::Hh => {
                    let sets = oracle_heavy(buf, c.epsilon, c.p)?;
                    Exact::Heavy {
                        heavy: sets.heavy.into_iter().collect(),
                        heavy_threshold: sets.heavy_threshold,
                        reject_threshold: sets.light_threshold,
                    }
                }
            });
        }
        Ok(rec)
    }
}

/// Process `input` and write one JSON line per query. Returns the number of
/// records written.
pub fn run<R: BufRead, W: Write>(config: RunConfig, input: R, mut out: W) -> Result<usize> {
    let mut runner = Runner::new(config)?;
    let mut records = 0;
    for cmd in read_commands(input) {
        let (lineno, cmd) = cmd?;
        match cmd {
            Command::Arrive(x) => runner
                .arrive(x)
                .with_context(|| format!("line {lineno}"))?,
            Command::Query => {
                let rec = runner.query().with_context(|| format!("line {lineno}"))?;
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
                records += 1;
            }
        }
    }
    out.flush()?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(task: Task, window: u64) -> RunConfig {
        RunConfig {
            task,
            window,
            epsilon: 0.5,
            p: 2.0,
            universe: 1 << 16,
            seed: 1,
            oracle: true,
        }
    }

    fn records(cfg: RunConfig, input: &str) -> Vec<serde_json::Value> {
        let mut out = Vec::new();
        run(cfg, input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn distinct_small_window() {
        let r = records(config(Task::Distinct, 4), "A 5\nA 5\nQ\n");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0]["estimate"], 1.0);
        assert_eq!(r[0]["exact"], 1.0);
        assert_eq!(r[0]["position"], 2);
        assert_eq!(r[0]["task"], "distinct");
    }

    #[test]
    fn empty_input() {
        for task in [Task::Distinct, Task::Hh, Task::F2, Task::Count] {
            assert!(records(config(task, 8), "").is_empty());
        }
    }

    #[test]
    fn every_task_answers() {
        let input = "A 1\nA 2\nA 1\nQ\n";
        for task in [Task::Distinct, Task::Hh, Task::F2, Task::Count] {
            let r = records(config(task, 8), input);
            assert_eq!(r.len(), 1);
            assert!(r[0]["instance_count"].as_u64().unwrap() >= 1);
        }
        let r = records(config(Task::Count, 8), input);
        assert_eq!(r[0]["estimate"], 3.0);
        let r = records(config(Task::F2, 8), input);
        assert_eq!(r[0]["exact"], 5.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut out = Vec::new();
        let err = run(config(Task::Count, 4), "A 1\nZ\n".as_bytes(), &mut out).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = run(config(Task::Distinct, 4), "A 70000\n".as_bytes(), &mut out).unwrap_err();
        assert!(format!("{err:#}").contains("line 1"), "{err:#}");
    }

    #[test]
    fn invalid_config() {
        let mut c = config(Task::Distinct, 4);
        c.epsilon = 1.0;
        assert!(Runner::new(c).is_err());
        let mut c = config(Task::Hh, 4);
        c.p = 2.5;
        assert!(Runner::new(c).is_err());
    }
}
