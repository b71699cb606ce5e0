use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use slidewin_cli::accept::{run_suite, Suite};
use slidewin_cli::commands::StreamFile;
use slidewin_cli::gen::{self, GapHamming, LbLayout, Planted};
use slidewin_cli::run::{run, RunConfig, Task};

#[derive(Parser)]
#[command(name = "slidewin", version, about = "Sliding-window sketches: run, generate, accept")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Feed a command stream to a sketch; one JSON line per query.
    Run {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        window: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 65536)]
        universe: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report exact answers from the full window.
        #[arg(long)]
        oracle: bool,
        /// Command file, or `-` for stdin.
        #[arg(long)]
        input: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a command stream.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Arrivals (uniform, zipf).
        #[arg(long, default_value_t = 10_000)]
        length: u64,
        #[arg(long, default_value_t = 65536)]
        universe: u64,
        /// Zipf exponent.
        #[arg(long, default_value_t = 1.1)]
        exponent: f64,
        /// Query after every this many arrivals (uniform, zipf).
        #[arg(long)]
        query_every: Option<u64>,
        /// Window length (planted, lb-blocks, gap-hamming).
        #[arg(long, default_value_t = 1024)]
        window: u64,
        /// Planted heavy item as `item:count`; repeatable.
        #[arg(long, value_parser = parse_heavy)]
        heavy: Vec<(u64, u64)>,
        /// Distinct singletons in the planted window.
        #[arg(long, default_value_t = 0)]
        filler: u64,
        /// Random arrivals before the planted window.
        #[arg(long, default_value_t = 0)]
        prefix: u64,
        /// Accuracy parameter (lb-blocks, gap-hamming).
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Instance length exponent `j` probed by gap-hamming; defaults to
        /// the second largest.
        #[arg(long)]
        instance: Option<u32>,
    },
    /// Run acceptance criteria; exit code 0 iff all pass.
    Accept {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uniform,
    Zipf,
    Planted,
    LbBlocks,
    GapHamming,
}

fn parse_heavy(s: &str) -> Result<(u64, u64), String> {
    let (item, count) = s.split_once(':').ok_or("expected item:count")?;
    Ok((
        item.parse().map_err(|e| format!("bad item: {e}"))?,
        count.parse().map_err(|e| format!("bad count: {e}"))?,
    ))
}

fn writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Cmd::Run {
            task,
            window,
            epsilon,
            p,
            universe,
            seed,
            oracle,
            input,
            output,
        } => {
            let config = RunConfig {
                task,
                window,
                epsilon,
                p,
                universe,
                seed,
                oracle,
            };
            let out = writer(&output)?;
            if input == "-" {
                run(config, io::stdin().lock(), out)?;
            } else {
                let f = File::open(&input).with_context(|| format!("cannot open {input}"))?;
                run(config, BufReader::new(f), out)?;
            }
        }
        Cmd::Gen {
            kind,
            seed,
            out,
            length,
            universe,
            exponent,
            query_every,
            window,
            heavy,
            filler,
            prefix,
            epsilon,
            instance,
        } => {
            let file: StreamFile = match kind {
                Kind::Uniform => gen::uniform(length, universe, query_every, seed)?,
                Kind::Zipf => gen::zipf(length, universe, exponent, query_every, seed)?,
                Kind::Planted => Planted {
                    window,
                    heavy,
                    filler,
                    prefix,
                    universe,
                }
                .generate(seed)?,
                Kind::LbBlocks => LbLayout::new(window, epsilon, seed)?.to_file(seed),
                Kind::GapHamming => {
                    if window >= universe {
                        bail!("gap-hamming uses items up to the window length; raise --universe");
                    }
                    let g = GapHamming::new(window, epsilon, seed)?;
                    let j = instance.unwrap_or(g.instances[1].0);
                    g.to_file(j, seed)?
                }
            };
            file.write_to(writer(&out)?)?;
        }
        Cmd::Accept { suite, seed } => {
            let reports = run_suite(suite, seed, |r| println!("{r}"));
            let passed = reports.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", reports.len());
            if passed != reports.len() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
