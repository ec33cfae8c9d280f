use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rca_core::pipeline::{run as run_pipeline, RunConfig};
use rca_core::synth::{generate, CorpusSpec, Preset, DEFAULT_VOCAB};
use rca_core::MinSupport;

use crate::output::{stdout, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Sweep {
    /// Double the traces per group at each step.
    Traces,
    /// Double the median trace length at each step.
    Length,
    /// Halve the minimum support at each step.
    Support,
}

#[derive(clap::Args)]
pub struct BenchArgs {
    /// Starting workload; individual flags override its fields.
    #[arg(long, default_value = "easy")]
    preset: Preset,
    #[arg(long)]
    traces: Option<usize>,
    #[arg(long)]
    median_len: Option<usize>,
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    min_support: Option<f64>,
    #[arg(long, default_value_t = rca_core::pattern_miner::DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long, value_enum)]
    sweep: Option<Sweep>,
    /// Steps in the sweep, including the starting point.
    #[arg(long, default_value_t = 4)]
    steps: usize,
    /// Per-run budget in seconds. A run over budget is recorded as a timeout
    /// and the remaining, larger sweep steps are skipped.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub const CSV_HEADER: &str =
    "sweep,traces_per_group,median_len,vocab,min_support,max_len,ingest_ms,analyze_ms,dedupe_ms,total_ms,generate_ms,patterns,status";

#[derive(Debug, Clone, Copy)]
struct Point {
    traces: usize,
    median_len: usize,
    vocab: usize,
    min_support: f64,
}

fn points(start: Point, sweep: Option<Sweep>, steps: usize) -> Vec<Point> {
    let Some(sweep) = sweep else { return vec![start] };
    (0..steps.max(1) as u32)
        .map(|k| {
            let mut p = start;
            match sweep {
                Sweep::Traces => p.traces = start.traces << k,
                Sweep::Length => p.median_len = start.median_len << k,
                Sweep::Support => p.min_support = start.min_support / f64::from(1u32 << k),
            }
            p
        })
        .collect()
}

pub fn run(args: BenchArgs) -> anyhow::Result<()> {
    let (traces, median_len, support) = args.preset.shape();
    let start = Point {
        traces: args.traces.unwrap_or(traces),
        median_len: args.median_len.unwrap_or(median_len),
        vocab: args.vocab.unwrap_or(DEFAULT_VOCAB),
        min_support: args.min_support.unwrap_or(support),
    };
    let sweep_name = match args.sweep {
        None => "none",
        Some(Sweep::Traces) => "traces",
        Some(Sweep::Length) => "length",
        Some(Sweep::Support) => "support",
    };

    let mut csv = format!("{CSV_HEADER}\n");
    let mut over_budget = false;
    for p in points(start, args.sweep, args.steps) {
        let prefix = format!(
            "{sweep_name},{},{},{},{},{}",
            p.traces, p.median_len, p.vocab, p.min_support, args.max_len
        );
        if over_budget {
            writeln!(csv, "{prefix},,,,,,,skipped")?;
            continue;
        }
        let mut config = RunConfig::new(MinSupport::from_value(p.min_support)?);
        config.max_len = args.max_len;
        let t = Instant::now();
        let (test, control) = generate(&CorpusSpec::new(p.traces, p.median_len, p.vocab, args.seed));
        let generate_ms = t.elapsed().as_secs_f64() * 1e3;
        let outcome = run_pipeline(&test, &control, &config)?;
        let tm = &outcome.timings;
        let status = if tm.total_ms > args.timeout * 1e3 {
            over_budget = true;
            "timeout"
        } else {
            "ok"
        };
        writeln!(
            csv,
            "{prefix},{:.3},{:.3},{:.3},{:.3},{generate_ms:.3},{},{status}",
            tm.ingest_ms,
            tm.analyze_ms,
            tm.dedupe_ms,
            tm.total_ms,
            outcome.analysis.rows.len()
        )?;
        eprintln!("{prefix}: {:.1} ms ({status})", tm.total_ms);
    }
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => stdout(&csv),
    }
}
