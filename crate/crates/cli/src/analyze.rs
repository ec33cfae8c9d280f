use std::path::PathBuf;

use rca_core::pipeline::{run as run_pipeline, RunConfig};
use rca_core::report::{format_table, MinedPatternRecord};
use rca_core::{extract_patterns, ingest_records, BinRule, BinStrategy, ControlMode, GroupRole, MinSupport, MiningParams, Vocabulary};

use crate::output::{read_records, stdout, write_file};
use crate::Format;

#[derive(clap::Args)]
pub struct AnalyzeArgs {
    /// JSON-Lines file with the test group (traces showing the problem).
    #[arg(long)]
    test: PathBuf,
    /// JSON-Lines file with the control group.
    #[arg(long)]
    control: PathBuf,
    /// Absolute trace count when >= 1, fraction of the group when < 1.
    #[arg(long)]
    min_support: f64,
    #[arg(long, default_value_t = rca_core::pattern_miner::DEFAULT_MAX_LEN)]
    max_len: usize,
    /// Jaccard threshold at which patterns are treated as redundant.
    #[arg(long, default_value_t = rca_core::redundancy_filter::DEFAULT_SIMILARITY)]
    similarity: f64,
    /// exact or algorithm_faithful
    #[arg(long, default_value = "exact")]
    control_mode: ControlMode,
    /// equal_proportion, equal_width or kbins
    #[arg(long, default_value = "equal_proportion")]
    binning: BinStrategy,
    /// sturges, fd, or a bin count
    #[arg(long, default_value = "sturges")]
    bins: BinRule,
    /// Report format. Without --out the report goes to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rows in the summary table.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

pub fn run(args: AnalyzeArgs) -> anyhow::Result<()> {
    let mut config = RunConfig::new(MinSupport::from_value(args.min_support)?);
    config.max_len = args.max_len;
    config.similarity = args.similarity;
    config.control_mode = args.control_mode;
    config.binning = args.binning;
    config.bins = args.bins;
    config.validate()?;

    let test = read_records(&args.test)?;
    let control = read_records(&args.control)?;
    let outcome = run_pipeline(&test, &control, &config)?;
    let report = outcome.report(
        &config,
        (Some(args.test.display().to_string()), Some(args.control.display().to_string())),
    );
    let rows: Vec<_> = report.patterns.iter().map(|r| r.row.clone()).collect();
    let rendered = match args.format {
        Format::Json => report.to_canonical_json()?,
        Format::Table => format_table(&rows, rows.len()),
    };
    for w in &report.analysis.warnings {
        eprintln!("warning: {w}");
    }
    match &args.out {
        Some(path) => {
            write_file(path, &rendered)?;
            stdout(&format_table(&rows, args.top_k))
        }
        None => stdout(&rendered),
    }
}

#[derive(clap::Args)]
pub struct MineArgs {
    /// JSON-Lines trace file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    min_support: f64,
    #[arg(long, default_value_t = rca_core::pattern_miner::DEFAULT_MAX_LEN)]
    max_len: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Frequent patterns of one group as JSON Lines. Numeric events are not
/// discretized here; use `analyze` for groups that carry them.
pub fn mine(args: MineArgs) -> anyhow::Result<()> {
    let params = MiningParams::new(MinSupport::from_value(args.min_support)?, args.max_len)?;
    let records = read_records(&args.input)?;
    let mut vocab = Vocabulary::new();
    let group = ingest_records(&records, GroupRole::Test, &mut vocab, None)?.group;
    let mut lines = String::new();
    for m in extract_patterns(&group, &params) {
        lines.push_str(&serde_json::to_string(&MinedPatternRecord::new(&m, &vocab, &group))?);
        lines.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &lines),
        None => stdout(&lines),
    }
}
