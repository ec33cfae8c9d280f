use std::path::PathBuf;

use anyhow::Context;
use rca_core::regression_linker::DEFAULT_LINK_THRESHOLD;
use rca_core::report::Report;
use rca_core::{build_index, encode_regression, link_regressions};

use crate::output::{stdout, write_file};

#[derive(clap::Args)]
pub struct LinkArgs {
    /// Reports written by `rca analyze --format json`. Each is identified by its path.
    #[arg(required = true, num_args = 1..)]
    reports: Vec<PathBuf>,
    /// Cosine distance at or below which two regressions are linked.
    #[arg(long, default_value_t = DEFAULT_LINK_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: LinkArgs) -> anyhow::Result<()> {
    if !(0.0..=2.0).contains(&args.threshold) {
        anyhow::bail!("threshold must be in [0, 2], got {}", args.threshold);
    }
    let analyses = args
        .reports
        .iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let report = Report::from_json(&text).with_context(|| format!("in {}", path.display()))?;
            Ok(report.to_regression(path.display().to_string()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let index = build_index(&analyses)?;
    let vectors = analyses
        .iter()
        .map(|a| encode_regression(a, &index))
        .collect::<rca_core::Result<Vec<_>>>()?;
    let report = link_regressions(&vectors, args.threshold)?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    match &args.out {
        Some(path) => write_file(path, &json),
        None => stdout(&json),
    }
}
