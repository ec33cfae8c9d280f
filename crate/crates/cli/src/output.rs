use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;

/// Writes `content` to `path` through a temporary file in the same
/// directory, so a failed run never leaves a partial file behind.
pub fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    let tmp = path.with_file_name(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, content).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}

pub fn stdout(content: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(content.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<rca_core::TraceRecord>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    rca_core::parse_records(std::io::BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}
