//! Job records and their on-disk layout.
//!
//! Each job owns `jobs/<id>/` under the data directory:
//! `job.json` (status, rewritten on every transition), and once done,
//! `report.json` (canonical report) and `ranked.json` (the full ranked list
//! with supporting trace ids, used for re-filtering and linking).

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rca_core::pipeline::RunConfig;
use rca_core::rca_ranker::PatternStats;
use rca_core::report::PatternRow;
use rca_core::{EventToken, Pattern};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobState {
    pub fn can_become(self, next: JobState) -> bool {
        matches!(
            (self, next),
            (JobState::Queued, JobState::Running)
                | (JobState::Running, JobState::Done)
                | (JobState::Running, JobState::Failed)
                | (JobState::Queued, JobState::Failed)
        )
    }

    pub fn is_pending(self) -> bool {
        matches!(self, JobState::Queued | JobState::Running)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JobTimings {
    pub queued_ms: f64,
    pub ingest_ms: f64,
    pub analyze_ms: f64,
    pub dedupe_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub test_size: usize,
    pub control_size: usize,
    pub resolved_min_support_test: usize,
    pub resolved_min_support_control: usize,
    pub ranked_patterns: usize,
    pub warnings: Vec<String>,
}

/// The status document served by `GET /v1/analyses/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub state: JobState,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<JobTimings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<JobSummary>,
}

#[derive(Debug, Clone)]
pub struct JobEntry {
    pub record: JobRecord,
    /// Present iff the job is done.
    pub ranked: Option<Arc<Vec<PatternRow>>>,
}

pub struct JobStore {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

impl JobStore {
    pub fn open(data_dir: &Path) -> io::Result<Self> {
        let root = data_dir.join("jobs");
        fs::create_dir_all(&root)?;
        Ok(JobStore { root })
    }

    fn dir(&self, job_id: &str) -> PathBuf {
        self.root.join(job_id)
    }

    pub fn save_record(&self, record: &JobRecord) -> io::Result<()> {
        let dir = self.dir(&record.job_id);
        fs::create_dir_all(&dir)?;
        let json = serde_json::to_vec_pretty(record).map_err(io::Error::other)?;
        write_atomic(&dir.join("job.json"), &json)
    }

    pub fn save_results(&self, job_id: &str, report_json: &str, ranked: &[PatternRow]) -> io::Result<()> {
        let dir = self.dir(job_id);
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("report.json"), report_json.as_bytes())?;
        let json = serde_json::to_vec(ranked).map_err(io::Error::other)?;
        write_atomic(&dir.join("ranked.json"), &json)
    }

    /// Every job found on disk. Jobs that were queued or running when the
    /// previous process stopped are marked failed.
    pub fn load_all(&self) -> io::Result<HashMap<String, JobEntry>> {
        let mut out = HashMap::new();
        for dir in fs::read_dir(&self.root)? {
            let path = dir?.path().join("job.json");
            let Ok(bytes) = fs::read(&path) else { continue };
            let Ok(mut record) = serde_json::from_slice::<JobRecord>(&bytes) else {
                tracing::warn!(path = %path.display(), "skipping unreadable job record");
                continue;
            };
            let mut ranked = None;
            if record.state.is_pending() {
                record.state = JobState::Failed;
                record.error = Some("interrupted by a service restart".into());
                self.save_record(&record)?;
            } else if record.state == JobState::Done {
                let rows: Vec<PatternRow> = serde_json::from_slice(&fs::read(self.dir(&record.job_id).join("ranked.json"))?)
                    .map_err(io::Error::other)?;
                ranked = Some(Arc::new(rows));
            }
            out.insert(record.job_id.clone(), JobEntry { record, ranked });
        }
        Ok(out)
    }
}

/// Rebuilds ranker rows from stored rows so the redundancy filter can run
/// again. Labels and trace ids are interned locally; the filter only looks at
/// F1, pattern length and supporting-set overlap, all of which are preserved.
pub fn stats_from_rows(rows: &[PatternRow], test_size: usize) -> rca_core::Result<Vec<PatternStats>> {
    let mut events: HashMap<&str, u32> = HashMap::new();
    let mut traces: HashMap<&str, u32> = HashMap::new();
    rows.iter()
        .map(|row| {
            let pattern = Pattern(
                row.pattern
                    .iter()
                    .map(|l| {
                        let next = events.len() as u32;
                        EventToken(*events.entry(l.as_str()).or_insert(next))
                    })
                    .collect(),
            );
            let mut test_ids: Vec<u32> = row
                .test_trace_ids
                .iter()
                .flatten()
                .map(|t| {
                    let next = traces.len() as u32;
                    *traces.entry(t.as_str()).or_insert(next)
                })
                .collect();
            test_ids.sort_unstable();
            let control_ids = (0..row.control_support as u32).collect();
            PatternStats::new(pattern, test_ids, control_ids, test_size)
        })
        .collect()
}
