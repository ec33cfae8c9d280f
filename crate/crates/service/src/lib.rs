//! Job-based HTTP API over the analysis pipeline.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/v1/analyses` | submit groups and parameters, `202 {"job_id"}` |
//! | GET | `/v1/analyses/{id}` | job status and per-stage timings |
//! | GET | `/v1/analyses/{id}/patterns?similarity=&top_k=` | re-filtered ranked rows |
//! | POST | `/v1/links` | link done jobs, `{"job_ids", "threshold"}` |
//!
//! Every response carries `X-RCA-Schema: 1`. Jobs run on a bounded worker
//! pool and are persisted under the configured data directory.

pub mod error;
pub mod jobs;
pub mod request;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rca_core::pipeline::{run, RunConfig};
use rca_core::redundancy_filter::{dedupe, DEFAULT_SIMILARITY};
use rca_core::regression_linker::{build_index, encode_regression, link_regressions, RegressionAnalysis};
use rca_core::report::{DedupedRow, PatternRow};
use rca_core::TraceRecord;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

pub use error::ApiError;
pub use jobs::{JobEntry, JobRecord, JobState, JobStore, JobSummary, JobTimings};
use request::{AnalysisRequest, LinkRequest};

pub const SCHEMA_HEADER: &str = "x-rca-schema";
pub const SCHEMA_VERSION: &str = "1";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Jobs executing at once.
    pub workers: usize,
    /// Queued plus running jobs accepted before submissions get 429.
    pub max_pending: usize,
    /// Request body limit in bytes.
    pub body_limit: usize,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            workers: 2,
            max_pending: 64,
            body_limit: 64 << 20,
        }
    }
}

struct Inner {
    jobs: HashMap<String, JobEntry>,
    by_key: HashMap<String, String>,
}

#[derive(Clone)]
pub struct App {
    inner: Arc<Mutex<Inner>>,
    store: Arc<JobStore>,
    workers: Arc<Semaphore>,
    config: Arc<ServiceConfig>,
}

impl App {
    /// Opens the data directory and reloads persisted jobs.
    pub fn open(config: ServiceConfig) -> std::io::Result<Self> {
        let store = JobStore::open(&config.data_dir)?;
        let jobs = store.load_all()?;
        let by_key = jobs
            .values()
            .filter_map(|j| j.record.idempotency_key.clone().map(|k| (k, j.record.job_id.clone())))
            .collect();
        Ok(App {
            inner: Arc::new(Mutex::new(Inner { jobs, by_key })),
            store: Arc::new(store),
            workers: Arc::new(Semaphore::new(config.workers)),
            config: Arc::new(config),
        })
    }

    /// The semaphore bounding concurrent jobs.
    pub fn workers(&self) -> Arc<Semaphore> {
        self.workers.clone()
    }

    pub fn job(&self, job_id: &str) -> Option<JobEntry> {
        self.lock().jobs.get(job_id).cloned()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies a state change and persists the record.
    fn update(&self, job_id: &str, f: impl FnOnce(&mut JobEntry)) {
        let record = {
            let mut inner = self.lock();
            let Some(entry) = inner.jobs.get_mut(job_id) else { return };
            let before = entry.record.state;
            f(entry);
            debug_assert!(before == entry.record.state || before.can_become(entry.record.state));
            entry.record.clone()
        };
        if let Err(e) = self.store.save_record(&record) {
            tracing::error!(job_id, error = %e, "failed to persist job record");
        }
    }

    pub fn router(self) -> Router {
        let limit = self.config.body_limit;
        Router::new()
            .route("/v1/analyses", post(submit))
            .route("/v1/analyses/{id}", get(status))
            .route("/v1/analyses/{id}/patterns", get(patterns))
            .route("/v1/links", post(links))
            .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
            .layer(DefaultBodyLimit::max(limit))
            .layer(axum::middleware::map_response(schema_header))
            .with_state(self)
    }
}

async fn schema_header(mut res: Response) -> Response {
    res.headers_mut()
        .insert(SCHEMA_HEADER, HeaderValue::from_static(SCHEMA_VERSION));
    res
}

fn json_body(body: Result<Json<Value>, JsonRejection>) -> Result<Value, ApiError> {
    match body {
        Ok(Json(v)) => Ok(v),
        Err(r) if r.status() == StatusCode::PAYLOAD_TOO_LARGE => Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            r.body_text(),
        )),
        Err(r) => Err(ApiError::field("body", r.body_text())),
    }
}

async fn submit(
    State(app): State<App>,
    headers: HeaderMap,
    body: Result<Json<Value>, JsonRejection>,
) -> Result<Response, ApiError> {
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| v.to_str().map(String::from))
        .transpose()
        .map_err(|_| ApiError::field(IDEMPOTENCY_HEADER, "must be visible ASCII"))?;
    let req = AnalysisRequest::parse(&json_body(body)?)?;

    let record = {
        let mut inner = app.lock();
        if let Some(id) = key.as_ref().and_then(|k| inner.by_key.get(k)) {
            return Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response());
        }
        let pending = inner.jobs.values().filter(|j| j.record.state.is_pending()).count();
        if pending >= app.config.max_pending {
            return Err(ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "overloaded",
                format!("{pending} jobs pending; retry later"),
            ));
        }
        let record = JobRecord {
            job_id: uuid::Uuid::new_v4().to_string(),
            state: JobState::Queued,
            config: req.config,
            idempotency_key: key.clone(),
            error: None,
            timings: None,
            summary: None,
        };
        if let Some(k) = key {
            inner.by_key.insert(k, record.job_id.clone());
        }
        inner.jobs.insert(
            record.job_id.clone(),
            JobEntry {
                record: record.clone(),
                ranked: None,
            },
        );
        record
    };
    app.store
        .save_record(&record)
        .map_err(|e| ApiError::internal(format!("cannot persist job: {e}")))?;
    let job_id = record.job_id.clone();
    tracing::info!(job_id, "job queued");
    tokio::spawn(execute(app, job_id.clone(), req.test, req.control, req.config));
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response())
}

struct Finished {
    summary: JobSummary,
    timings: JobTimings,
    ranked: Vec<PatternRow>,
}

async fn execute(app: App, job_id: String, test: Vec<TraceRecord>, control: Vec<TraceRecord>, config: RunConfig) {
    let queued_at = Instant::now();
    let Ok(_permit) = app.workers.clone().acquire_owned().await else {
        return;
    };
    let queued_ms = queued_at.elapsed().as_secs_f64() * 1e3;
    app.update(&job_id, |e| e.record.state = JobState::Running);

    let store = app.store.clone();
    let id = job_id.clone();
    let result = tokio::task::spawn_blocking(move || -> Result<Finished, String> {
        let out = run(&test, &control, &config).map_err(|e| e.to_string())?;
        let report = out.report(&config, (None, None));
        let canonical = report.to_canonical_json().map_err(|e| e.to_string())?;
        let p = &out.prepared;
        let ranked: Vec<PatternRow> = out
            .analysis
            .rows
            .iter()
            .map(|r| PatternRow::new(r, &p.vocab, Some(&p.test)))
            .collect();
        store
            .save_results(&id, &canonical, &ranked)
            .map_err(|e| format!("cannot persist results: {e}"))?;
        let meta = &out.analysis.meta;
        Ok(Finished {
            summary: JobSummary {
                test_size: meta.test_size,
                control_size: meta.control_size,
                resolved_min_support_test: meta.resolved_min_support,
                resolved_min_support_control: meta.resolved_min_support_control,
                ranked_patterns: ranked.len(),
                warnings: meta.warnings.clone(),
            },
            timings: JobTimings {
                queued_ms,
                ingest_ms: out.timings.ingest_ms,
                analyze_ms: out.timings.analyze_ms,
                dedupe_ms: out.timings.dedupe_ms,
                total_ms: out.timings.total_ms,
            },
            ranked,
        })
    })
    .await
    .unwrap_or_else(|e| Err(format!("worker panicked: {e}")));

    match result {
        Ok(done) => {
            tracing::info!(job_id, total_ms = done.timings.total_ms, "job done");
            app.update(&job_id, |e| {
                e.record.state = JobState::Done;
                e.record.summary = Some(done.summary);
                e.record.timings = Some(done.timings);
                e.ranked = Some(Arc::new(done.ranked));
            });
        }
        Err(msg) => {
            tracing::warn!(job_id, error = %msg, "job failed");
            app.update(&job_id, |e| {
                e.record.state = JobState::Failed;
                e.record.error = Some(msg);
                e.record.timings = Some(JobTimings {
                    queued_ms,
                    ..JobTimings::default()
                });
            });
        }
    }
}

async fn status(State(app): State<App>, Path(id): Path<String>) -> Result<Json<JobRecord>, ApiError> {
    app.job(&id).map(|j| Json(j.record)).ok_or_else(|| ApiError::not_found(&id))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternsQuery {
    pub similarity: Option<f64>,
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternsResponse {
    pub job_id: String,
    pub similarity: f64,
    /// Patterns in the stored ranked list before filtering.
    pub ranked_patterns: usize,
    /// Representatives after filtering, before `top_k` truncation.
    pub total_rows: usize,
    pub rows: Vec<DedupedRow>,
}

/// Dedupes stored ranked rows; the same code path as an offline run.
pub fn filter_rows(ranked: &[PatternRow], test_size: usize, similarity: f64) -> rca_core::Result<Vec<DedupedRow>> {
    let stats = jobs::stats_from_rows(ranked, test_size)?;
    let deduped = dedupe(&stats, similarity)?;
    Ok(deduped
        .clusters
        .iter()
        .map(|c| DedupedRow {
            row: ranked[c.representative].clone(),
            cluster_size: c.members.len(),
            cluster_members: c.members.iter().map(|&m| ranked[m].pattern.clone()).collect(),
        })
        .collect())
}

fn done_job(app: &App, id: &str) -> Result<(JobRecord, Arc<Vec<PatternRow>>), ApiError> {
    let job = app.job(id).ok_or_else(|| ApiError::not_found(id))?;
    match (job.record.state, job.ranked) {
        (JobState::Done, Some(ranked)) => Ok((job.record, ranked)),
        (state, _) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "not_done",
            format!("job `{id}` is {}", serde_json::to_value(state).unwrap_or_default().as_str().unwrap_or("?")),
        )),
    }
}

async fn patterns(
    State(app): State<App>,
    Path(id): Path<String>,
    query: Result<Query<PatternsQuery>, QueryRejection>,
) -> Result<Json<PatternsResponse>, ApiError> {
    let Query(q) = query.map_err(|r| ApiError::field("query", r.body_text()))?;
    let similarity = q.similarity.unwrap_or(DEFAULT_SIMILARITY);
    if !(0.0..=1.0).contains(&similarity) {
        return Err(ApiError::field("similarity", format!("must be in [0, 1], got {similarity}")));
    }
    let (record, ranked) = done_job(&app, &id)?;
    let test_size = record.summary.as_ref().map_or(0, |s| s.test_size);
    let (rows, ranked_patterns) =
        tokio::task::spawn_blocking(move || filter_rows(&ranked, test_size, similarity).map(|r| (r, ranked.len())))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(ApiError::from_core)?;
    let total_rows = rows.len();
    let rows = match q.top_k {
        Some(k) => rows.into_iter().take(k).collect(),
        None => rows,
    };
    Ok(Json(PatternsResponse {
        job_id: id,
        similarity,
        ranked_patterns,
        total_rows,
        rows,
    }))
}

async fn links(State(app): State<App>, body: Result<Json<Value>, JsonRejection>) -> Result<Response, ApiError> {
    let req = LinkRequest::parse(&json_body(body)?)?;
    let analyses = req
        .job_ids
        .iter()
        .map(|id| {
            done_job(&app, id).map(|(_, ranked)| RegressionAnalysis {
                regression_id: id.clone(),
                rows: ranked.iter().map(PatternRow::to_labeled).collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let threshold = req.threshold;
    let report = tokio::task::spawn_blocking(move || {
        let index = build_index(&analyses)?;
        let vectors = analyses
            .iter()
            .map(|a| encode_regression(a, &index))
            .collect::<rca_core::Result<Vec<_>>>()?;
        link_regressions(&vectors, threshold)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(ApiError::from_core)?;
    Ok(Json(report).into_response())
}

/// Serves the API on `listener` until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, app: App) -> std::io::Result<()> {
    axum::serve(listener, app.router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
