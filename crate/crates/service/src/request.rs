//! Request bodies, validated field by field so errors can name the offending field.

use rca_core::pipeline::RunConfig;
use rca_core::{BinRule, BinStrategy, ControlMode, MinSupport, TraceRecord};
use serde_json::{Map, Value};

use crate::error::ApiError;

#[derive(Debug, Clone)]
pub struct AnalysisRequest {
    pub test: Vec<TraceRecord>,
    pub control: Vec<TraceRecord>,
    pub config: RunConfig,
}

fn object(body: &Value) -> Result<&Map<String, Value>, ApiError> {
    body.as_object()
        .ok_or_else(|| ApiError::field("body", "expected a JSON object"))
}

fn records(obj: &Map<String, Value>, field: &'static str) -> Result<Vec<TraceRecord>, ApiError> {
    let items = match obj.get(field) {
        None | Some(Value::Null) => return Err(ApiError::field(field, "required")),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(ApiError::field(field, "expected an array of trace records")),
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            serde_json::from_value(item.clone())
                .map_err(|e| ApiError::field(format!("{field}[{i}]"), e.to_string()))
        })
        .collect()
}

fn number(obj: &Map<String, Value>, field: &'static str) -> Result<Option<f64>, ApiError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| ApiError::field(field, "expected a number")),
    }
}

fn text<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<Option<&'a str>, ApiError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ApiError::field(field, "expected a string")),
    }
}

const ANALYSIS_FIELDS: &[&str] = &[
    "test",
    "control",
    "min_support",
    "max_len",
    "similarity",
    "control_mode",
    "binning",
    "bins",
];

impl AnalysisRequest {
    pub fn parse(body: &Value) -> Result<Self, ApiError> {
        let obj = object(body)?;
        if let Some(k) = obj.keys().find(|k| !ANALYSIS_FIELDS.contains(&k.as_str())) {
            return Err(ApiError::field(k.clone(), "unknown field"));
        }
        // an empty test group is accepted here and fails when the job runs
        let test = records(obj, "test")?;
        let control = records(obj, "control")?;

        let min_support = number(obj, "min_support")?
            .ok_or_else(|| ApiError::field("min_support", "required"))?;
        let mut config = RunConfig::new(MinSupport::from_value(min_support).map_err(ApiError::from_core)?);
        if let Some(v) = obj.get("max_len").filter(|v| !v.is_null()) {
            config.max_len = v
                .as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| ApiError::field("max_len", "expected a positive integer"))? as usize;
        }
        if let Some(s) = number(obj, "similarity")? {
            config.similarity = s;
        }
        if let Some(m) = text(obj, "control_mode")? {
            config.control_mode = m
                .parse::<ControlMode>()
                .map_err(ApiError::from_core)?;
        }
        if let Some(b) = text(obj, "binning")? {
            config.binning = b.parse::<BinStrategy>().map_err(ApiError::from_core)?;
        }
        match obj.get("bins") {
            None | Some(Value::Null) => {}
            Some(Value::String(s)) => config.bins = s.parse::<BinRule>().map_err(ApiError::from_core)?,
            Some(v) => {
                let n = v
                    .as_u64()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| ApiError::field("bins", "expected sturges, fd or a positive integer"))?;
                config.bins = BinRule::Explicit(n as usize);
            }
        }
        config.validate().map_err(ApiError::from_core)?;
        Ok(AnalysisRequest { test, control, config })
    }
}

#[derive(Debug, Clone)]
pub struct LinkRequest {
    pub job_ids: Vec<String>,
    pub threshold: f64,
}

impl LinkRequest {
    pub fn parse(body: &Value) -> Result<Self, ApiError> {
        let obj = object(body)?;
        if let Some(k) = obj.keys().find(|k| !["job_ids", "threshold"].contains(&k.as_str())) {
            return Err(ApiError::field(k.clone(), "unknown field"));
        }
        let ids = match obj.get("job_ids") {
            Some(Value::Array(ids)) if !ids.is_empty() => ids,
            Some(Value::Array(_)) => return Err(ApiError::field("job_ids", "must not be empty")),
            None | Some(Value::Null) => return Err(ApiError::field("job_ids", "required")),
            Some(_) => return Err(ApiError::field("job_ids", "expected an array of job ids")),
        };
        let job_ids = ids
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str()
                    .map(String::from)
                    .ok_or_else(|| ApiError::field(format!("job_ids[{i}]"), "expected a string"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let threshold = number(obj, "threshold")?.unwrap_or(rca_core::regression_linker::DEFAULT_LINK_THRESHOLD);
        if !(0.0..=2.0).contains(&threshold) {
            return Err(ApiError::field("threshold", format!("must be in [0, 2], got {threshold}")));
        }
        Ok(LinkRequest { job_ids, threshold })
    }
}
