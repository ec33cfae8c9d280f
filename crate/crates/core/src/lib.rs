//! Statistical root-cause analysis over event traces.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`trace_store`] ingests JSON-Lines trace records into interned
//!    [`TraceGroup`]s, with [`discretize`] turning numeric events into bin labels.
//! 2. [`pattern_miner`] enumerates frequent sequential patterns with
//!    prefix-projected mining, keeping the supporting trace set of every pattern.
//! 3. [`rca_ranker`] scores each pattern by precision, recall and F1 against a
//!    control group and ranks them; [`redundancy_filter`] collapses patterns
//!    supported by near-identical trace sets.
//! 4. [`regression_linker`] embeds whole analyses into a shared vector space and
//!    links regressions that sit close together in cosine distance.
//!
//! [`pipeline`] wires the stages together and produces the versioned
//! [`report::Report`] consumed by the CLI and the HTTP service.

pub mod discretize;
pub mod error;
pub mod pattern_miner;
pub mod pipeline;
pub mod rca_ranker;
pub mod redundancy_filter;
pub mod regression_linker;
pub mod report;
pub mod synth;
pub mod trace_store;

pub use discretize::{apply_binning, compute_bins, BinRule, BinStrategy, BinningSpec};
pub use error::{Error, Result};
pub use pattern_miner::{
    brute_force_patterns, extract_patterns, project_database, support_of, MinSupport,
    MinedPattern, MiningParams, Pattern, ProjectedDatabase,
};
pub use rca_ranker::{analyze, Analysis, AnalysisMeta, ControlMode, PatternStats};
pub use redundancy_filter::{dedupe, jaccard, Deduped, PatternCluster};
pub use regression_linker::{
    build_index, cosine_distance, encode_regression, link_regressions, GlobalPatternIndex,
    LinkReport, RegressionAnalysis, RegressionVector,
};
pub use trace_store::{
    ingest_records, parse_records, EventToken, GroupRole, RawEvent, Trace, TraceGroup,
    TraceRecord, Vocabulary,
};
