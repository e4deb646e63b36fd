//! Representational geometry of hidden layers: kernel alignment with the
//! targets and inputs, parallelism score, cross-condition generalization,
//! and linear decodability of trained and untrained dichotomies.

mod decoder;
mod metrics;
mod report;

pub use decoder::{DecoderConfig, LinearDecoder};
pub use metrics::{
    alignment_pair, ccgp, ccgp_by_holdout, decode_dichotomy, enumerate_dichotomies,
    parallelism_by_pairings, parallelism_score, usable_contexts, Dichotomy, Scored,
};
pub use report::{full_report, GeometryReport, ReportOptions, METRIC_NAMES};
pub(crate) use report::csv_escape;
