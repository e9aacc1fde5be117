use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("record at line {line_no} has no identifier")]
    MissingIdentifier { line_no: u64 },
    #[error("no embedding row for template {template_id}")]
    MissingEmbedding { template_id: usize },
    #[error("template {template_id} is outside a catalog of {catalog_size}")]
    TemplateOutOfRange { template_id: usize, catalog_size: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("shape mismatch in {op}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("anomaly score {score:e} is too small to attribute")]
    ZeroScore { score: f64 },
    #[error("readout `{0}` is not attributable; use mean or sum")]
    NotAttributable(&'static str),
    #[error("scored set needs at least one positive and one negative label")]
    OneClassOnly,
    #[error("scored set has no positive labels")]
    NoPositives,
    #[error("anomaly pool too small: need {needed}, have {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
