use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("ingestion error at line {line}: {msg}")]
    Ingest { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape contract violated: {0}")]
    Contract(String),

    #[error("feature id {id} out of range (M = {m})")]
    Lookup { id: u32, m: u32 },

    #[error("invalid model composition: {0}")]
    Composition(String),

    #[error("training diverged at epoch {epoch} (lr = {lr}): loss is not finite")]
    Divergence { epoch: usize, lr: f64 },

    #[error("AUC undefined: labels contain only one class")]
    AucUndefined,

    #[error("metric over empty input")]
    EmptyMetricInput,

    #[error("probe inapplicable: {0}")]
    ProbeInapplicable(String),

    #[error("gradient check failed for {block}: {msg}")]
    GradCheck { block: String, msg: String },

    #[error("parameter audit mismatch: {0}")]
    Audit(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("cache format error: {0}")]
    Cache(String),

    #[error("export error: {0}")]
    Export(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
