use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown compressor `{0}` (expected deflate, bwt or rle)")]
    UnknownCompressor(String),

    #[error("invalid sample `{id}`: {reason}")]
    InvalidSample { id: String, reason: String },

    #[error("compression ratio is undefined for an empty payload")]
    EmptyPayload,

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("too few leaves: got {got}, need at least {min}")]
    TooFewLeaves { got: usize, min: usize },

    #[error("matrix format error at line {line}: {msg}")]
    MatrixFormat { line: usize, msg: String },

    #[error("capture format error{}: {msg}", packet.map(|p| format!(" at packet {p}")).unwrap_or_default())]
    CaptureFormat { packet: Option<usize>, msg: String },

    #[error("rule parse error at line {line}: {msg}")]
    RuleParse { line: usize, msg: String },

    #[error("cannot load rule reference {}: {source}", path.display())]
    RuleLoad {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
