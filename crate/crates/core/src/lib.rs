//! Compression-based similarity toolkit.
//!
//! Kolmogorov complexity is approximated by the length of a real compressor's
//! output. On top of that estimate the crate builds:
//!
//! * [`similarity`]: the normalized compression distance (NCD), compression
//!   ratios and pairwise distance matrices,
//! * [`taxonomy`]: quartet-scored tree fitting and nearest-neighbour family
//!   classification of specimens,
//! * [`traffic`]: TCP session reassembly from pcap captures, per-port
//!   compressibility profiles, and ratio-window / NCD-proximity detection rules.
//!
//! [`synth`] generates the deterministic synthetic corpora and captures used
//! by the tests, the CLI fixtures and the browser demo.

pub mod compressor;
mod error;
pub mod similarity;
pub mod synth;
pub mod taxonomy;
pub mod traffic;

pub use compressor::{complexity, rle_decode, rle_encode, CompressorKind, MAX_INPUT_LEN};
pub use error::{Error, Result};
pub use similarity::{compression_ratio, distance_matrix, ncd, ncd_bytes, DistanceMatrix, Sample};
pub use taxonomy::{
    classify, evaluate_classifier, fit_tree, quartet_score, ClassificationResult, EvaluationReport, QuartetScore,
    SearchParams, UnrootedTree, DEFAULT_UNKNOWN_THRESHOLD,
};
pub use traffic::{
    load_rules, parse_rules, profile, reassemble, run_detection, Alert, DetectionRule, Session, DEFAULT_LESS_THAN,
    DEFAULT_MIN_PAYLOAD,
};
