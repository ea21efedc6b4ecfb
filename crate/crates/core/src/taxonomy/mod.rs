//! Tree fitting with the quartet method and nearest-NCD family classification.

mod classify;
mod quartet;
mod search;
mod tree;

pub use classify::{
    classify, classify_by, evaluate_classifier, Assignment, Bucket, ClassificationResult, EvaluationReport, Outcome,
    DEFAULT_UNKNOWN_THRESHOLD,
};
pub use quartet::{quartet_score, QuartetScore, QuartetTable};
pub use search::{fit_tree, neighbor_joining, SearchParams, DEFAULT_SEED};
pub use tree::{caterpillar, UnrootedTree};
