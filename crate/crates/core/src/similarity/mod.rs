//! Normalized compression distance, compression ratios and distance matrices.

mod format;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::compressor::{truncate_input, CompressorKind};
use crate::{Error, Result};

/// A labelled byte string taking part in similarity computations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub family: Option<String>,
    #[serde(skip)]
    pub data: Vec<u8>,
    /// File path or session key the bytes came from.
    pub source: String,
    /// Set when the data was cut to [`crate::MAX_INPUT_LEN`].
    pub truncated: bool,
}

impl Sample {
    /// Builds a sample, truncating oversized data. Empty data is rejected.
    pub fn new(id: impl Into<String>, data: impl Into<Vec<u8>>) -> Result<Self> {
        let id = id.into();
        let mut data = data.into();
        if data.is_empty() {
            return Err(Error::InvalidSample { id, reason: "empty data".into() });
        }
        let truncated = truncate_input(&data).1;
        data.truncate(crate::MAX_INPUT_LEN);
        Ok(Self { source: id.clone(), id, family: None, data, truncated })
    }

    pub fn with_family(mut self, family: impl Into<String>) -> Self {
        self.family = Some(family.into());
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

fn check_non_empty(id: &str, data: &[u8]) -> Result<()> {
    if data.is_empty() {
        Err(Error::InvalidSample { id: id.to_string(), reason: "empty data".into() })
    } else {
        Ok(())
    }
}

/// C(xy) taken as the smaller of both concatenation orders, which makes the
/// distance exactly symmetric.
fn joint_complexity(x: &[u8], y: &[u8], kind: CompressorKind) -> usize {
    let mut buf = Vec::with_capacity(x.len() + y.len());
    buf.extend_from_slice(x);
    buf.extend_from_slice(y);
    let xy = kind.compressed_len(&buf);
    if x == y {
        return xy;
    }
    buf.clear();
    buf.extend_from_slice(y);
    buf.extend_from_slice(x);
    xy.min(kind.compressed_len(&buf))
}

fn ncd_from_parts(cx: usize, cy: usize, cxy: usize) -> f64 {
    let (lo, hi) = if cx <= cy { (cx, cy) } else { (cy, cx) };
    // RLE of a single run cannot be shorter than 2 bytes, so hi > 0 here.
    ((cxy as f64 - lo as f64) / hi as f64).max(0.0)
}

/// NCD(x, y) = (C(xy) - min(C(x), C(y))) / max(C(x), C(y)).
pub fn ncd(x: &Sample, y: &Sample, kind: CompressorKind) -> Result<f64> {
    check_non_empty(&x.id, &x.data)?;
    check_non_empty(&y.id, &y.data)?;
    Ok(ncd_raw(&x.data, &y.data, kind))
}

/// [`ncd`] over raw byte strings; each operand is capped at
/// [`crate::MAX_INPUT_LEN`] first.
pub fn ncd_bytes(x: &[u8], y: &[u8], kind: CompressorKind) -> Result<f64> {
    check_non_empty("x", x)?;
    check_non_empty("y", y)?;
    Ok(ncd_raw(truncate_input(x).0, truncate_input(y).0, kind))
}

fn ncd_raw(x: &[u8], y: &[u8], kind: CompressorKind) -> f64 {
    let cx = kind.compressed_len(x);
    let cy = if x == y { cx } else { kind.compressed_len(y) };
    ncd_from_parts(cx, cy, joint_complexity(x, y, kind))
}

/// R = C(payload) / |payload|. Values above 1 mean the payload grew.
pub fn compression_ratio(payload: &[u8], kind: CompressorKind) -> Result<f64> {
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let (payload, _) = truncate_input(payload);
    Ok(kind.compressed_len(payload) as f64 / payload.len() as f64)
}

/// Symmetric matrix of pairwise NCD values over a labelled sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub compressor: CompressorKind,
    pub params: String,
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Ids of samples whose data was truncated before compression.
    #[serde(default)]
    pub truncated: Vec<String>,
}

impl DistanceMatrix {
    /// Wraps precomputed values; checks shape and exact symmetry.
    pub fn from_values(labels: Vec<String>, values: Vec<Vec<f64>>, compressor: CompressorKind) -> Result<Self> {
        let n = labels.len();
        if values.len() != n || values.iter().any(|row| row.len() != n) {
            return Err(Error::Corpus(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if values[i][j] != values[j][i] {
                    return Err(Error::Corpus(format!("matrix is not symmetric at ({}, {})", labels[i], labels[j])));
                }
            }
        }
        check_unique(labels.iter().map(String::as_str))?;
        Ok(Self { compressor, params: compressor.params().to_string(), labels, values, truncated: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_unique<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Corpus(format!("duplicate sample id `{id}`")));
        }
    }
    Ok(())
}

/// Pairwise NCD over `corpus` using the default worker pool.
pub fn distance_matrix(corpus: &[Sample], kind: CompressorKind) -> Result<DistanceMatrix> {
    distance_matrix_with_workers(corpus, kind, None)
}

/// Pairwise NCD with an explicit worker count (`None` = all cores).
///
/// Cells are independent, so the result is bit-identical for any worker count.
pub fn distance_matrix_with_workers(
    corpus: &[Sample],
    kind: CompressorKind,
    workers: Option<usize>,
) -> Result<DistanceMatrix> {
    if corpus.len() < 2 {
        return Err(Error::Corpus(format!("need at least 2 samples, got {}", corpus.len())));
    }
    check_unique(corpus.iter().map(|s| s.id.as_str()))?;
    for s in corpus {
        check_non_empty(&s.id, &s.data)?;
    }

    let n = corpus.len();
    let single = map_cells(workers, n, |i| kind.compressed_len(&corpus[i].data));
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let cells = map_cells(workers, pairs.len(), |p| {
        let (i, j) = pairs[p];
        let joint = joint_complexity(&corpus[i].data, &corpus[j].data, kind);
        ncd_from_parts(single[i], single[j], joint)
    });

    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), &v) in pairs.iter().zip(&cells) {
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(DistanceMatrix {
        compressor: kind,
        params: kind.params().to_string(),
        labels: corpus.iter().map(|s| s.id.clone()).collect(),
        values,
        truncated: corpus.iter().filter(|s| s.truncated).map(|s| s.id.clone()).collect(),
    })
}

#[cfg(feature = "parallel")]
fn map_cells<T: Send>(workers: Option<usize>, count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    match workers {
        Some(1) => (0..count).map(f).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
            Err(_) => (0..count).map(f).collect(),
        },
        None => (0..count).into_par_iter().map(&f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T: Send>(_workers: Option<usize>, count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    (0..count).map(f).collect()
}
