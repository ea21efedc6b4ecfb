//! Nearest-neighbour family assignment and its leave-one-out evaluation.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::compressor::CompressorKind;
use crate::similarity::{ncd, Sample};
use crate::{Error, Result};

/// A query at or beyond this NCD from its best match is left unassigned.
pub const DEFAULT_UNKNOWN_THRESHOLD: f64 = 0.65;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignment {
    Family(String),
    Unknown,
}

impl Assignment {
    pub fn family(&self) -> Option<&str> {
        match self {
            Assignment::Family(f) => Some(f),
            Assignment::Unknown => None,
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Family(name) => f.write_str(name),
            Assignment::Unknown => f.write_str("UNKNOWN"),
        }
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub query_id: String,
    pub best_match_id: String,
    pub ncd_value: f64,
    pub assigned_family: Assignment,
}

/// [`classify`] with an arbitrary distance. Only the ordering of distances
/// matters for the best match; ties go to the smallest id.
pub fn classify_by<F>(query: &Sample, corpus: &[Sample], threshold: f64, distance: F) -> Result<ClassificationResult>
where
    F: Fn(&Sample, &Sample) -> Result<f64>,
{
    let mut best: Option<(&Sample, f64)> = None;
    for cand in corpus.iter().filter(|c| c.id != query.id) {
        if cand.family.is_none() {
            return Err(Error::Corpus(format!("corpus sample `{}` has no family", cand.id)));
        }
        let d = distance(query, cand)?;
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && cand.id < b.id),
        };
        if better {
            best = Some((cand, d));
        }
    }
    let (m, d) = best.ok_or_else(|| Error::Corpus("no corpus samples to compare against".into()))?;
    let assigned_family =
        if d < threshold { Assignment::Family(m.family.clone().expect("checked above")) } else { Assignment::Unknown };
    Ok(ClassificationResult { query_id: query.id.clone(), best_match_id: m.id.clone(), ncd_value: d, assigned_family })
}

/// Assigns `query` the family of its NCD-nearest corpus member, or
/// [`Assignment::Unknown`] when that distance is `>= threshold`. Corpus
/// members sharing the query's id are skipped.
pub fn classify(
    query: &Sample,
    corpus: &[Sample],
    kind: CompressorKind,
    threshold: f64,
) -> Result<ClassificationResult> {
    classify_by(query, corpus, threshold, |a, b| ncd(a, b, kind))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Bucket {
    pub count: usize,
    /// Mean best-match NCD over the bucket, `None` when empty.
    pub mean_ncd: Option<f64>,
}

impl Bucket {
    fn from_values(values: &[f64]) -> Self {
        Self {
            count: values.len(),
            mean_ncd: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    #[serde(flatten)]
    pub result: ClassificationResult,
    pub true_family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub total: usize,
    pub threshold: f64,
    pub compressor: CompressorKind,
    pub good_family: Bucket,
    pub bad_family: Bucket,
    pub no_family: Bucket,
    pub outcomes: Vec<Outcome>,
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let avg = |b: &Bucket| b.mean_ncd.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
        writeln!(f, "{:<12} {:>8} {:>12}", "Match", "Samples", "Average NCD")?;
        writeln!(f, "{:<12} {:>8} {:>12}", "Good family", self.good_family.count, avg(&self.good_family))?;
        writeln!(f, "{:<12} {:>8} {:>12}", "Bad family", self.bad_family.count, avg(&self.bad_family))?;
        writeln!(f, "{:<12} {:>8} {:>12}", "No family", self.no_family.count, avg(&self.no_family))?;
        write!(f, "{:<12} {:>8}", "Total", self.total)
    }
}

/// Leave-one-out: every sample is classified against all the others.
pub fn evaluate_classifier(corpus: &[Sample], kind: CompressorKind, threshold: f64) -> Result<EvaluationReport> {
    if corpus.len() < 2 {
        return Err(Error::Corpus(format!("need at least 2 samples, got {}", corpus.len())));
    }
    let mut ids = std::collections::HashSet::new();
    for s in corpus {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::Corpus(format!("duplicate sample id `{}`", s.id)));
        }
        if s.family.is_none() {
            return Err(Error::Corpus(format!("sample `{}` has no family", s.id)));
        }
    }

    let results = map_queries(corpus, |q| classify(q, corpus, kind, threshold));
    let mut outcomes = Vec::with_capacity(corpus.len());
    let (mut good, mut bad, mut none) = (Vec::new(), Vec::new(), Vec::new());
    for (q, r) in corpus.iter().zip(results) {
        let r = r?;
        let truth = q.family.clone().expect("checked above");
        match r.assigned_family.family() {
            Some(f) if f == truth => good.push(r.ncd_value),
            Some(_) => bad.push(r.ncd_value),
            None => none.push(r.ncd_value),
        }
        outcomes.push(Outcome { result: r, true_family: truth });
    }
    Ok(EvaluationReport {
        total: corpus.len(),
        threshold,
        compressor: kind,
        good_family: Bucket::from_values(&good),
        bad_family: Bucket::from_values(&bad),
        no_family: Bucket::from_values(&none),
        outcomes,
    })
}

#[cfg(feature = "parallel")]
fn map_queries<T: Send>(corpus: &[Sample], f: impl Fn(&Sample) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    corpus.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_queries<T: Send>(corpus: &[Sample], f: impl Fn(&Sample) -> T + Sync) -> Vec<T> {
    corpus.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn sample(id: &str, fam: &str, data: Vec<u8>) -> Sample {
        Sample::new(id, data).unwrap().with_family(fam)
    }

    fn small_corpus() -> Vec<Sample> {
        let base_a = synth::specimen(20 * 1024, 11);
        let base_b = synth::specimen(20 * 1024, 12);
        vec![
            sample("A1", "famA", synth::mutate(&base_a, 0.01, 1)),
            sample("A2", "famA", synth::mutate(&base_a, 0.01, 2)),
            sample("B1", "famB", synth::mutate(&base_b, 0.01, 3)),
        ]
    }

    #[test]
    fn identical_query_gets_its_family() {
        let corpus = small_corpus();
        let q = sample("query", "?", corpus[2].data.clone());
        let r = classify(&q, &corpus, CompressorKind::Deflate, DEFAULT_UNKNOWN_THRESHOLD).unwrap();
        assert_eq!(r.best_match_id, "B1");
        assert_eq!(r.assigned_family, Assignment::Family("famB".into()));
        assert!(r.ncd_value <= 0.15);
    }

    #[test]
    fn mutated_query_goes_to_its_family() {
        let corpus = small_corpus();
        let q = sample("query", "?", synth::mutate(&corpus[0].data, 0.02, 99));
        let r = classify(&q, &corpus, CompressorKind::Deflate, DEFAULT_UNKNOWN_THRESHOLD).unwrap();
        assert_eq!(r.assigned_family, Assignment::Family("famA".into()));
    }

    #[test]
    fn random_query_is_unknown_unless_threshold_is_raised() {
        let corpus = small_corpus();
        let q = sample("query", "?", synth::random_bytes(20 * 1024, 5));
        let r = classify(&q, &corpus, CompressorKind::Deflate, DEFAULT_UNKNOWN_THRESHOLD).unwrap();
        assert_eq!(r.assigned_family, Assignment::Unknown);
        assert!(r.ncd_value >= 0.65);
        let r = classify(&q, &corpus, CompressorKind::Deflate, 1.5).unwrap();
        assert!(matches!(r.assigned_family, Assignment::Family(_)));
    }

    #[test]
    fn ties_break_on_smallest_id_and_query_is_excluded() {
        let data = synth::prose(4096, 1);
        let corpus = vec![
            sample("zeta", "z", data.clone()),
            sample("alpha", "a", data.clone()),
            sample("q", "self", data.clone()),
        ];
        let q = sample("q", "self", data);
        for _ in 0..3 {
            let r = classify(&q, &corpus, CompressorKind::Deflate, 0.65).unwrap();
            assert_eq!(r.best_match_id, "alpha");
        }
    }

    #[test]
    fn scaled_distances_keep_the_argmin() {
        let corpus = small_corpus();
        let q = sample("query", "?", synth::mutate(&corpus[1].data, 0.02, 7));
        let plain = classify(&q, &corpus, CompressorKind::Deflate, 0.65).unwrap();
        for k in [0.1, 3.0, 1000.0] {
            let scaled = classify_by(&q, &corpus, 0.65, |a, b| Ok(k * ncd(a, b, CompressorKind::Deflate)?)).unwrap();
            assert_eq!(scaled.best_match_id, plain.best_match_id);
        }
    }

    #[test]
    fn corpus_errors() {
        let q = sample("q", "x", b"abc".to_vec());
        assert!(matches!(classify(&q, &[], CompressorKind::Rle, 0.65), Err(Error::Corpus(_))));
        assert!(matches!(classify(&q, std::slice::from_ref(&q), CompressorKind::Rle, 0.65), Err(Error::Corpus(_))));
        assert!(matches!(evaluate_classifier(&[q], CompressorKind::Rle, 0.65), Err(Error::Corpus(_))));
    }

    #[test]
    fn leave_one_out_buckets_add_up() {
        let mut corpus = small_corpus();
        corpus.push(sample("R", "famR", synth::random_bytes(20 * 1024, 3)));
        let r = evaluate_classifier(&corpus, CompressorKind::Deflate, 0.65).unwrap();
        assert_eq!(r.good_family.count + r.bad_family.count + r.no_family.count, r.total);
        assert_eq!(r.good_family.count, 2);
        assert_eq!(r.no_family.count, 2);
        let table = r.to_string();
        assert!(table.contains("Good family") && table.contains("No family"));
    }
}
