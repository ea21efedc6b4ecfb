//! Browser bindings: a synthetic family heatmap with its fitted tree, a
//! compression ratio explorer and pairwise NCD. Every export returns a JSON
//! string; the plain functions behind them are usable natively.

pub mod layout;

use ncdkit::{complexity, distance_matrix, fit_tree, ncd_bytes, synth, CompressorKind, QuartetScore, SearchParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use crate::layout::{equal_angle, Layout};

/// Search effort used in the page; single-threaded in the browser.
pub const DEMO_SEARCH: SearchParams =
    SearchParams { restarts: 8, mutation_cap: 1500, seed: ncdkit::taxonomy::DEFAULT_SEED };

pub const MAX_SAMPLES: usize = 16;
pub const MAX_SAMPLE_KIB: usize = 32;

#[derive(Debug, Serialize)]
pub struct FamilyDemo {
    pub compressor: CompressorKind,
    pub labels: Vec<String>,
    pub families: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub newick: String,
    pub score: QuartetScore,
    pub layout: Layout,
}

/// Builds `families x variants` mutated specimens, their NCD matrix and the
/// best tree found for it.
pub fn family_demo(
    families: usize,
    variants: usize,
    kib: usize,
    mutation: f64,
    seed: u64,
    compressor: CompressorKind,
) -> Result<FamilyDemo, String> {
    let n = families * variants;
    if !(4..=MAX_SAMPLES).contains(&n) {
        return Err(format!("need between 4 and {MAX_SAMPLES} samples, got {n}"));
    }
    if !(1..=MAX_SAMPLE_KIB).contains(&kib) {
        return Err(format!("sample size must be 1 to {MAX_SAMPLE_KIB} KiB"));
    }
    if !(0.0..=1.0).contains(&mutation) {
        return Err("mutation must be a fraction in [0, 1]".into());
    }
    let corpus = synth::family_corpus(families, variants, kib * 1024, mutation, seed);
    let matrix = distance_matrix(&corpus, compressor).map_err(|e| e.to_string())?;
    let (tree, score) = fit_tree(&matrix, &SearchParams { seed, ..DEMO_SEARCH }).map_err(|e| e.to_string())?;
    Ok(FamilyDemo {
        compressor,
        families: corpus.iter().map(|s| s.family.clone().unwrap_or_default()).collect(),
        labels: matrix.labels.clone(),
        matrix: matrix.values,
        newick: tree.to_newick(),
        score,
        layout: equal_angle(&tree),
    })
}

#[derive(Debug, Serialize)]
pub struct RatioRow {
    pub compressor: CompressorKind,
    pub compressed_len: usize,
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct RatioReport {
    pub len: usize,
    /// Bytes overwritten with random values before measuring.
    pub noise_fraction: f64,
    pub rows: Vec<RatioRow>,
}

/// Compression ratio of `data` under every backend after replacing
/// `noise_fraction` of its bytes with random ones.
pub fn ratio_report(data: &[u8], noise_fraction: f64, seed: u64) -> Result<RatioReport, String> {
    if data.is_empty() {
        return Err("input is empty".into());
    }
    if !(0.0..=1.0).contains(&noise_fraction) {
        return Err("noise fraction must be in [0, 1]".into());
    }
    let noisy = synth::mutate(data, noise_fraction, seed);
    let rows = CompressorKind::ALL
        .into_iter()
        .map(|kind| {
            let c = complexity(&noisy, kind);
            RatioRow { compressor: kind, compressed_len: c, ratio: c as f64 / noisy.len() as f64 }
        })
        .collect();
    Ok(RatioReport { len: noisy.len(), noise_fraction, rows })
}

#[derive(Debug, Serialize)]
pub struct PairRow {
    pub compressor: CompressorKind,
    pub cx: usize,
    pub cy: usize,
    pub ncd: f64,
}

/// NCD of two inputs under every backend.
pub fn pair_report(x: &[u8], y: &[u8]) -> Result<Vec<PairRow>, String> {
    CompressorKind::ALL
        .into_iter()
        .map(|kind| {
            let ncd = ncd_bytes(x, y, kind).map_err(|e| e.to_string())?;
            Ok(PairRow { compressor: kind, cx: complexity(x, kind), cy: complexity(y, kind), ncd })
        })
        .collect()
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = familyDemo)]
pub fn family_demo_js(
    families: u32,
    variants: u32,
    kib: u32,
    mutation: f64,
    seed: u32,
    compressor: &str,
) -> Result<String, JsError> {
    let kind: CompressorKind = compressor.parse().map_err(|e: ncdkit::Error| JsError::new(&e.to_string()))?;
    to_json(family_demo(families as usize, variants as usize, kib as usize, mutation, seed as u64, kind))
}

#[wasm_bindgen(js_name = ratioReport)]
pub fn ratio_report_js(data: &[u8], noise_fraction: f64, seed: u32) -> Result<String, JsError> {
    to_json(ratio_report(data, noise_fraction, seed as u64))
}

#[wasm_bindgen(js_name = pairReport)]
pub fn pair_report_js(x: &[u8], y: &[u8]) -> Result<String, JsError> {
    to_json(pair_report(x, y))
}
