use std::path::Path;

use ncdkit::similarity::distance_matrix_with_workers;
use ncdkit::{fit_tree, parse_rules, run_detection, synth, CompressorKind, SearchParams};

#[test]
fn matrix_is_worker_independent() {
    let corpus = synth::family_corpus(3, 3, 4096, 0.02, 8);
    for kind in CompressorKind::ALL {
        let one = distance_matrix_with_workers(&corpus, kind, Some(1)).unwrap();
        for w in [2, 3, 8] {
            let many = distance_matrix_with_workers(&corpus, kind, Some(w)).unwrap();
            assert_eq!(one.to_text().unwrap(), many.to_text().unwrap());
        }
    }
}

#[test]
fn tree_search_repeats() {
    let corpus = synth::family_corpus(3, 3, 4096, 0.02, 9);
    let m = distance_matrix_with_workers(&corpus, CompressorKind::Deflate, None).unwrap();
    let p = SearchParams { restarts: 8, mutation_cap: 400, seed: 77 };
    let a = fit_tree(&m, &p).unwrap();
    let b = fit_tree(&m, &p).unwrap();
    assert_eq!(a.0.to_newick(), b.0.to_newick());
    assert_eq!(a.1, b.1);
}

#[test]
fn detection_output_repeats() {
    let rules = parse_rules(
        "rule low ports=22 detector=ratio more_than=0.9\nrule any ports=any detector=ratio more_than=0.5 less_than=0.99",
        Path::new("."),
    )
    .unwrap();
    let mut scripts: Vec<_> = (0..6).map(|i| synth::text_session(i, 22, 2048)).collect();
    scripts.extend((0..6).map(|i| synth::rng_session(i, 22, 2048, i as u64)));
    let cap = synth::capture(&scripts);
    let render = || {
        let r = run_detection(&cap, &rules, 64).unwrap();
        let mut out = Vec::new();
        r.write_alerts(&mut out).unwrap();
        r.write_summary(&mut out).unwrap();
        out
    };
    assert_eq!(render(), render());
}
