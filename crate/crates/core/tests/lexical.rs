mod common;

use biolit_core::lexical::{build_index, Bm25Params, LexicalIndex};
use common::oracle::{naive_bm25, naive_tokens, naive_vocab};
use common::{random_corpus, random_query};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture20() -> Vec<(String, String)> {
    [
        "Mitochondria staining in HeLa cells with MitoTracker.",
        "Confocal microscopy of mitochondria in neurons.",
        "Western blot of mitochondrial proteins.",
        "Histology staining of liver tissue sections.",
        "Fluorescence staining of nuclei and mitochondria.",
        "CT scan of the chest showing a lesion.",
        "Mouse liver biopsy with H&E staining.",
        "Axon staining and neuron morphology.",
        "Mitochondria mitochondria mitochondria: fission and fusion.",
        "Gel electrophoresis of purified protein.",
        "Tumor tissue microscopy with immunostaining.",
        "Cell cycle diagram.",
        "Expression levels of marker genes in tumor cells.",
        "Staining protocol for confocal microscopy.",
        "MRI of the brain.",
        "Electron microscopy of mitochondria cristae.",
        "Bar chart of protein expression.",
        "Staining with DAPI and phalloidin in cells.",
        "Schematic of the experimental workflow.",
        "Live-cell imaging of mitochondria staining dynamics.",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| (format!("cap{i:02}"), t.to_string()))
    .collect()
}

fn assert_matches_oracle(idx: &LexicalIndex, docs: &[(String, String)], q: &str, p: Bm25Params) {
    let got = idx.query(q, docs.len() + 5);
    let want = naive_bm25(docs, q, p.k1, p.b, p.min_df);
    assert_eq!(got.len(), want.len(), "query {q:?}");
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g.0, w.0, "query {q:?}");
        assert!((g.1 - w.1).abs() < 1e-9, "{} vs {}", g.1, w.1);
    }
}

#[test]
fn fixture_partial_scores_match_brute_force() {
    let docs = fixture20();
    let p = Bm25Params { min_df: 2, ..Default::default() };
    let idx = build_index(docs.clone(), p).unwrap();
    for term in &idx.vocabulary.terms {
        let id = idx.vocabulary.term_id(term).unwrap();
        for (d, (key, _)) in docs.iter().enumerate() {
            let want = naive_bm25(&docs, term, p.k1, p.b, p.min_df)
                .into_iter()
                .find(|h| &h.0 == key)
                .map_or(0.0, |h| h.1);
            assert!((idx.matrix.score(id, d as u32) - want).abs() < 1e-9, "{term} {key}");
        }
    }
}

#[test]
fn fixture_query_ranking_matches_oracle() {
    let docs = fixture20();
    let p = Bm25Params::default();
    let idx = build_index(docs.clone(), p).unwrap();
    let hits = idx.query("mitochondria staining", 20);
    let top = &docs.iter().find(|d| d.0 == hits[0].0).unwrap().1.to_lowercase();
    assert!(top.contains("mitochondria") && top.contains("staining"));
    assert_matches_oracle(&idx, &docs, "mitochondria staining", p);
    assert_matches_oracle(&idx, &docs, "microscopy of cells", p);
    assert!(idx.query("cristae", 20).is_empty());
}

#[test]
fn vocabulary_equals_document_frequency_rule() {
    let docs = random_corpus(200, 80, 30, 4);
    for min_df in [1, 5, 20] {
        let idx = build_index(docs.clone(), Bm25Params { min_df, ..Default::default() }).unwrap();
        let mut got: Vec<String> = idx.vocabulary.terms.clone();
        let mut want: Vec<String> = naive_vocab(&docs, min_df).into_iter().collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert!(idx.vocabulary.doc_freq.iter().all(|&d| d >= min_df));
    }
}

#[test]
fn marker_needs_five_documents() {
    for (copies, present) in [(4, false), (5, true)] {
        let docs: Vec<(String, String)> = (0..12)
            .map(|i| (format!("d{i}"), if i < copies { "filler zebrafish".into() } else { "filler".into() }))
            .collect();
        let idx = build_index(docs, Bm25Params::default()).unwrap();
        assert_eq!(idx.vocabulary.contains("zebrafish"), present);
    }
}

#[test]
fn top_k_larger_than_corpus_returns_positive_hits() {
    let docs = fixture20();
    let idx = build_index(docs.clone(), Bm25Params { min_df: 1, ..Default::default() }).unwrap();
    let hits = idx.query("staining", 1000);
    let expected = docs.iter().filter(|(_, t)| naive_tokens(t).contains(&"staining".to_string())).count();
    assert_eq!(hits.len(), expected);
    assert!(hits.iter().all(|h| h.1 > 0.0));
}

#[test]
fn round_trip_on_disk() {
    let docs = random_corpus(300, 60, 40, 8);
    let idx = build_index(docs, Bm25Params::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    idx.save(dir.path()).unwrap();
    let back = LexicalIndex::load(dir.path(), 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let q = random_query(60, 4, &mut rng);
        let (a, b) = (idx.query(&q, 10), back.query(&q, 10));
        assert_eq!(a.iter().map(|h| &h.0).collect::<Vec<_>>(), b.iter().map(|h| &h.0).collect::<Vec<_>>());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.1 - y.1).abs() < 1e-6);
        }
    }
    let one = LexicalIndex::load(dir.path(), 1).unwrap();
    assert_eq!(one, LexicalIndex::load(dir.path(), usize::MAX).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_equivalence(seed in any::<u64>(), n in 1usize..120, min_df in 1usize..6) {
        let docs = random_corpus(n, 40, 25, seed);
        let p = Bm25Params { min_df, ..Default::default() };
        let idx = build_index(docs.clone(), p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for len in 1..6 {
            assert_matches_oracle(&idx, &docs, &random_query(40, len, &mut rng), p);
        }
    }

    #[test]
    fn extra_occurrence_never_lowers_score(seed in any::<u64>(), target in 0usize..40, word in 0usize..30) {
        let mut docs = random_corpus(40, 30, 20, seed);
        let term = format!("w{word}");
        let p = Bm25Params { min_df: 1, ..Default::default() };
        let before = naive_bm25(&docs, &term, p.k1, p.b, 1).into_iter().find(|h| h.0 == docs[target].0).map_or(0.0, |h| h.1);
        docs[target].1.push_str(&format!(" {term}"));
        let idx = build_index(docs.clone(), p).unwrap();
        let after = idx.query(&term, 100).into_iter().find(|h| h.0 == docs[target].0).map_or(0.0, |h| h.1);
        prop_assert!(after >= before - 1e-12, "{before} -> {after}");
    }
}
