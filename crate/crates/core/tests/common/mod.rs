#![allow(dead_code)]

use biolit_core::corpus::{AnnotationLabels, ArticleMetadata, License, PairRecord, PanelType, Source};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "cell", "tumor", "staining", "mitochondria", "confocal", "microscopy", "mouse", "liver", "ct",
    "scan", "lesion", "protein", "western", "blot", "gel", "chart", "diagram", "neuron", "axon",
    "tissue", "biopsy", "histology", "fluorescence", "label", "marker", "expression",
];

pub fn synthetic_pairs(n: usize, seed: u64) -> Vec<PairRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let licenses = [License::CcBy, License::CcByNc, License::Cc0, License::Other("custom".into())];
    (0..n)
        .map(|i| {
            let acc = format!("PMC{}", 1000 + i / 3);
            let mut meta = ArticleMetadata::new(acc.clone());
            meta.provenance.insert("accession_id".into(), Source::FileList);
            meta.journal = Some(format!("Journal {}", i % 7));
            meta.provenance.insert("journal".into(), Source::Nxml);
            meta.keywords = vec![WORDS[i % WORDS.len()].to_string()];
            let license = licenses[rng.random_range(0..licenses.len())].clone();
            meta.license = Some(license.clone());
            let words = rng.random_range(3..45);
            let caption = (0..words).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ");
            PairRecord {
                pair_id: format!("{acc}_F{}", i % 3 + 1),
                image_path: format!("{acc}/f{}.jpg", i % 3 + 1),
                caption,
                article_metadata: meta,
                annotation: (i % 2 == 0).then(|| AnnotationLabels {
                    global_concepts: vec!["imaging".into()],
                    local_concepts: vec![WORDS[i % 5].into()],
                    panel_type: if i % 4 == 0 { PanelType::MultiPanel } else { PanelType::SinglePanel },
                }),
                license: Some(license),
            }
        })
        .collect()
}

pub mod oracle;

/// Random word corpus; `vocab` controls how many distinct words appear.
pub fn random_corpus(n_docs: usize, vocab: usize, max_len: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(0..=max_len);
            // Zipf-ish skew so some words are frequent and some rare.
            let text = (0..len)
                .map(|_| {
                    let r: f64 = rng.random();
                    format!("w{}", ((r * r * vocab as f64) as usize).min(vocab - 1))
                })
                .collect::<Vec<_>>()
                .join(" ");
            (format!("doc{i:04}"), text)
        })
        .collect()
}

pub fn random_query(vocab: usize, len: usize, rng: &mut ChaCha8Rng) -> String {
    (0..len).map(|_| format!("w{}", rng.random_range(0..vocab + 3))).collect::<Vec<_>>().join(" ")
}

pub fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            if v.iter().any(|x| *x != 0.0) {
                break v;
            }
        })
        .collect()
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// The five hand-built article packages, ingested with their file list and
/// bibliographic records.
pub fn fixture_report() -> biolit_core::jats::IngestReport {
    use biolit_core::jats::{ingest_corpus, parse_file_list, EntrezSource};
    let root = fixtures_dir();
    let list = parse_file_list(&std::fs::read(root.join("file_list.csv")).unwrap()).unwrap();
    let entrez = EntrezSource::load(&root.join("entrez.json")).unwrap();
    ingest_corpus(&list, &root.join("packages"), Some(&entrez))
}
