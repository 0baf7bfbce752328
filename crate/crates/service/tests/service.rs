use std::path::{Path, PathBuf};
use std::sync::Arc;

use biolit_core::annotate::{Embedder, HashEmbedder};
use biolit_core::corpus::{ArticleMetadata, ArticleRecord, License, PairRecord};
use biolit_core::jats::{ingest_corpus, parse_file_list, EntrezSource};
use biolit_core::lexical::{Bm25Params, LexicalIndex};
use biolit_core::rag::{run_chain, ChainOptions, InProcessArticles, MockLlm, ServiceArticles};
use biolit_core::shard::{stream_shards, write_shards, ShardManifest, MANIFEST_FILE};
use biolit_core::vector::{rrf_fuse, FusionConfig, VectorIndex};
use biolit_service::{layout, serve, ServiceConfig, ServiceError, ServiceHandle, TextEmbedderConfig};
use serde_json::{json, Value};
use tempfile::TempDir;

const WORDS: &[&str] = &[
    "confocal", "image", "tumor", "section", "stained", "mouse", "liver", "scan", "axial", "ct", "western", "blot",
];
const DIM: usize = 16;
const EMBED_SEED: u64 = 3;

fn params() -> Bm25Params {
    Bm25Params { min_df: 2, ..Bm25Params::default() }
}

fn pairs() -> Vec<PairRecord> {
    let mut state: u64 = 17;
    let mut next = move |n: usize| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % n
    };
    (0..20)
        .map(|i| {
            let len = 4 + next(7);
            let caption = (0..len).map(|_| WORDS[next(WORDS.len())]).collect::<Vec<_>>().join(" ");
            let acc = format!("PMC9{:03}", i / 2);
            PairRecord {
                pair_id: format!("{acc}_F{}", i % 2 + 1),
                image_path: format!("{acc}/f{}.jpg", i % 2 + 1),
                caption,
                article_metadata: ArticleMetadata::new(acc),
                annotation: None,
                license: Some(License::CcBy),
            }
        })
        .collect()
}

fn articles() -> Vec<ArticleRecord> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let list = parse_file_list(&std::fs::read(root.join("file_list.csv")).unwrap()).unwrap();
    let entrez = EntrezSource::load(&root.join("entrez.json")).unwrap();
    ingest_corpus(&list, &root.join("packages"), Some(&entrez)).records
}

struct Fixture {
    _dir: TempDir,
    index_dir: PathBuf,
    manifest_path: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let shard_dir = dir.path().join("shards");
    write_shards(pairs(), &shard_dir, 8, None).unwrap();
    let index_dir = dir.path().join("index");
    let embedder = HashEmbedder::new(DIM, EMBED_SEED);
    let summary = layout::build_index_dir(&index_dir, &pairs(), &articles(), params(), Some(&embedder)).unwrap();
    assert_eq!((summary.caption_docs, summary.image_vectors, summary.article_docs), (20, 20, 5));
    Fixture { _dir: dir, index_dir, manifest_path: shard_dir.join(MANIFEST_FILE) }
}

fn config(f: &Fixture) -> ServiceConfig {
    ServiceConfig {
        bind: "127.0.0.1:0".into(),
        index_dir: f.index_dir.clone(),
        shard_manifest: Some(f.manifest_path.clone()),
        hydration_pool: 4,
        ..ServiceConfig::default()
    }
}

async fn start(f: &Fixture) -> ServiceHandle {
    serve(&config(f)).await.unwrap()
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

async fn post(h: &ServiceHandle, body: Value) -> (u16, Value) {
    let url = format!("http://{}/search", h.addr);
    tokio::task::spawn_blocking(move || {
        let mut resp = agent().post(&url).send_json(&body).unwrap();
        let status = resp.status().as_u16();
        (status, serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap())
    })
    .await
    .unwrap()
}

async fn get(h: &ServiceHandle, path: &str) -> (u16, Value) {
    let url = format!("http://{}{path}", h.addr);
    tokio::task::spawn_blocking(move || {
        let mut resp = agent().get(&url).call().unwrap();
        let status = resp.status().as_u16();
        (status, serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap())
    })
    .await
    .unwrap()
}

fn hit_keys(v: &Value) -> Vec<String> {
    v["hits"].as_array().unwrap().iter().map(|h| h["key"].as_str().unwrap().to_string()).collect()
}

fn shard_record(manifest: &Path, key: &str) -> PairRecord {
    let m = ShardManifest::load(manifest).unwrap();
    stream_shards(&m, None).map(Result::unwrap).find(|r| r.pair_id == key).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn health_reports_fixture_counts() {
    let f = fixture();
    let h = start(&f).await;
    let (status, body) = get(&h, "/health").await;
    assert_eq!(status, 200);
    let direct = LexicalIndex::load(&f.index_dir.join(layout::CAPTIONS_LEXICAL), 64).unwrap();
    assert_eq!(body["n_docs"], 20);
    assert_eq!(body["n_terms"], direct.n_terms());
    assert_eq!(body["n_vectors"], 20);
    assert_eq!(body["scopes"]["ARTICLES"]["n_docs"], 5);
    assert_eq!(body["scopes"]["IMAGES"]["n_vectors"], 20);
    assert_eq!(body["schema_version"], 1);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn startup_errors() {
    let f = fixture();
    let missing = ServiceConfig { index_dir: f.index_dir.join("nope"), ..config(&f) };
    assert!(matches!(serve(&missing).await, Err(ServiceError::IndexLoad(_))));

    let no_manifest = ServiceConfig { shard_manifest: Some(f.index_dir.join("manifest.json")), ..config(&f) };
    assert!(matches!(serve(&no_manifest).await, Err(ServiceError::IndexLoad(_))));

    let first = start(&f).await;
    let taken = ServiceConfig { bind: first.addr.to_string(), ..config(&f) };
    assert!(matches!(serve(&taken).await, Err(ServiceError::Bind { .. })));
    first.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn request_validation_statuses() {
    let f = fixture();
    let h = start(&f).await;
    let cases = [
        (json!({"scope": "CAPTIONS", "text": "tumor", "k": 0}), 400),
        (json!({"scope": "CAPTIONS", "text": "tumor", "k": 1001}), 400),
        (json!({"scope": "CAPTIONS", "k": 5}), 400),
        (json!({"scope": "CAPTIONS", "text": "tumor"}), 400),
        (json!({"scope": "VIDEOS", "text": "tumor", "k": 5}), 404),
        (json!({"scope": "IMAGES", "vector": [1.0, 0.0], "k": 5}), 400),
        (json!({"scope": "CAPTIONS", "text": "tumor", "k": 1000}), 200),
    ];
    for (body, want) in cases {
        let (status, resp) = post(&h, body.clone()).await;
        assert_eq!(status, want, "{body} -> {resp}");
        if want != 200 {
            assert!(resp["error"].is_string());
        }
    }
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn served_ranking_equals_direct_library_calls() {
    let f = fixture();
    let h = start(&f).await;
    let lex = LexicalIndex::load(&f.index_dir.join(layout::CAPTIONS_LEXICAL), 64).unwrap();
    for (text, k) in [("tumor", 5), ("confocal image of mouse liver", 10), ("western blot", 20), ("ct scan axial", 3)] {
        let (status, body) = post(&h, json!({"scope": "CAPTIONS", "text": text, "k": k})).await;
        assert_eq!(status, 200);
        let direct = lex.query(text, k);
        let served: Vec<(String, f64)> = body["hits"]
            .as_array()
            .unwrap()
            .iter()
            .map(|h| (h["key"].as_str().unwrap().to_string(), h["lexical_score"].as_f64().unwrap()))
            .collect();
        assert_eq!(served.len(), direct.len());
        for ((sk, ss), (dk, ds)) in served.iter().zip(&direct) {
            assert_eq!(sk, dk);
            assert!((ss - ds).abs() < 1e-12);
        }
        assert!(body["latency_ms"].as_f64().unwrap() > 0.0);
        assert_eq!(body["token_count"], text.split_whitespace().count());
    }

    let images = VectorIndex::load(&f.index_dir.join(layout::IMAGES_VECTORS)).unwrap();
    let embedder = HashEmbedder::new(DIM, EMBED_SEED);
    let target = &pairs()[7];
    let q = embedder.embed_pair(target);
    let (status, body) = post(&h, json!({"scope": "IMAGES", "text": "tumor", "vector": q, "k": 5})).await;
    assert_eq!(status, 200);
    let expected = rrf_fuse(&lex.query("tumor", 5), &images.knn(&q, 5).unwrap(), &FusionConfig::default(), 5);
    assert_eq!(hit_keys(&body), expected.iter().map(|r| r.key.clone()).collect::<Vec<_>>());
    let vec_only = post(&h, json!({"scope": "IMAGES", "vector": q, "k": 1})).await.1;
    assert_eq!(hit_keys(&vec_only), [target.pair_id.clone()]);
    assert!((vec_only["hits"][0]["vector_score"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn hydrated_records_match_shard_reads() {
    let f = fixture();
    let h = start(&f).await;
    let (status, body) = post(&h, json!({"scope": "CAPTIONS", "text": "stained section tumor", "k": 20, "hydrate": true})).await;
    assert_eq!(status, 200);
    let hits = body["hits"].as_array().unwrap();
    assert!(!hits.is_empty());
    for hit in hits {
        let key = hit["key"].as_str().unwrap();
        let record: PairRecord = serde_json::from_value(hit["record"].clone()).unwrap();
        assert_eq!(record, shard_record(&f.manifest_path, key));
    }

    let key = hits[0]["key"].as_str().unwrap();
    let (status, rec) = get(&h, &format!("/record/{key}?scope=CAPTIONS")).await;
    assert_eq!(status, 200);
    let record: PairRecord = serde_json::from_value(rec["record"].clone()).unwrap();
    assert_eq!(record, shard_record(&f.manifest_path, key));
    assert_eq!(get(&h, "/record/PMC0000_F9").await.0, 404);
    assert_eq!(get(&h, &format!("/record/{key}?scope=FILMS")).await.0, 404);

    let (status, art) = get(&h, "/record/PMC1004?scope=ARTICLES").await;
    assert_eq!(status, 200);
    let expected = articles().into_iter().find(|a| a.metadata.accession_id == "PMC1004").unwrap();
    assert_eq!(serde_json::from_value::<ArticleRecord>(art["record"].clone()).unwrap(), expected);
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_identical_requests_agree() {
    let f = fixture();
    let h = start(&f).await;
    let url = format!("http://{}/search", h.addr);
    let body = json!({"scope": "CAPTIONS", "text": "confocal tumor image", "k": 10, "hydrate": true});
    let responses = tokio::task::spawn_blocking(move || {
        let barrier = Arc::new(std::sync::Barrier::new(32));
        let threads: Vec<_> = (0..32)
            .map(|_| {
                let (url, body, barrier) = (url.clone(), body.clone(), Arc::clone(&barrier));
                std::thread::spawn(move || {
                    barrier.wait();
                    let mut resp = agent().post(&url).send_json(&body).unwrap();
                    assert_eq!(resp.status().as_u16(), 200);
                    serde_json::from_str::<Value>(&resp.body_mut().read_to_string().unwrap()).unwrap()
                })
            })
            .collect();
        threads.into_iter().map(|t| t.join().unwrap()).collect::<Vec<_>>()
    })
    .await
    .unwrap();
    let first = &responses[0]["hits"];
    assert!(!first.as_array().unwrap().is_empty());
    for r in &responses {
        assert_eq!(&r["hits"], first);
    }
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn metrics_are_per_scope() {
    let f = fixture();
    let h = start(&f).await;
    let (_, empty) = get(&h, "/metrics").await;
    assert_eq!(empty["scopes"], json!({}));

    post(&h, json!({"scope": "CAPTIONS", "text": "tumor", "k": 5})).await;
    let (_, one) = get(&h, "/metrics").await;
    assert!(one["scopes"]["CAPTIONS"]["error"].is_string());

    for text in ["tumor", "tumor image", "tumor image mouse", "tumor image mouse liver"] {
        post(&h, json!({"scope": "CAPTIONS", "text": text, "k": 5})).await;
    }
    post(&h, json!({"scope": "ARTICLES", "text": "glioma", "k": 2})).await;
    let (_, m) = get(&h, "/metrics").await;
    let cap = &m["scopes"]["CAPTIONS"];
    assert_eq!(cap["n_queries"], 5);
    let counts: Vec<u64> = cap["rows"].as_array().unwrap().iter().map(|r| r["token_count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 2, 3, 4]);
    assert_eq!(m["scopes"]["ARTICLES"]["n_queries"], 1);
    assert!(m["scopes"].get("IMAGES").is_none());
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn server_side_text_embedding_adds_vector_ranks() {
    let f = fixture();
    let cfg = ServiceConfig { text_embedder: Some(TextEmbedderConfig { dim: DIM, seed: EMBED_SEED }), ..config(&f) };
    let h = serve(&cfg).await.unwrap();
    let (status, body) = post(&h, json!({"scope": "CAPTIONS", "text": "tumor", "k": 5})).await;
    assert_eq!(status, 200);
    assert!(body["hits"].as_array().unwrap().iter().any(|h| !h["vector_rank"].is_null()));
    h.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn rag_over_http_matches_in_process() {
    let f = fixture();
    let h = start(&f).await;
    let base = format!("http://{}", h.addr);
    let question = "Which glioma subtypes carry IDH mutation and 1p/19q codeletion?";
    let (remote, local) = tokio::task::spawn_blocking(move || {
        let llm = MockLlm::extractive(4096);
        let opts = ChainOptions::default();
        let remote = run_chain(question, 2, &llm, &ServiceArticles::new(base), None, &opts).unwrap();
        let src = InProcessArticles::from_records(&articles(), params()).unwrap();
        let local = run_chain(question, 2, &llm, &src, None, &opts).unwrap();
        (remote, local)
    })
    .await
    .unwrap();
    assert!(remote.error.is_none(), "{:?}", remote.error);
    assert_eq!(remote.retrieved[0], "PMC1005");
    assert_eq!(serde_json::to_string(&remote).unwrap(), serde_json::to_string(&local).unwrap());
    h.shutdown().await.unwrap();
}
