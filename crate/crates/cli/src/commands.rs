use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use biolit_core::annotate::{
    apply_labels, embed, fit_pca, kmeans, make_sheets, propagate_labels, read_sheets, write_sheets, Clustering,
    DenseMatrix, EmbeddingMatrix, HashEmbedder, KMeansConfig,
};
use biolit_core::corpus::{reshape_to_pairs, validate_corpus, ArticleRecord, PairRecord};
use biolit_core::eval::{
    aggregate_scoresheet, causal_lm_loss, classification_accuracy, exact_match_accuracy, infonce_loss,
    read_scoresheet_file, recall_at_k, ClosedVqaInstance, ContrastiveBatch, Direction, MetricReport, RetrievalSet,
};
use biolit_core::jats::{ingest_corpus, parse_file_list, EntrezSource};
use biolit_core::json::to_canonical_string;
use biolit_core::latency::{run_benchmark, BenchConfig};
use biolit_core::rag::{
    run_chain, ArticleSource, HttpLlm, HttpLlmConfig, InProcessArticles, LlmInterface, MockLlm, ServiceArticles,
};
use biolit_core::shard::{stream_shards, write_shards, FilterPredicate, ShardManifest, MANIFEST_FILE};
use biolit_service::{build_index_dir, SearchRequest, SearchService, ServiceConfig, TextEmbedderConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::PipelineConfig;
use crate::CliError;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.validate()?;
    match cli.command {
        Command::Ingest(a) => ingest(&cfg, a),
        Command::Shard(c) => shard(&cfg, c),
        Command::Annotate(c) => annotate(&cfg, c),
        Command::Index(a) => index(&cfg, a),
        Command::Serve(a) => serve(&cfg, a),
        Command::Query(a) => query(&cfg, a),
        Command::Rag(RagCommand::Ask(a)) => rag_ask(&cfg, a),
        Command::Eval(EvalCommand::Run(a)) => eval_run(a),
        Command::BenchLatency(a) => bench(&cfg, a),
    }
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| CliError::Usage(format!("missing {what}: pass the flag or set it in the config file")))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let s = to_canonical_string(value).map_err(|e| CliError::op("output")(&e))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").and_then(|_| out.flush()).map_err(|e| CliError::op("output")(&e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<usize, CliError> {
    let mut w = create(path)?;
    let mut n = 0;
    for item in items {
        let line = to_canonical_string(item).map_err(|e| CliError::op("output")(&e))?;
        writeln!(w, "{line}").map_err(CliError::io(path))?;
        n += 1;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(n)
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let reader = BufReader::new(File::open(path).map_err(CliError::io(path))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Flags win; otherwise the configured shards (when `from_shards`) or corpus.
fn load_pairs(source: &PairSource, cfg: &PipelineConfig, from_shards: bool) -> Result<Vec<PairRecord>, CliError> {
    let given = [&source.manifest, &source.pairs, &source.corpus].iter().filter(|p| p.is_some()).count();
    if given > 1 {
        return Err(CliError::Usage("pass only one of --manifest, --pairs, --in".into()));
    }
    if let Some(p) = &source.pairs {
        return read_jsonl(p);
    }
    let manifest = source.manifest.clone().or_else(|| {
        if source.corpus.is_some() || !from_shards {
            None
        } else {
            cfg.paths.shards.as_ref().map(|d| d.join(MANIFEST_FILE))
        }
    });
    if let Some(m) = manifest {
        let manifest = ShardManifest::load(&m).map_err(|e| CliError::op("shard")(&e))?;
        return stream_shards(&manifest, None).collect::<Result<Vec<_>, _>>().map_err(|e| CliError::op("shard")(&e));
    }
    let corpus = required(source.corpus.clone(), &cfg.paths.corpus, "pair input (--manifest, --pairs or --in)")?;
    let articles: Vec<ArticleRecord> = read_jsonl(&corpus)?;
    Ok(reshape_to_pairs(&articles).collect())
}

fn ingest(cfg: &PipelineConfig, a: IngestArgs) -> Result<(), CliError> {
    let file_list = required(a.file_list, &cfg.paths.file_list, "--file-list")?;
    let nxml_dir = required(a.nxml_dir, &cfg.paths.packages, "--nxml-dir")?;
    let out = required(a.out, &cfg.paths.corpus, "--out")?;
    let bytes = fs::read(&file_list).map_err(CliError::io(&file_list))?;
    let list = parse_file_list(&bytes).map_err(|e| CliError::op("ingest")(&e))?;
    let entrez = match a.entrez.or_else(|| cfg.paths.entrez.clone()) {
        Some(p) => Some(EntrezSource::load(&p).map_err(|e| CliError::op("ingest")(&e))?),
        None => None,
    };
    let report = ingest_corpus(&list, &nxml_dir, entrez.as_ref());
    for w in &report.warnings {
        tracing::warn!(accession_id = %w.accession_id, "{}", w.message);
    }
    for r in &report.rejects {
        tracing::warn!(row = ?r, "file-list row rejected");
    }
    let validation = validate_corpus(&report.records);
    for v in &validation.violations {
        tracing::warn!(violation = ?v, "corpus invariant violated");
    }
    let n = write_jsonl(&out, &report.records)?;
    print_json(&json!({
        "articles": n,
        "pairs": report.records.iter().map(|r| r.figures.len()).sum::<usize>(),
        "rejected_rows": report.rejects.len(),
        "warnings": report.warnings.len(),
        "unresolved_refs": report.unresolved_refs,
        "violations": validation.violations.len(),
        "out": out,
    }))
}

fn shard(cfg: &PipelineConfig, c: ShardCommand) -> Result<(), CliError> {
    match c {
        ShardCommand::Write { source, out, size, image_root } => {
            let out = required(out, &cfg.paths.shards, "--out")?;
            let size = size.unwrap_or(cfg.shard.size);
            if size == 0 {
                return Err(CliError::Usage("--size must be at least 1".into()));
            }
            let pairs = load_pairs(&source, cfg, false)?;
            let image_root = image_root.or_else(|| cfg.shard.image_root.clone());
            let manifest =
                write_shards(pairs, &out, size, image_root.as_deref()).map_err(|e| CliError::op("shard")(&e))?;
            print_json(&manifest)
        }
        ShardCommand::Stream { manifest, filter, out } => {
            let path = required(manifest, &cfg.paths.shards.as_ref().map(|d| d.join(MANIFEST_FILE)), "--manifest")?;
            let manifest = ShardManifest::load(&path).map_err(|e| CliError::op("shard")(&e))?;
            let filter = match filter {
                Some(f) => Some(FilterPredicate::parse(&f).map_err(|e| CliError::Usage(format!("--filter: {e}")))?),
                None => None,
            };
            let sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(create(p)?),
                None => Box::new(BufWriter::new(std::io::stdout().lock())),
            };
            stream_to(manifest, filter, sink)
        }
    }
}

fn stream_to(manifest: ShardManifest, filter: Option<FilterPredicate>, mut sink: Box<dyn Write>) -> Result<(), CliError> {
    let write_err = |e: std::io::Error| CliError::op("output")(&e);
    for rec in stream_shards(&manifest, filter) {
        let rec = rec.map_err(|e| CliError::op("shard")(&e))?;
        let line = to_canonical_string(&rec).map_err(|e| CliError::op("output")(&e))?;
        writeln!(sink, "{line}").map_err(write_err)?;
    }
    sink.flush().map_err(write_err)
}

fn annotate(cfg: &PipelineConfig, c: AnnotateCommand) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let op = CliError::op("annotate");
    match c {
        AnnotateCommand::Embed { source, out, dim } => {
            let dim = dim.unwrap_or(cfg.annotate.embed_dim);
            if dim == 0 {
                return Err(CliError::Usage("--dim must be at least 1".into()));
            }
            let pairs = load_pairs(&source, cfg, true)?;
            let m = embed(&pairs, &HashEmbedder::new(dim, seed)).map_err(|e| op(&e))?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            m.write(&out).map_err(|e| op(&e))?;
            print_json(&json!({ "rows": m.rows(), "dim": dim, "seed": seed, "out": out }))
        }
        AnnotateCommand::Cluster { emb, k, pca, max_iters, out, sheets, sample_size } => {
            let m = EmbeddingMatrix::read(&emb).map_err(|e| op(&e))?;
            let k = k.unwrap_or(cfg.annotate.k);
            let components = pca.unwrap_or(cfg.annotate.pca_components);
            let max_iters = max_iters.unwrap_or(cfg.annotate.max_iters);
            let sample_size = sample_size.unwrap_or(cfg.annotate.sample_size);
            let (clustering, explained) = cluster_embeddings(&m, components, KMeansConfig { k, seed, max_iters })?;
            write_pretty(&out, &clustering)?;
            let n_sheets = match &sheets {
                Some(path) => {
                    let s = make_sheets(&clustering, sample_size, seed);
                    write_sheets(path, &s).map_err(|e| op(&e))?;
                    Some(s.len())
                }
                None => None,
            };
            print_json(&json!({
                "points": clustering.ids.len(),
                "k": clustering.k(),
                "iterations": clustering.iterations,
                "inertia": clustering.inertia,
                "explained_variance": explained,
                "sheets": n_sheets,
                "out": out,
            }))
        }
        AnnotateCommand::Propagate { clusters, sheets, source, out } => {
            let clustering: Clustering = read_json(&clusters)?;
            let sheets = read_sheets(&sheets).map_err(|e| op(&e))?;
            let labels = propagate_labels(&clustering, &sheets).map_err(|e| op(&e))?;
            let mut pairs = load_pairs(&source, cfg, true)?;
            let labeled = apply_labels(&mut pairs, &labels);
            write_jsonl(&out, &pairs)?;
            print_json(&json!({ "pairs": pairs.len(), "labeled": labeled, "out": out }))
        }
    }
}

/// PCA to `components` dimensions, then K-means on the projection.
pub fn cluster_embeddings(
    m: &EmbeddingMatrix,
    components: usize,
    config: KMeansConfig,
) -> Result<(Clustering, Vec<f64>), CliError> {
    let op = CliError::op("annotate");
    let x = DenseMatrix::from_embeddings(m);
    let model = fit_pca(&x, components).map_err(|e| op(&e))?;
    let projected = model.project(&x);
    let clustering = kmeans(&projected, &m.ids, &config).map_err(|e| op(&e))?;
    Ok((clustering, model.explained_variance))
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    let s = to_canonical_string(value).map_err(|e| CliError::op("output")(&e))?;
    w.write_all(s.as_bytes()).and_then(|_| w.write_all(b"\n")).and_then(|_| w.flush()).map_err(CliError::io(path))
}

fn index(cfg: &PipelineConfig, a: IndexArgs) -> Result<(), CliError> {
    let out = required(a.out, &cfg.paths.index, "--out")?;
    let pairs = load_pairs(&a.source, cfg, true)?;
    let articles: Vec<ArticleRecord> = match &a.articles {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let mut params = cfg.bm25.params();
    if let Some(m) = a.min_df {
        params.min_df = m;
    }
    let dim = a.dim.unwrap_or(cfg.annotate.embed_dim);
    let embedder = HashEmbedder::new(dim, cfg.seed.unwrap_or(0));
    let embedder = (!a.no_vectors).then_some(&embedder as &dyn biolit_core::annotate::Embedder);
    let summary = build_index_dir(&out, &pairs, &articles, params, embedder).map_err(|e| CliError::op("index")(&e))?;
    print_json(&summary)
}

fn service_config(cfg: &PipelineConfig, index: Option<PathBuf>, manifest: Option<PathBuf>) -> Result<ServiceConfig, CliError> {
    let mut sc = cfg.service.clone();
    if let Some(p) = &cfg.paths.index {
        sc.index_dir = p.clone();
    }
    if let Some(d) = &cfg.paths.shards {
        sc.shard_manifest.get_or_insert_with(|| d.join(MANIFEST_FILE));
    }
    sc.apply_env(|k| std::env::var(k).ok()).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(p) = index {
        sc.index_dir = p;
    }
    if manifest.is_some() {
        sc.shard_manifest = manifest;
    }
    Ok(sc)
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| CliError::op("runtime")(&e))
}

fn serve(cfg: &PipelineConfig, a: ServeArgs) -> Result<(), CliError> {
    let mut sc = service_config(cfg, a.index, a.manifest)?;
    if let Some(bind) = a.bind {
        sc.bind = bind;
    }
    if let Some(dim) = a.embed_dim {
        sc.text_embedder = Some(TextEmbedderConfig { dim, seed: cfg.seed.unwrap_or(0) });
    }
    let rt = runtime()?;
    rt.block_on(async {
        let handle = biolit_service::serve(&sc).await.map_err(|e| CliError::op("service")(&e))?;
        print_json(&json!({ "listening": handle.addr.to_string() }))?;
        tokio::signal::ctrl_c().await.map_err(|e| CliError::op("service")(&e))?;
        handle.shutdown().await.map_err(|e| CliError::op("service")(&e))
    })
}

fn query(cfg: &PipelineConfig, a: QueryArgs) -> Result<(), CliError> {
    let vector: Option<Vec<f32>> = match &a.vector_json {
        Some(s) => Some(serde_json::from_str(s).map_err(|e| CliError::Usage(format!("--vector-json: {e}")))?),
        None => None,
    };
    let body = json!({ "scope": a.scope, "text": a.text, "vector": vector, "k": a.k, "hydrate": a.hydrate });
    let response: Value = match &a.url {
        Some(url) => post_search(url, &body)?,
        None => {
            let sc = service_config(cfg, a.index, a.manifest)?;
            let svc = Arc::new(SearchService::load(&sc).map_err(|e| CliError::op("service")(&e))?);
            let bytes = serde_json::to_vec(&body).map_err(|e| CliError::op("output")(&e))?;
            let req: SearchRequest = biolit_service::parse_search_request(&bytes, svc.k_max())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let resp = runtime()?.block_on(svc.search(req)).map_err(|e| CliError::op("query")(&e))?;
            serde_json::to_value(resp).map_err(|e| CliError::op("output")(&e))?
        }
    };
    print_json(&json!({ "scope": response["scope"], "hits": response["hits"] }))
}

fn post_search(url: &str, body: &Value) -> Result<Value, CliError> {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let op = CliError::op("query");
    let mut resp = agent.post(format!("{}/search", url.trim_end_matches('/'))).send_json(body).map_err(|e| op(&e))?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(|e| op(&e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| op(&e))?;
    if status != 200 {
        let message = value["error"].as_str().unwrap_or(&text).to_string();
        return Err(CliError::Op { kind: "query", message: format!("service returned {status}: {message}") });
    }
    Ok(value)
}

fn rag_ask(cfg: &PipelineConfig, a: RagAskArgs) -> Result<(), CliError> {
    let window = a.window.unwrap_or(cfg.llm.context_window);
    if window == 0 {
        return Err(CliError::Usage("--window must be at least 1".into()));
    }
    let llm: Box<dyn LlmInterface> = if a.llm == "mock" {
        Box::new(MockLlm::extractive(window))
    } else if let Some(endpoint) = a.llm.strip_prefix("http:").filter(|e| !e.is_empty()) {
        let endpoint = if endpoint.starts_with("//") { format!("http:{endpoint}") } else { endpoint.to_string() };
        let api_key = cfg.llm.api_key_env.as_deref().and_then(|k| std::env::var(k).ok());
        Box::new(HttpLlm::new(HttpLlmConfig {
            endpoint,
            model: a.model.unwrap_or_else(|| cfg.llm.model.clone()),
            context_window: window,
            api_key,
            timeout_secs: cfg.llm.timeout_secs,
        }))
    } else if a.llm == "http" {
        let endpoint = cfg
            .llm
            .endpoint
            .clone()
            .ok_or_else(|| CliError::Usage("--llm http needs llm.endpoint in the config file".into()))?;
        let api_key = cfg.llm.api_key_env.as_deref().and_then(|k| std::env::var(k).ok());
        Box::new(HttpLlm::new(HttpLlmConfig {
            endpoint,
            model: a.model.unwrap_or_else(|| cfg.llm.model.clone()),
            context_window: window,
            api_key,
            timeout_secs: cfg.llm.timeout_secs,
        }))
    } else {
        return Err(CliError::Usage(format!("--llm must be `mock` or `http:<endpoint>`, got `{}`", a.llm)));
    };
    let source: Box<dyn ArticleSource> = match (&a.service, &a.articles) {
        (Some(url), _) => Box::new(ServiceArticles::new(url.clone())),
        (None, articles) => {
            let path = required(articles.clone(), &cfg.paths.corpus, "--articles or --service")?;
            let records: Vec<ArticleRecord> = read_jsonl(&path)?;
            Box::new(InProcessArticles::from_records(&records, cfg.bm25.params()).map_err(|e| CliError::op("rag")(&e))?)
        }
    };
    let mut options = cfg.rag.options();
    if let Some(s) = a.strategy {
        options.strategy = s.into();
    }
    let n = a.n.unwrap_or(cfg.rag.n);
    let trace = run_chain(&a.question, n, llm.as_ref(), source.as_ref(), None, &options).map_err(|e| match e {
        biolit_core::rag::RagError::EmptyQuestion | biolit_core::rag::RagError::InvalidCount => {
            CliError::Usage(e.to_string())
        }
        other => CliError::op("rag")(&other),
    })?;
    if let Some(path) = &a.out {
        write_pretty(path, &trace)?;
    }
    print_json(&trace)?;
    match &trace.error {
        Some(err) => Err(CliError::Op { kind: "rag", message: format!("chain failed at step {} ({}): {}", err.step, err.name, err.message) }),
        None => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InfoNceFixture {
    z_image: Vec<Vec<f64>>,
    z_text: Vec<Vec<f64>>,
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VqaFixture {
    variants: Vec<Vec<ClosedVqaInstance>>,
    #[serde(default)]
    caption_variants: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExactMatchFixture {
    predictions: Vec<String>,
    references: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CausalLmFixture {
    probabilities: Vec<f64>,
}

fn direction_suffix(d: Direction) -> &'static str {
    match d {
        Direction::I2T => "i2t",
        Direction::T2I => "t2i",
    }
}

/// Metrics for one eval task, as the library computes them.
pub fn eval_report(a: &EvalRunArgs) -> Result<MetricReport, CliError> {
    let op = CliError::op("eval");
    let name = match a.task {
        EvalTask::Recall => "recall",
        EvalTask::Infonce => "infonce",
        EvalTask::Vqa => "vqa",
        EvalTask::ExactMatch => "exact_match",
        EvalTask::CausalLm => "causal_lm",
        EvalTask::Scoresheet => "scoresheet",
    };
    let mut report = MetricReport::new(name);
    match a.task {
        EvalTask::Recall => {
            let set: RetrievalSet = read_json(&a.fixture)?;
            if a.k.is_empty() {
                return Err(CliError::Usage("--k needs at least one cut-off".into()));
            }
            for d in a.direction.directions() {
                for &k in &a.k {
                    let r = recall_at_k(&set, k, d).map_err(|e| op(&e))?;
                    report.insert(format!("recall@{k}_{}", direction_suffix(d)), r);
                }
            }
        }
        EvalTask::Infonce => {
            let f: InfoNceFixture = read_json(&a.fixture)?;
            let loss = infonce_loss(&ContrastiveBatch::new(f.z_image, f.z_text, f.tau).map_err(|e| op(&e))?)
                .map_err(|e| op(&e))?;
            report.insert("image_to_text", loss.image_to_text);
            report.insert("text_to_image", loss.text_to_image);
            report.insert("loss", loss.loss);
        }
        EvalTask::Vqa => {
            let f: VqaFixture = read_json(&a.fixture)?;
            let n = f.caption_variants.unwrap_or(f.variants.len());
            report.insert("accuracy", classification_accuracy(&f.variants, n).map_err(|e| op(&e))?);
        }
        EvalTask::ExactMatch => {
            let f: ExactMatchFixture = read_json(&a.fixture)?;
            report.insert("accuracy", exact_match_accuracy(&f.predictions, &f.references).map_err(|e| op(&e))?);
        }
        EvalTask::CausalLm => {
            let f: CausalLmFixture = read_json(&a.fixture)?;
            report.insert("loss", causal_lm_loss(&f.probabilities).map_err(|e| op(&e))?);
        }
        EvalTask::Scoresheet => {
            let rows = read_scoresheet_file(&a.fixture).map_err(|e| op(&e))?;
            let summary = aggregate_scoresheet(&rows).map_err(|e| op(&e))?;
            for (model, s) in &summary.models {
                report.insert(format!("{model}.mean_accuracy"), s.mean_accuracy);
                report.insert(format!("{model}.agreement"), s.agreement);
                report.insert(format!("{model}.n_questions"), s.n_questions as f64);
                for (evaluator, acc) in &s.accuracy_by_evaluator {
                    report.insert(format!("{model}.accuracy.{evaluator}"), *acc);
                }
            }
        }
    }
    Ok(report)
}

fn eval_run(a: EvalRunArgs) -> Result<(), CliError> {
    let report = eval_report(&a)?;
    if let Some(path) = &a.json_out {
        let mut w = create(path)?;
        writeln!(w, "{}", report.to_json()).and_then(|_| w.flush()).map_err(CliError::io(path))?;
    }
    if let Some(path) = &a.csv_out {
        report.write_csv(create(path)?).map_err(|e| CliError::op("eval")(&e))?;
    }
    println!("{}", report.to_json());
    Ok(())
}

fn bench(cfg: &PipelineConfig, a: BenchArgs) -> Result<(), CliError> {
    let d = BenchConfig::default();
    let config = BenchConfig {
        n_docs: a.docs.unwrap_or(d.n_docs),
        vocab: a.vocab.unwrap_or(d.vocab),
        max_query_tokens: a.max_tokens.unwrap_or(d.max_query_tokens),
        queries_per_length: a.queries_per_length.unwrap_or(d.queries_per_length),
        seed: cfg.seed.unwrap_or(d.seed),
        ..d
    };
    if config.n_docs == 0 || config.vocab == 0 || config.max_query_tokens == 0 || config.queries_per_length == 0 {
        return Err(CliError::Usage("benchmark sizes must be at least 1".into()));
    }
    let report = run_benchmark(&config).map_err(|e| CliError::op("latency")(&e))?;
    print_json(&json!({ "config": config, "report": report }))?;
    match a.min_r {
        Some(min) if !(report.r_defined && report.r >= min) => Err(CliError::Op {
            kind: "latency",
            message: format!("Pearson R {} is below the required {min}", report.r),
        }),
        _ => Ok(()),
    }
}
