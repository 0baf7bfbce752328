use std::path::PathBuf;

use biolit_core::eval::Direction;
use biolit_core::rag::SummaryStrategy;
use biolit_service::Scope;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "biolit", version, about = "Ingest, shard, annotate, index, search and evaluate figure-caption corpora")]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Emit log lines as JSON on stderr.
    #[arg(long, global = true)]
    pub json_logs: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a file list and nXML packages into an article JSONL corpus.
    Ingest(IngestArgs),
    #[command(subcommand)]
    Shard(ShardCommand),
    #[command(subcommand)]
    Annotate(AnnotateCommand),
    /// Build lexical and vector indices for the search service.
    Index(IndexArgs),
    /// Run the HTTP search service until interrupted.
    Serve(ServeArgs),
    /// Search an index directory or a running service.
    Query(QueryArgs),
    #[command(subcommand)]
    Rag(RagCommand),
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Measure lexical query latency against query length.
    BenchLatency(BenchArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub file_list: Option<PathBuf>,
    /// Directory holding one package directory per article.
    #[arg(long)]
    pub nxml_dir: Option<PathBuf>,
    /// JSON metadata keyed by accession id.
    #[arg(long)]
    pub entrez: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Pair input: a shard manifest, a pair JSONL file, or an article corpus.
#[derive(Debug, Args, Clone, Default)]
pub struct PairSource {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Article JSONL; every figure becomes a pair.
    #[arg(long = "in")]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ShardCommand {
    /// Write pairs into tar shards plus a manifest.
    Write {
        #[command(flatten)]
        source: PairSource,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        size: Option<usize>,
        /// Directory that pair image paths are relative to.
        #[arg(long)]
        image_root: Option<PathBuf>,
    },
    /// Stream shard records as JSONL, optionally filtered.
    Stream {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// e.g. `license=CC-BY&year=2019..2021`
        #[arg(long)]
        filter: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Embed every pair with the hash embedder.
    Embed {
        #[command(flatten)]
        source: PairSource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// PCA then K-means; optionally write per-cluster annotation sheets.
    Cluster {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        pca: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sheets: Option<PathBuf>,
        #[arg(long)]
        sample_size: Option<usize>,
    },
    /// Copy sheet labels onto every member of each labeled cluster.
    Propagate {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        sheets: PathBuf,
        #[command(flatten)]
        source: PairSource,
        /// Labeled pairs as JSONL.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub source: PairSource,
    /// Article JSONL for the ARTICLES scope.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub min_df: Option<usize>,
    /// Build lexical indices only.
    #[arg(long)]
    pub no_vectors: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<String>,
    /// Embed text queries with the hash embedder of this dimension.
    #[arg(long)]
    pub embed_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long, conflicts_with = "url")]
    pub index: Option<PathBuf>,
    /// Base URL of a running service.
    #[arg(long)]
    pub url: Option<String>,
    #[arg(long, conflicts_with = "url")]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "CAPTIONS", value_parser = parse_scope)]
    pub scope: Scope,
    #[arg(long)]
    pub text: Option<String>,
    /// Query vector as a JSON array.
    #[arg(long)]
    pub vector_json: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub hydrate: bool,
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    s.to_ascii_uppercase().parse()
}

#[derive(Debug, Subcommand)]
pub enum RagCommand {
    /// Answer a question from retrieved full-text articles.
    Ask(RagAskArgs),
}

#[derive(Debug, Args)]
pub struct RagAskArgs {
    #[arg(long)]
    pub question: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// `mock` or `http:<chat-completions endpoint>`.
    #[arg(long, default_value = "mock")]
    pub llm: String,
    /// Article JSONL searched in process.
    #[arg(long, conflicts_with = "service")]
    pub articles: Option<PathBuf>,
    /// Base URL of a running search service.
    #[arg(long)]
    pub service: Option<String>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Also write the trace to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Refine,
    MapReduce,
}

impl From<StrategyArg> for SummaryStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Refine => SummaryStrategy::Refine,
            StrategyArg::MapReduce => SummaryStrategy::MapReduce,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Compute one task's metrics from a fixture file.
    Run(EvalRunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalTask {
    Recall,
    Infonce,
    Vqa,
    ExactMatch,
    CausalLm,
    Scoresheet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    I2t,
    T2i,
    Both,
}

impl DirectionArg {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            DirectionArg::I2t => vec![Direction::I2T],
            DirectionArg::T2i => vec![Direction::T2I],
            DirectionArg::Both => vec![Direction::I2T, Direction::T2I],
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalRunArgs {
    #[arg(long, value_enum)]
    pub task: EvalTask,
    /// JSON fixture (CSV for `scoresheet`).
    #[arg(long)]
    pub fixture: PathBuf,
    /// Recall cut-offs.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10, 100])]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub direction: DirectionArg,
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub docs: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub queries_per_length: Option<usize>,
    /// Exit 1 when Pearson R falls below this.
    #[arg(long)]
    pub min_r: Option<f64>,
}
