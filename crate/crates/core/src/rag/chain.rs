use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::chunk::segment_text;
use super::llm::LlmInterface;
use super::prompts::{Template, ANSWER, COMBINE, GENERATE_QUERY, INSUFFICIENT_EVIDENCE, REFINE, SUMMARIZE};
use super::source::ArticleSource;
use super::tokens::{TokenCounter, WhitespaceCounter};
use super::RagError;

pub const DEFAULT_SUMMARY_TOKENS: usize = 256;
pub const DEFAULT_QUERY_TOKENS: usize = 64;
pub const DEFAULT_ANSWER_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryStrategy {
    /// Summarize the first segment, then fold in each later one.
    Refine,
    /// Summarize segments independently, then merge the partial summaries.
    MapReduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    /// Ticks advance by one per event; traces are byte-stable.
    Logical,
    /// Microseconds since the chain started.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub summary_max_tokens: usize,
    pub query_max_tokens: usize,
    pub answer_max_tokens: usize,
    pub strategy: SummaryStrategy,
    pub clock: ClockKind,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            summary_max_tokens: DEFAULT_SUMMARY_TOKENS,
            query_max_tokens: DEFAULT_QUERY_TOKENS,
            answer_max_tokens: DEFAULT_ANSWER_TOKENS,
            strategy: SummaryStrategy::Refine,
            clock: ClockKind::Logical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    pub chunk_count: usize,
    /// Refine or merge calls after the first summarization.
    pub followup_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleSummary {
    pub key: String,
    pub chunk_count: usize,
    pub followup_calls: usize,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step: u8,
    pub name: String,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepError {
    pub step: u8,
    pub name: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RagTrace {
    pub question: String,
    pub n_requested: usize,
    pub generated_query: Option<String>,
    pub retrieved: Vec<String>,
    pub per_article: Vec<ArticleSummary>,
    pub final_answer: Option<String>,
    pub step_timings: Vec<StepTiming>,
    pub error: Option<StepError>,
}

struct Clock {
    kind: ClockKind,
    ticks: u64,
    origin: Instant,
}

impl Clock {
    fn now(&mut self) -> u64 {
        match self.kind {
            ClockKind::Logical => {
                self.ticks += 1;
                self.ticks
            }
            ClockKind::Wall => self.origin.elapsed().as_micros() as u64,
        }
    }
}

fn call(
    llm: &dyn LlmInterface,
    counter: &dyn TokenCounter,
    template: Template,
    prompt: String,
    max_tokens: usize,
) -> Result<String, RagError> {
    let tokens = counter.count(&prompt);
    let window = llm.context_window();
    if tokens > window {
        return Err(RagError::ContextOverflow { template: template.name, tokens, window });
    }
    Ok(llm.complete(&prompt, max_tokens)?.trim().to_string())
}

/// Step 1: the question rewritten as a search query.
pub fn generate_query(question: &str, llm: &dyn LlmInterface, options: &ChainOptions) -> Result<String, RagError> {
    if question.trim().is_empty() {
        return Err(RagError::EmptyQuestion);
    }
    let prompt = GENERATE_QUERY.render(&[("question", question.trim())]);
    call(llm, &WhitespaceCounter, GENERATE_QUERY, prompt, options.query_max_tokens)
}

/// Step 2: up to `n` article keys in ranking order.
pub fn retrieve_articles(
    query: &str,
    source: &dyn ArticleSource,
    query_vector: Option<&[f32]>,
    n: usize,
) -> Result<Vec<String>, RagError> {
    if n == 0 {
        return Err(RagError::InvalidCount);
    }
    let mut keys = source.search(query, query_vector, n)?;
    keys.truncate(n);
    Ok(keys)
}

/// Segment token budget: what the window leaves after the larger of the
/// summarize prompt and the refine prompt carrying a full-size summary.
pub fn segment_budget(question: &str, window: usize, options: &ChainOptions, counter: &dyn TokenCounter) -> Result<usize, RagError> {
    let cap = options.summary_max_tokens.to_string();
    let summarize = counter.count(&SUMMARIZE.render(&[("question", question), ("max_tokens", &cap), ("text", "")]));
    let followup_template = match options.strategy {
        SummaryStrategy::Refine => REFINE,
        SummaryStrategy::MapReduce => SUMMARIZE,
    };
    let followup = counter.count(&followup_template.render(&[
        ("question", question),
        ("max_tokens", &cap),
        ("summary", ""),
        ("text", ""),
    ])) + if options.strategy == SummaryStrategy::Refine { options.summary_max_tokens } else { 0 };
    let overhead = summarize.max(followup);
    if overhead >= window {
        return Err(RagError::ContextOverflow { template: "summarize", tokens: overhead, window });
    }
    Ok(window - overhead)
}

/// Step 3 for one article.
pub fn summarize_evidence(
    article_text: &str,
    question: &str,
    llm: &dyn LlmInterface,
    options: &ChainOptions,
    counter: &dyn TokenCounter,
) -> Result<Summary, RagError> {
    if counter.count(article_text) == 0 {
        return Err(RagError::EmptyArticle);
    }
    let cap = options.summary_max_tokens.to_string();
    let summarize = |text: &str| {
        let prompt = SUMMARIZE.render(&[("question", question), ("max_tokens", &cap), ("text", text)]);
        call(llm, counter, SUMMARIZE, prompt, options.summary_max_tokens)
    };
    let whole = SUMMARIZE.render(&[("question", question), ("max_tokens", &cap), ("text", article_text)]);
    if counter.count(&whole) <= llm.context_window() {
        return Ok(Summary { text: summarize(article_text)?, chunk_count: 1, followup_calls: 0 });
    }

    let budget = segment_budget(question, llm.context_window(), options, counter)?;
    let segments = segment_text(article_text, budget, counter);
    let mut followup_calls = 0;
    let text = match options.strategy {
        SummaryStrategy::Refine => {
            let mut summary = summarize(segments[0])?;
            for seg in &segments[1..] {
                let prompt = REFINE.render(&[("question", question), ("max_tokens", &cap), ("summary", &summary), ("text", seg)]);
                summary = call(llm, counter, REFINE, prompt, options.summary_max_tokens)?;
                followup_calls += 1;
            }
            summary
        }
        SummaryStrategy::MapReduce => {
            let parts = segments.iter().map(|s| summarize(s)).collect::<Result<Vec<_>, _>>()?;
            let joined = parts.iter().enumerate().map(|(i, p)| format!("[{}] {p}", i + 1)).collect::<Vec<_>>().join("\n\n");
            let prompt = COMBINE.render(&[("question", question), ("max_tokens", &cap), ("text", &joined)]);
            followup_calls += 1;
            call(llm, counter, COMBINE, prompt, options.summary_max_tokens)?
        }
    };
    Ok(Summary { text, chunk_count: segments.len(), followup_calls })
}

/// Step 4. With no summaries the fixed insufficient-evidence text is returned
/// without calling the model.
pub fn answer(question: &str, summaries: &[ArticleSummary], llm: &dyn LlmInterface, options: &ChainOptions) -> Result<String, RagError> {
    if summaries.is_empty() {
        return Ok(INSUFFICIENT_EVIDENCE.trim().to_string());
    }
    let evidence = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| format!("[{}] ({})\n{}", i + 1, s.key, s.summary))
        .collect::<Vec<_>>()
        .join("\n\n");
    let prompt = ANSWER.render(&[("question", question), ("text", &evidence)]);
    call(llm, &WhitespaceCounter, ANSWER, prompt, options.answer_max_tokens)
}

/// Runs query generation, retrieval, per-article summarization and answer
/// generation in order. Invalid arguments are returned as errors; a failing
/// step is recorded in the trace and ends the chain.
pub fn run_chain(
    question: &str,
    n: usize,
    llm: &dyn LlmInterface,
    source: &dyn ArticleSource,
    query_vector: Option<&[f32]>,
    options: &ChainOptions,
) -> Result<RagTrace, RagError> {
    if question.trim().is_empty() {
        return Err(RagError::EmptyQuestion);
    }
    if n == 0 {
        return Err(RagError::InvalidCount);
    }
    let mut trace = RagTrace {
        question: question.to_string(),
        n_requested: n,
        generated_query: None,
        retrieved: Vec::new(),
        per_article: Vec::new(),
        final_answer: None,
        step_timings: Vec::new(),
        error: None,
    };
    let mut clock = Clock { kind: options.clock, ticks: 0, origin: Instant::now() };
    let counter = WhitespaceCounter;

    macro_rules! step {
        ($id:expr, $name:expr, $body:expr) => {{
            let start = clock.now();
            let result: Result<_, RagError> = $body;
            let end = clock.now();
            trace.step_timings.push(StepTiming { step: $id, name: $name.to_string(), start, end });
            match result {
                Ok(v) => v,
                Err(e) => {
                    trace.error = Some(StepError { step: $id, name: $name.to_string(), message: e.to_string() });
                    return Ok(trace);
                }
            }
        }};
    }

    let query = step!(1, "generate_query", generate_query(question, llm, options));
    trace.generated_query = Some(query.clone());
    trace.retrieved = step!(2, "retrieve", retrieve_articles(&query, source, query_vector, n));
    let keys = trace.retrieved.clone();
    let summaries = step!(3, "summarize", {
        keys.iter()
            .map(|key| {
                let text = source.article_text(key)?;
                let s = summarize_evidence(&text, question, llm, options, &counter)?;
                Ok(ArticleSummary { key: key.clone(), chunk_count: s.chunk_count, followup_calls: s.followup_calls, summary: s.text })
            })
            .collect::<Result<Vec<_>, RagError>>()
    });
    trace.per_article = summaries;
    let final_answer = step!(4, "answer", answer(question, &trace.per_article, llm, options));
    trace.final_answer = Some(final_answer);
    Ok(trace)
}
