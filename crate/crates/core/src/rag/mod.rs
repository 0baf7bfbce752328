//! Four-step retrieval-augmented answering: generate a search query, retrieve
//! full-text articles, summarize each within the model's context window, and
//! answer from the summaries.

mod chain;
mod chunk;
mod llm;
pub mod prompts;
mod source;
mod tokens;

use thiserror::Error;

pub use chain::{
    answer, generate_query, retrieve_articles, run_chain, segment_budget, summarize_evidence, ArticleSummary, ChainOptions,
    ClockKind, RagTrace, StepError, StepTiming, Summary, SummaryStrategy, DEFAULT_ANSWER_TOKENS, DEFAULT_QUERY_TOKENS,
    DEFAULT_SUMMARY_TOKENS,
};
pub use chunk::segment_text;
pub use llm::{CannedLlm, FailingLlm, HttpLlm, HttpLlmConfig, LlmError, LlmInterface, MockLlm, MockMode};
pub use source::{ArticleSource, InProcessArticles, ServiceArticles};
pub use tokens::{TokenCounter, WhitespaceCounter};

#[derive(Debug, Error)]
pub enum RagError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("article count must be at least 1")]
    InvalidCount,
    #[error("article text is empty")]
    EmptyArticle,
    #[error("{template} prompt needs {tokens} tokens, context window is {window}")]
    ContextOverflow { template: &'static str, tokens: usize, window: usize },
    #[error("retrieval failed: {0}")]
    Retrieval(String),
    #[error("llm: {0}")]
    Llm(#[from] LlmError),
}
