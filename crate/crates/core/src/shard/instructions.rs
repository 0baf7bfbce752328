use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ShardError;
use crate::corpus::PairRecord;

/// Captions with fewer words than this get a brief-description instruction;
/// all others (including exactly this many) get a detailed one.
pub const BRIEF_WORD_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub pair_id: String,
    pub image_path: String,
    pub instruction: String,
    pub response: String,
}

/// Whitespace-delimited token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn default_brief_pool() -> Vec<String> {
    [
        "Describe the image concisely.",
        "Provide a brief description of the given image.",
        "Offer a succinct explanation of the picture presented.",
        "Summarize the visual content of the image.",
        "Give a short and clear explanation of the subsequent image.",
        "Share a concise interpretation of the image provided.",
        "Present a compact description of the figure's key features.",
        "Relay a brief, clear account of the picture shown.",
    ]
    .map(String::from)
    .to_vec()
}

pub fn default_detailed_pool() -> Vec<String> {
    [
        "Describe the following image in detail.",
        "Provide a detailed description of the given image.",
        "Give an elaborate explanation of the image you see.",
        "Share a comprehensive rundown of the presented image.",
        "Offer a thorough analysis of the image.",
        "Explain the various aspects of the image before you.",
        "Clarify the contents of the displayed image with great detail.",
        "Characterize the image using a well-detailed description.",
        "Break down the elements of the image in a detailed manner.",
        "Walk through the important details of the image.",
    ]
    .map(String::from)
    .to_vec()
}

/// Turn pairs into instruction/response records. The response is the caption;
/// the instruction is sampled from the brief or detailed pool by caption
/// length with a generator seeded from `seed`.
pub fn make_instructions<I>(
    pairs: I,
    brief_pool: Vec<String>,
    detailed_pool: Vec<String>,
    seed: u64,
) -> Result<impl Iterator<Item = InstructionRecord>, ShardError>
where
    I: IntoIterator<Item = PairRecord>,
{
    if brief_pool.is_empty() {
        return Err(ShardError::EmptyPool("brief"));
    }
    if detailed_pool.is_empty() {
        return Err(ShardError::EmptyPool("detailed"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pairs.into_iter().map(move |p| {
        let pool = if word_count(&p.caption) < BRIEF_WORD_LIMIT { &brief_pool } else { &detailed_pool };
        let instruction = pool[rng.random_range(0..pool.len())].clone();
        InstructionRecord { pair_id: p.pair_id, image_path: p.image_path, instruction, response: p.caption }
    }))
}
