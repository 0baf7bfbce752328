use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use regex::Regex;

use super::FigXref;
use crate::corpus::{FigureEntry, InlineRef, Section};

/// Figures with inline references attached, plus the number of figure
/// mentions that could not be resolved to a figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InlineRefOutcome {
    pub figures: Vec<FigureEntry>,
    pub unresolved: usize,
}

/// Split a paragraph into sentence byte spans. A boundary is a `.`, `!` or
/// `?` followed by whitespace and then an uppercase letter. Spans are trimmed.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].1.is_uppercase() {
                spans.push((start, pos + c.len_utf8()));
                start = chars[j].0;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trail = slice.len() - slice.trim_end().len();
            (s + lead < e - trail).then_some((s + lead, e - trail))
        })
        .collect()
}

fn mention_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[Ff]ig(?:ure|\.)?\s*(\d+)").expect("valid regex"))
}

fn label_number(label: &str) -> Option<u32> {
    let digits: String = label.chars().skip_while(|c| !c.is_ascii_digit()).take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// Attach every body sentence that mentions a figure to that figure.
///
/// Mentions are explicit `<xref ref-type="fig">` elements (`xrefs`) and the
/// textual forms `Fig N`, `Fig. N` and `Figure N`. Figure numbers resolve
/// through figure labels, or through document position when no figure has a
/// numbered label. Each (figure, sentence) pair is attached once.
pub fn extract_inline_refs(
    full_text: &[Section],
    figures: &[FigureEntry],
    labels: &[Option<String>],
    xrefs: &[FigXref],
) -> InlineRefOutcome {
    let by_id: HashMap<&str, usize> = figures.iter().enumerate().map(|(i, f)| (f.figure_id.as_str(), i)).collect();
    let mut by_number: HashMap<u32, usize> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.as_deref().and_then(label_number).map(|n| (n, i)))
        .collect();
    if by_number.is_empty() {
        by_number = (0..figures.len()).map(|i| (i as u32 + 1, i)).collect();
    }

    let mut xrefs_by_par: HashMap<usize, Vec<&FigXref>> = HashMap::new();
    for x in xrefs {
        xrefs_by_par.entry(x.paragraph_index).or_default().push(x);
    }

    let mut attached: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); figures.len()];
    let mut out: Vec<FigureEntry> = figures.to_vec();
    let mut unresolved = 0;

    let paragraphs = full_text.iter().flat_map(|s| s.paragraphs.iter());
    for (p_idx, para) in paragraphs.enumerate() {
        let spans = split_sentences(para);
        let sentence_of = |offset: usize| spans.iter().position(|&(s, e)| offset >= s && offset < e);
        let par_xrefs = xrefs_by_par.get(&p_idx).map(Vec::as_slice).unwrap_or(&[]);

        let mut hits: Vec<(usize, usize)> = Vec::new();
        for x in par_xrefs {
            match (by_id.get(x.rid.as_str()), sentence_of(x.start)) {
                (Some(&fig), Some(sent)) => hits.push((fig, sent)),
                _ => unresolved += 1,
            }
        }
        for m in mention_regex().captures_iter(para) {
            let whole = m.get(0).expect("match");
            // Text inside an explicit cross-reference is already accounted for.
            if par_xrefs.iter().any(|x| whole.start() < x.end.max(x.start + 1) && whole.end() > x.start) {
                continue;
            }
            let number: Option<u32> = m[1].parse().ok();
            match (number.and_then(|n| by_number.get(&n)), sentence_of(whole.start())) {
                (Some(&fig), Some(sent)) => hits.push((fig, sent)),
                _ => unresolved += 1,
            }
        }

        for (fig, sent) in hits {
            if attached[fig].insert((p_idx, sent)) {
                let (s, e) = spans[sent];
                out[fig].inline_refs.push(InlineRef { paragraph_index: p_idx, sentence: para[s..e].to_string() });
            }
        }
    }
    for f in &mut out {
        f.inline_refs.sort_by(|a, b| a.paragraph_index.cmp(&b.paragraph_index));
    }
    InlineRefOutcome { figures: out, unresolved }
}
