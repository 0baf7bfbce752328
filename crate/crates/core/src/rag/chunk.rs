use super::tokens::TokenCounter;

/// Paragraph spans of `text`; each span keeps the blank-line separator that
/// follows it, so the spans tile the text exactly.
fn paragraph_spans(text: &str) -> Vec<&str> {
    let mut spans = Vec::new();
    let mut start = 0;
    while start < text.len() {
        let end = match text[start..].find("\n\n") {
            Some(i) => {
                let mut e = start + i;
                while text[e..].starts_with('\n') {
                    e += 1;
                }
                e
            }
            None => text.len(),
        };
        spans.push(&text[start..end]);
        start = end;
    }
    spans
}

/// Splits `text` into contiguous segments of at most `budget` tokens each,
/// packing whole paragraphs greedily. A paragraph longer than the budget is
/// cut at token boundaries. Concatenating the result gives back `text`.
pub fn segment_text<'a>(text: &'a str, budget: usize, counter: &dyn TokenCounter) -> Vec<&'a str> {
    assert!(budget > 0, "segment budget must be positive");
    let mut segments = Vec::new();
    let mut seg_start = 0;
    let mut seg_tokens = 0;
    let mut pos = 0;
    for para in paragraph_spans(text) {
        let tokens = counter.count(para);
        if seg_tokens + tokens <= budget {
            seg_tokens += tokens;
            pos += para.len();
            continue;
        }
        if seg_tokens > 0 {
            segments.push(&text[seg_start..pos]);
            seg_start = pos;
        }
        let mut rest = para;
        let mut rest_tokens = tokens;
        while rest_tokens > budget {
            let cut = counter.split_after(rest, budget);
            pos += cut;
            segments.push(&text[seg_start..pos]);
            seg_start = pos;
            rest = &rest[cut..];
            rest_tokens = counter.count(rest);
        }
        seg_tokens = rest_tokens;
        pos += rest.len();
    }
    if pos > seg_start {
        match segments.last_mut() {
            // Whitespace-only tail stays with the last segment.
            Some(last) if seg_tokens == 0 => *last = &text[seg_start - last.len()..pos],
            _ => segments.push(&text[seg_start..pos]),
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::tokens::WhitespaceCounter;
    use proptest::prelude::*;

    fn words(n: usize, tag: &str) -> String {
        (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn packs_whole_paragraphs() {
        let text = [words(4, "a"), words(4, "b"), words(4, "c")].join("\n\n");
        let segs = segment_text(&text, 8, &WhitespaceCounter);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs.concat(), text);
        assert!(segs[0].ends_with("\n\n") && segs[1].starts_with("c0"));
    }

    #[test]
    fn oversized_paragraph_is_cut() {
        let text = format!("{}\n\n{}", words(3, "a"), words(10, "b"));
        let segs = segment_text(&text, 4, &WhitespaceCounter);
        assert_eq!(segs.concat(), text);
        let counts: Vec<usize> = segs.iter().map(|s| WhitespaceCounter.count(s)).collect();
        assert_eq!(counts, [3, 4, 4, 2]);
    }

    #[test]
    fn short_text_is_one_segment() {
        assert_eq!(segment_text("one two", 5, &WhitespaceCounter), ["one two"]);
        assert!(segment_text("", 5, &WhitespaceCounter).is_empty());
    }

    #[test]
    fn trailing_blank_lines_stay_attached() {
        let text = format!("{}\n\n\n\n", words(4, "a"));
        let segs = segment_text(&text, 2, &WhitespaceCounter);
        assert_eq!(segs.concat(), text);
        assert!(segs.iter().all(|s| WhitespaceCounter.count(s) > 0));
    }

    proptest! {
        #[test]
        fn segments_tile_text_within_budget(paras in proptest::collection::vec(0usize..30, 1..20), budget in 1usize..40) {
            let text = paras.iter().enumerate().map(|(i, &n)| words(n, &format!("p{i}w"))).collect::<Vec<_>>().join("\n\n");
            let segs = segment_text(&text, budget, &WhitespaceCounter);
            prop_assert_eq!(segs.concat(), text.clone());
            for s in &segs {
                let c = WhitespaceCounter.count(s);
                prop_assert!(c <= budget);
                prop_assert!(c > 0 || WhitespaceCounter.count(&text) == 0);
            }
        }

        #[test]
        fn chunk_count_is_ceiling_when_paragraphs_divide_budget(per in 1usize..10, fit in 1usize..6, n in 1usize..60) {
            let budget = per * fit;
            let text = (0..n).map(|i| words(per, &format!("p{i}w"))).collect::<Vec<_>>().join("\n\n");
            let segs = segment_text(&text, budget, &WhitespaceCounter);
            prop_assert_eq!(segs.len(), (n * per).div_ceil(budget));
        }
    }
}
