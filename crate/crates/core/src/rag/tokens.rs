/// Token counting used for context-window arithmetic.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
    /// Byte offset just past the first `n` tokens and any whitespace that
    /// follows them; `text.len()` if there are fewer.
    fn split_after(&self, text: &str, n: usize) -> usize;
}

/// Whitespace-delimited tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }

    fn split_after(&self, text: &str, n: usize) -> usize {
        let mut seen = 0;
        let mut in_token = false;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                in_token = false;
            } else if !in_token {
                if seen == n {
                    return i;
                }
                seen += 1;
                in_token = true;
            }
        }
        text.len()
    }
}
