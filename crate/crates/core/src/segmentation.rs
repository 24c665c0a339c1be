//! Quotation identification for counterspeech filtering.
//!
//! The first balanced, non-empty quoted span is cut out of the text: its
//! contents become the inner premise and the surrounding text, with the span
//! replaced by `[X]`, becomes the outer premise.

use serde::{Deserialize, Serialize};

use crate::types::{InputText, Premise, PremiseOrigin, PLACEHOLDER};

/// An (open, close) quote-character pair. Both sides must use the same style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(char, char)", into = "(char, char)")]
pub struct QuotePair {
    pub open: char,
    pub close: char,
}

impl QuotePair {
    pub const fn new(open: char, close: char) -> Self {
        Self { open, close }
    }
}

impl From<(char, char)> for QuotePair {
    fn from((open, close): (char, char)) -> Self {
        Self { open, close }
    }
}

impl From<QuotePair> for (char, char) {
    fn from(q: QuotePair) -> Self {
        (q.open, q.close)
    }
}

/// ASCII double quote and curly double quotes. Single quotes are excluded
/// because apostrophes would split contractions.
pub const DEFAULT_QUOTE_PAIRS: [QuotePair; 2] = [QuotePair::new('"', '"'), QuotePair::new('\u{201C}', '\u{201D}')];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteSplit {
    pub inner: Premise,
    pub outer: Premise,
    /// Byte offsets of the quoted region, quote characters included.
    pub span: (usize, usize),
    pub quotes: QuotePair,
}

impl QuoteSplit {
    /// Puts the quoted text back in place of the placeholder.
    pub fn reconstruct(&self) -> String {
        let quoted = format!("{}{}{}", self.quotes.open, self.inner.text(), self.quotes.close);
        self.outer.text().replacen(PLACEHOLDER, &quoted, 1)
    }
}

/// Byte spans `(open_start, close_end)` of one quote style, or `None` when
/// that style is unbalanced in `text`.
fn spans_for(text: &str, q: QuotePair) -> Option<Vec<(usize, usize)>> {
    let mut spans = Vec::new();
    let mut open_at: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        match open_at {
            None if ch == q.open => open_at = Some(i),
            None if ch == q.close => return None,
            Some(start) if ch == q.close => {
                spans.push((start, i + ch.len_utf8()));
                open_at = None;
            }
            Some(_) if ch == q.open => return None,
            _ => {}
        }
    }
    if open_at.is_some() {
        return None;
    }
    Some(spans)
}

/// Splits `text` at its first balanced, non-empty quoted span.
///
/// Returns `None` when no such span exists, or when the text already
/// contains the placeholder token outside the span.
pub fn split_quotes(text: &InputText, quote_pairs: &[QuotePair]) -> Option<QuoteSplit> {
    let raw = text.as_str();
    let (span, quotes) = quote_pairs
        .iter()
        .filter_map(|&q| {
            let spans = spans_for(raw, q)?;
            spans
                .into_iter()
                .find(|&(s, e)| {
                    let inner = &raw[s + q.open.len_utf8()..e - q.close.len_utf8()];
                    !inner.trim().is_empty()
                })
                .map(|span| (span, q))
        })
        .min_by_key(|&((start, _), _)| start)?;

    let (start, end) = span;
    let inner = &raw[start + quotes.open.len_utf8()..end - quotes.close.len_utf8()];
    let outer = format!("{}{}{}", &raw[..start], PLACEHOLDER, &raw[end..]);
    let outer = Premise::new(outer, PremiseOrigin::OuterWithPlaceholder).ok()?;
    let inner = Premise::new(inner, PremiseOrigin::QuotedInner).ok()?;
    Some(QuoteSplit {
        inner,
        outer,
        span,
        quotes,
    })
}
