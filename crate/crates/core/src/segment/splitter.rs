use std::ops::Range;

/// Splits a block's inline text into sentences.
///
/// Returns ordered, non-overlapping byte ranges into `text`. Ranges should
/// start on non-whitespace; whatever lies between two ranges is attached to
/// the earlier sentence.
pub trait SentenceSplitter: Send + Sync {
    fn split(&self, text: &str) -> Vec<Range<usize>>;
}

impl<F> SentenceSplitter for F
where
    F: Fn(&str) -> Vec<Range<usize>> + Send + Sync,
{
    fn split(&self, text: &str) -> Vec<Range<usize>> {
        self(text)
    }
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "fig", "no",
    "vol", "inc", "ltd", "co", "corp", "dept", "est", "approx", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "mt", "ft", "cf", "al",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘' | '«' | '¿' | '¡')
}

/// Punctuation-driven splitter with an English abbreviation list.
///
/// A boundary is a run of `.`, `!`, `?` (plus closing quotes or brackets)
/// followed by whitespace and then an uppercase letter, a digit or an
/// opening quote/bracket. Periods after known abbreviations and single
/// capital initials ("J. Smith") do not end a sentence.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSplitter;

impl SentenceSplitter for RuleSplitter {
    fn split(&self, text: &str) -> Vec<Range<usize>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut ends = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if !is_terminal(chars[i].1) {
                i += 1;
                continue;
            }
            let punct = i;
            let mut j = i + 1;
            while j < chars.len() && (is_terminal(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < chars.len()
                && starts_sentence(chars[k].1)
                && !(chars[punct].1 == '.' && is_abbreviation(text, chars[punct].0));
            if boundary {
                ends.push(chars.get(j).map_or(text.len(), |c| c.0));
            }
            i = j.max(i + 1);
        }
        ends.push(text.len());

        let mut spans = Vec::new();
        let mut start = 0;
        for end in ends {
            if let Some(span) = trim_span(text, start..end) {
                spans.push(span);
            }
            start = end;
        }
        spans
    }
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_opener(c)
}

/// Whether the word ending just before the period at byte `dot` is an
/// abbreviation or a single-letter initial.
fn is_abbreviation(text: &str, dot: usize) -> bool {
    let head = &text[..dot];
    let word_start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map_or(0, |(i, c)| i + c.len_utf8());
    let word = head[word_start..].trim_start_matches(is_opener);
    let mut cs = word.chars();
    if let (Some(c), None) = (cs.next(), cs.next()) {
        return c.is_uppercase();
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

fn trim_span(text: &str, range: Range<usize>) -> Option<Range<usize>> {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        return None;
    }
    let start = range.start + lead;
    Some(start..start + trimmed.len())
}
