//! Tokenization and sliding-window chunking of documents into passages.
//!
//! The tokenizer splits on whitespace, detaches leading/trailing punctuation
//! and splits the Saxon genitive (`John's` → `John`, `'s`). The reserved
//! token [`SUB_MASK`] always survives as a single token. Tokenizing the
//! space-joined output of the tokenizer reproduces the same token list.

use std::collections::HashSet;
use std::io::BufRead;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder that stands in for the subject inside a reverse question.
pub const SUB_MASK: &str = "<sub_mask>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

/// A window of document tokens; the retrieval unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub doc_id: String,
    pub token_start: usize,
    pub token_end: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Passage {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Builds a standalone passage from raw text, tokenizing it.
    pub fn from_text(passage_id: impl Into<String>, doc_id: impl Into<String>, text: &str) -> Self {
        let tokens = tokenize(text);
        Passage {
            passage_id: passage_id.into(),
            doc_id: doc_id.into(),
            token_start: 0,
            token_end: tokens.len(),
            text: tokens.join(" "),
            tokens,
        }
    }

    /// Space-joined text of the inclusive token span `[start, end]`.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        self.tokens[start..=end].join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_size: usize,
    pub stride: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig::with_size(100)
    }
}

impl ChunkConfig {
    /// Window of `chunk_size` tokens with the default stride of half a window.
    pub fn with_size(chunk_size: usize) -> Self {
        ChunkConfig {
            chunk_size,
            stride: (chunk_size / 2).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("chunk stride must be at least 1".into()));
        }
        if self.stride > self.chunk_size {
            return Err(Error::Config(format!(
                "chunk stride {} exceeds chunk size {}",
                self.stride, self.chunk_size
            )));
        }
        Ok(())
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”' | '‘' | '’' | '«' | '»' | '—' | '–' | '…' | '¿' | '¡' | '·'
        )
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

/// Tokens paired with their byte ranges in the input text.
pub fn tokenize_with_offsets(text: &str) -> Vec<(String, Range<usize>)> {
    let mut out = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                split_chunk(text, s, i, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        split_chunk(text, s, text.len(), &mut out);
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with_offsets(text)
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

fn split_chunk(text: &str, start: usize, end: usize, out: &mut Vec<(String, Range<usize>)>) {
    let mut pos = start;
    while let Some(found) = text[pos..end].find(SUB_MASK) {
        let mask_start = pos + found;
        if mask_start > pos {
            split_piece(text, pos, mask_start, out);
        }
        let mask_end = mask_start + SUB_MASK.len();
        out.push((SUB_MASK.to_string(), mask_start..mask_end));
        pos = mask_end;
    }
    if pos < end {
        split_piece(text, pos, end, out);
    }
}

fn push_chars(text: &str, start: usize, end: usize, out: &mut Vec<(String, Range<usize>)>) {
    for (i, c) in text[start..end].char_indices() {
        let s = start + i;
        out.push((c.to_string(), s..s + c.len_utf8()));
    }
}

fn split_piece(text: &str, start: usize, end: usize, out: &mut Vec<(String, Range<usize>)>) {
    let mut lo = start;
    // leading punctuation, apostrophes excluded so that "'s" survives
    while let Some(c) = text[lo..end].chars().next() {
        let rest = &text[lo + c.len_utf8()..end];
        if is_punct(c) && !is_apostrophe(c) && !rest.is_empty() {
            out.push((c.to_string(), lo..lo + c.len_utf8()));
            lo += c.len_utf8();
        } else {
            break;
        }
    }

    let mut hi = end;
    let mut suffix: Vec<(String, Range<usize>)> = Vec::new();
    while lo < hi {
        let core = &text[lo..hi];
        if core.chars().all(is_punct) {
            let mut chars = Vec::new();
            push_chars(text, lo, hi, &mut chars);
            suffix.extend(chars.into_iter().rev());
            hi = lo;
            break;
        }
        let last = core.chars().next_back().unwrap();
        if is_punct(last) {
            let s = hi - last.len_utf8();
            suffix.push((last.to_string(), s..hi));
            hi = s;
            continue;
        }
        if core.chars().count() > 2 {
            let mut rev = core.chars().rev();
            let (s_char, apo) = (rev.next().unwrap(), rev.next().unwrap());
            if (s_char == 's' || s_char == 'S') && is_apostrophe(apo) {
                let s = hi - s_char.len_utf8() - apo.len_utf8();
                suffix.push((text[s..hi].to_string(), s..hi));
                hi = s;
                continue;
            }
        }
        break;
    }
    if lo < hi {
        out.push((text[lo..hi].to_string(), lo..hi));
    }
    out.extend(suffix.into_iter().rev());
}

/// Token index ranges of the sliding windows over a stream of `len` tokens.
///
/// Windows start at multiples of the stride; the last window ends at the end of
/// the stream and no window is emitted once the stream end is covered.
pub fn window_spans(len: usize, cfg: &ChunkConfig) -> Result<Vec<Range<usize>>> {
    cfg.validate()?;
    let mut spans = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + cfg.chunk_size).min(len);
        spans.push(start..end);
        if end == len {
            break;
        }
        start += cfg.stride;
    }
    Ok(spans)
}

/// Chunks one document's token stream into passages `<doc_id>#<window>`.
pub fn chunk_stream(doc_id: &str, tokens: &[String], cfg: &ChunkConfig) -> Result<Vec<Passage>> {
    let spans = window_spans(tokens.len(), cfg)?;
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(i, span)| {
            let toks = tokens[span.clone()].to_vec();
            Passage {
                passage_id: format!("{doc_id}#{i}"),
                doc_id: doc_id.to_string(),
                token_start: span.start,
                token_end: span.end,
                text: toks.join(" "),
                tokens: toks,
            }
        })
        .collect())
}

/// Chunks every document, preserving document order.
pub fn chunk_corpus<'a, I>(docs: I, cfg: &ChunkConfig) -> Result<Vec<Passage>>
where
    I: IntoIterator<Item = &'a Document>,
{
    cfg.validate()?;
    let mut seen = HashSet::new();
    let mut passages = Vec::new();
    for doc in docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocument(doc.doc_id.clone()));
        }
        if doc.text.trim().is_empty() {
            return Err(Error::EmptyDocument(doc.doc_id.clone()));
        }
        let tokens = tokenize(&doc.text);
        passages.extend(chunk_stream(&doc.doc_id, &tokens, cfg)?);
    }
    Ok(passages)
}

/// Reads a JSONL corpus (`{"doc_id", "title", "text"}` per line).
pub fn read_documents<R: BufRead>(reader: R, source: &str) -> Result<Vec<Document>> {
    crate::io::read_jsonl(reader, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn spans(len: usize, n: usize, s: usize) -> Vec<(usize, usize)> {
        window_spans(
            len,
            &ChunkConfig {
                chunk_size: n,
                stride: s,
            },
        )
        .unwrap()
        .into_iter()
        .map(|r| (r.start, r.end))
        .collect()
    }

    #[test]
    fn tokenize_examples() {
        assert!(toks("").is_empty());
        assert_eq!(toks("John's car."), ["John", "'s", "car", "."]);
        assert_eq!(toks("a  b\tc"), ["a", "b", "c"]);
    }

    #[test]
    fn tokenize_keeps_mask_and_detaches_punctuation() {
        assert_eq!(
            toks("What's the capital city of <sub_mask>?"),
            ["What", "'s", "the", "capital", "city", "of", "<sub_mask>", "?"]
        );
        assert_eq!(toks("(Washington, D.C.)"), ["(", "Washington", ",", "D.C", ".", ")"]);
        assert_eq!(toks("James' hat"), ["James", "'", "hat"]);
        assert_eq!(toks("?!"), ["?", "!"]);
        assert_eq!(toks("don't"), ["don't"]);
    }

    #[test]
    fn offsets_point_into_text() {
        let text = "Who founded  Standard Oil's rival?";
        for (tok, range) in tokenize_with_offsets(text) {
            assert_eq!(&text[range], tok);
        }
    }

    #[test]
    fn window_examples() {
        assert_eq!(spans(10, 4, 2), [(0, 4), (2, 6), (4, 8), (6, 10)]);
        assert_eq!(spans(3, 100, 50), [(0, 3)]);
        assert_eq!(spans(250, 100, 50), [(0, 100), (50, 150), (100, 200), (150, 250)]);
        assert!(spans(0, 4, 2).is_empty());
    }

    #[test]
    fn zero_stride_rejected() {
        let cfg = ChunkConfig {
            chunk_size: 4,
            stride: 0,
        };
        assert!(matches!(window_spans(10, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_ids_and_order() {
        let cfg = ChunkConfig {
            chunk_size: 4,
            stride: 2,
        };
        let d1 = Document {
            doc_id: "d1".into(),
            title: String::new(),
            text: "a b c d e f g h i j".into(),
        };
        let d2 = Document {
            doc_id: "d2".into(),
            title: String::new(),
            text: "k l".into(),
        };
        let ps = chunk_corpus([&d1, &d2], &cfg).unwrap();
        let ids: Vec<_> = ps.iter().map(|p| p.passage_id.as_str()).collect();
        assert_eq!(ids, ["d1#0", "d1#1", "d1#2", "d1#3", "d2#0"]);
        assert!(chunk_corpus(std::iter::empty(), &cfg).unwrap().is_empty());

        let dup = chunk_corpus([&d1, &d1], &cfg).unwrap_err();
        assert!(dup.to_string().contains("d1"));
    }
}
