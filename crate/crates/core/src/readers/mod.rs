//! Reader contract consumed by the funnel, plus the in-process stub and the
//! HTTP client for an out-of-process reader.

mod remote;
mod stub;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::error::{Error, ReaderError, Result};

pub use remote::RemoteReader;
pub use stub::{is_stopword, StubReader, STOPWORDS};

/// Inclusive token span `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn single(pos: usize) -> Self {
        TokenSpan {
            start: pos,
            end: pos,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A reader's answer for one (question, passage) pair.
///
/// Null answers carry no span and empty text; on the wire they are encoded as
/// `start = end = -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AnswerSpanRepr", try_from = "AnswerSpanRepr")]
pub struct AnswerSpan {
    pub passage_id: String,
    pub span: Option<TokenSpan>,
    pub text: String,
    pub s_best: f64,
    pub s_null: f64,
    pub s_margin: f64,
}

impl AnswerSpan {
    pub fn found(passage_id: &str, span: TokenSpan, text: String, s_best: f64, s_null: f64) -> Self {
        AnswerSpan {
            passage_id: passage_id.to_string(),
            span: Some(span),
            text,
            s_best,
            s_null,
            s_margin: s_best - s_null,
        }
    }

    pub fn null(passage_id: &str, s_best: f64, s_null: f64) -> Self {
        AnswerSpan {
            passage_id: passage_id.to_string(),
            span: None,
            text: String::new(),
            s_best,
            s_null,
            s_margin: s_best - s_null,
        }
    }

    pub fn is_null(&self) -> bool {
        self.span.is_none()
    }

    /// Wire-style start/end, `-1` for null.
    pub fn bounds(&self) -> (i64, i64) {
        match self.span {
            Some(s) => (s.start as i64, s.end as i64),
            None => (-1, -1),
        }
    }

    /// Checks the structural invariants against the passage the span came from.
    pub fn validate(&self, passage: &Passage) -> Result<(), ReaderError> {
        if !self.s_best.is_finite() || !self.s_null.is_finite() {
            return Err(ReaderError::Malformed(format!(
                "non-finite scores for passage `{}`",
                self.passage_id
            )));
        }
        if self.s_margin != self.s_best - self.s_null {
            return Err(ReaderError::Malformed(format!(
                "s_margin != s_best - s_null for passage `{}`",
                self.passage_id
            )));
        }
        match self.span {
            None if !self.text.is_empty() => Err(ReaderError::Malformed(
                "null answer carries text".to_string(),
            )),
            None => Ok(()),
            Some(s) if s.start > s.end || s.end >= passage.len() => Err(ReaderError::Malformed(
                format!(
                    "span [{}, {}] outside passage `{}` of {} tokens",
                    s.start,
                    s.end,
                    passage.passage_id,
                    passage.len()
                ),
            )),
            Some(s) if self.text != passage.span_text(s.start, s.end) => Err(
                ReaderError::Malformed(format!(
                    "span text `{}` does not match passage `{}`",
                    self.text, passage.passage_id
                )),
            ),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AnswerSpanRepr {
    passage_id: String,
    start_tok: i64,
    end_tok: i64,
    text: String,
    s_best: f64,
    s_null: f64,
    s_margin: f64,
}

impl From<AnswerSpan> for AnswerSpanRepr {
    fn from(a: AnswerSpan) -> Self {
        let (start_tok, end_tok) = a.bounds();
        AnswerSpanRepr {
            passage_id: a.passage_id,
            start_tok,
            end_tok,
            text: a.text,
            s_best: a.s_best,
            s_null: a.s_null,
            s_margin: a.s_margin,
        }
    }
}

impl TryFrom<AnswerSpanRepr> for AnswerSpan {
    type Error = String;

    fn try_from(r: AnswerSpanRepr) -> Result<Self, String> {
        let span = match (r.start_tok, r.end_tok) {
            (-1, -1) => None,
            (s, e) if 0 <= s && s <= e => Some(TokenSpan::new(s as usize, e as usize)),
            (s, e) => return Err(format!("invalid answer bounds ({s}, {e})")),
        };
        Ok(AnswerSpan {
            passage_id: r.passage_id,
            span,
            text: r.text,
            s_best: r.s_best,
            s_null: r.s_null,
            s_margin: r.s_margin,
        })
    }
}

/// Per-token vectors for a (question, passage) pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenEncoding {
    pub question_vectors: Vec<Vec<f64>>,
    pub passage_vectors: Vec<Vec<f64>>,
    pub cls_vector: Vec<f64>,
    pub d: usize,
}

impl TokenEncoding {
    pub fn validate(&self, question_len: usize, passage_len: usize) -> Result<(), ReaderError> {
        let rows_ok = self.question_vectors.len() == question_len
            && self.passage_vectors.len() == passage_len;
        if !rows_ok {
            return Err(ReaderError::Malformed(format!(
                "encoding has {}x{} rows, expected {}x{}",
                self.question_vectors.len(),
                self.passage_vectors.len(),
                question_len,
                passage_len
            )));
        }
        for v in self
            .question_vectors
            .iter()
            .chain(&self.passage_vectors)
            .chain(std::iter::once(&self.cls_vector))
        {
            if v.len() != self.d {
                return Err(ReaderError::DimensionMismatch {
                    expected: self.d,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ReaderError::Malformed("non-finite vector entry".into()));
            }
        }
        Ok(())
    }
}

/// One (question, passage) request in a batch.
#[derive(Debug, Clone, Copy)]
pub struct ReadItem<'a> {
    pub question: &'a str,
    pub passage: &'a Passage,
}

/// A reading-comprehension model that extracts spans and exposes token vectors.
///
/// Implementations are immutable after construction and may be shared across
/// threads. Batch methods return one result per item, in order.
pub trait Reader: Send + Sync {
    fn dim(&self) -> usize;

    fn read(&self, question: &str, passage: &Passage) -> Result<AnswerSpan, ReaderError>;

    /// Reads a reverse question (see [`crate::coherence::ReverseQuestion`]);
    /// the span is the subject recovered from the passage.
    fn read_backward(&self, reverse_question: &str, passage: &Passage)
        -> Result<AnswerSpan, ReaderError>;

    fn encode(&self, question: &str, passage: &Passage) -> Result<TokenEncoding, ReaderError>;

    fn read_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        items.iter().map(|it| self.read(it.question, it.passage)).collect()
    }

    fn read_backward_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        items
            .iter()
            .map(|it| self.read_backward(it.question, it.passage))
            .collect()
    }

    fn encode_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<TokenEncoding>, ReaderError> {
        items.iter().map(|it| self.encode(it.question, it.passage)).collect()
    }
}

impl<R: Reader + ?Sized> Reader for &R {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn read(&self, q: &str, p: &Passage) -> Result<AnswerSpan, ReaderError> {
        (**self).read(q, p)
    }
    fn read_backward(&self, q: &str, p: &Passage) -> Result<AnswerSpan, ReaderError> {
        (**self).read_backward(q, p)
    }
    fn encode(&self, q: &str, p: &Passage) -> Result<TokenEncoding, ReaderError> {
        (**self).encode(q, p)
    }
    fn read_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        (**self).read_batch(items)
    }
    fn read_backward_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        (**self).read_backward_batch(items)
    }
    fn encode_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<TokenEncoding>, ReaderError> {
        (**self).encode_batch(items)
    }
}

/// Wraps a reader failure with the question and passage it happened on.
pub(crate) fn reader_context(question: &str, passage_id: &str) -> impl FnOnce(ReaderError) -> Error {
    let question = question.to_string();
    let passage_id = passage_id.to_string();
    move |source| Error::Reader {
        question,
        passage_id,
        source,
    }
}
