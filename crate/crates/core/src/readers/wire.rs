//! JSON bodies of the reader HTTP protocol.
//!
//! ```text
//! POST /read, /read_backward  {"items":[{"question","passage_tokens","passage_id"}]}
//!                             -> {"items":[{"start","end","text","s_best","s_null"}]}
//! POST /encode                {"items":[{"question","passage_tokens"}]}
//!                             -> {"items":[{"q_vecs","p_vecs","cls"}]}
//! GET  /dim                   -> {"d"}
//! ```

use serde::{Deserialize, Serialize};

use super::{AnswerSpan, TokenEncoding, TokenSpan};
use crate::error::ReaderError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch<T> {
    pub items: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub question: String,
    pub passage_tokens: Vec<String>,
    pub passage_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadResponse {
    pub start: i64,
    pub end: i64,
    pub text: String,
    pub s_best: f64,
    pub s_null: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeRequest {
    pub question: String,
    pub passage_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub q_vecs: Vec<Vec<f64>>,
    pub p_vecs: Vec<Vec<f64>>,
    pub cls: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimResponse {
    pub d: usize,
}

impl From<&AnswerSpan> for ReadResponse {
    fn from(a: &AnswerSpan) -> Self {
        let (start, end) = a.bounds();
        ReadResponse {
            start,
            end,
            text: a.text.clone(),
            s_best: a.s_best,
            s_null: a.s_null,
        }
    }
}

impl ReadResponse {
    pub fn into_answer(self, passage_id: &str) -> Result<AnswerSpan, ReaderError> {
        if !self.s_best.is_finite() || !self.s_null.is_finite() {
            return Err(ReaderError::Malformed("non-finite score".into()));
        }
        match (self.start, self.end) {
            (-1, -1) => {
                if !self.text.is_empty() {
                    return Err(ReaderError::Malformed("null answer carries text".into()));
                }
                Ok(AnswerSpan::null(passage_id, self.s_best, self.s_null))
            }
            (s, e) if 0 <= s && s <= e => Ok(AnswerSpan::found(
                passage_id,
                TokenSpan::new(s as usize, e as usize),
                self.text,
                self.s_best,
                self.s_null,
            )),
            (s, e) => Err(ReaderError::Malformed(format!("invalid span ({s}, {e})"))),
        }
    }
}

impl From<&TokenEncoding> for EncodeResponse {
    fn from(e: &TokenEncoding) -> Self {
        EncodeResponse {
            q_vecs: e.question_vectors.clone(),
            p_vecs: e.passage_vectors.clone(),
            cls: e.cls_vector.clone(),
        }
    }
}

impl EncodeResponse {
    pub fn into_encoding(self, d: usize) -> TokenEncoding {
        TokenEncoding {
            question_vectors: self.q_vecs,
            passage_vectors: self.p_vecs,
            cls_vector: self.cls,
            d,
        }
    }
}
