//! Passage Ranker (reader-margin filter) and Answer Ranker (MLP over span,
//! null and question representations).

pub mod mlp;
mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::error::{Error, Result};
use crate::index::{IndexedCorpus, RetrievalHit};
use crate::readers::{reader_context, AnswerSpan, ReadItem, Reader, TokenEncoding};

pub use mlp::{mlp_forward, mlp_grad, Matrix, MlpGrads, MlpParams};
pub use train::{listwise_loss, train_answer_ranker, RankerExample, TrainConfig, TrainReport};

/// Funnel widths and training-set sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Passages retrieved from the index.
    pub k1: usize,
    /// Passages kept by the Passage Ranker.
    pub k2: usize,
    /// Candidates kept by the Answer Ranker.
    pub k3: usize,
    /// Passages per question used to train the coherence model.
    pub m: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub boost_weight: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k1: 30,
            k2: 30,
            k3: 5,
            m: 7,
            n_pos: 1,
            n_neg: 5,
            boost_weight: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.k3 && self.k3 <= self.k2 && self.k2 <= self.k1) {
            return Err(Error::Config(format!(
                "funnel widths must satisfy 1 <= K3 <= K2 <= K1 (got K1={}, K2={}, K3={})",
                self.k1, self.k2, self.k3
            )));
        }
        if self.m < 2 {
            return Err(Error::Config(format!("M must be at least 2, got {}", self.m)));
        }
        if self.n_pos < 1 {
            return Err(Error::Config("n_pos must be at least 1".into()));
        }
        if !(self.boost_weight >= 0.0 && self.boost_weight.is_finite()) {
            return Err(Error::Config("boost weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// A retrieved passage with the reader's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPassage<'a> {
    pub passage: &'a Passage,
    pub answer: AnswerSpan,
}

fn by_score_then_id(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> std::cmp::Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Reads every hit and keeps the `k2` passages with the highest margin.
/// Null answers stay in the ranking with their margins.
pub fn rank_passages<'a, R: Reader + ?Sized>(
    reader: &R,
    index: &'a IndexedCorpus,
    question: &str,
    hits: &[RetrievalHit],
    k2: usize,
) -> Result<Vec<RankedPassage<'a>>> {
    let passages: Vec<&Passage> = hits
        .iter()
        .map(|h| {
            index
                .passage(&h.passage_id)
                .ok_or_else(|| Error::UnknownPassage(h.passage_id.clone()))
        })
        .collect::<Result<_>>()?;
    let items: Vec<ReadItem<'_>> = passages
        .iter()
        .map(|&passage| ReadItem { question, passage })
        .collect();
    let answers = match reader.read_batch(&items) {
        Ok(a) => a,
        Err(batch_err) => {
            // find the passage that failed so the error names it
            for it in &items {
                reader
                    .read(question, it.passage)
                    .map_err(reader_context(question, &it.passage.passage_id))?;
            }
            let first = passages.first().map_or("", |p| p.passage_id.as_str());
            return Err(reader_context(question, first)(batch_err));
        }
    };
    let mut ranked = Vec::with_capacity(answers.len());
    for (passage, answer) in passages.into_iter().zip(answers) {
        answer
            .validate(passage)
            .map_err(reader_context(question, &passage.passage_id))?;
        ranked.push(RankedPassage { passage, answer });
    }
    ranked.sort_by(|a, b| {
        by_score_then_id(
            a.answer.s_margin,
            &a.passage.passage_id,
            b.answer.s_margin,
            &b.passage.passage_id,
        )
    });
    ranked.truncate(k2);
    Ok(ranked)
}

/// Answer Ranker input features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerFeatures {
    /// Start and end token vectors of the answer.
    pub h_best: Vec<f64>,
    /// The summary vector, twice.
    pub h_null: Vec<f64>,
    /// Mean of the question token vectors.
    pub h_q: Vec<f64>,
    /// `[h_best; h_null; h_q]`
    pub h: Vec<f64>,
}

pub fn featurize(encoding: &TokenEncoding, answer: &AnswerSpan) -> Result<AnswerFeatures> {
    let span = answer
        .span
        .ok_or_else(|| Error::NullAnswer(answer.passage_id.clone()))?;
    let len = encoding.passage_vectors.len();
    if span.end >= len {
        return Err(Error::Span {
            start: span.start as i64,
            end: span.end as i64,
            len,
        });
    }
    let d = encoding.d;
    let h_best = [
        encoding.passage_vectors[span.start].as_slice(),
        encoding.passage_vectors[span.end].as_slice(),
    ]
    .concat();
    let h_null = [encoding.cls_vector.as_slice(), encoding.cls_vector.as_slice()].concat();
    let mut h_q = vec![0.0; d];
    for row in &encoding.question_vectors {
        for (acc, v) in h_q.iter_mut().zip(row) {
            *acc += v;
        }
    }
    if !encoding.question_vectors.is_empty() {
        let m = encoding.question_vectors.len() as f64;
        h_q.iter_mut().for_each(|v| *v /= m);
    }
    let h = [h_best.as_slice(), h_null.as_slice(), h_q.as_slice()].concat();
    Ok(AnswerFeatures {
        h_best,
        h_null,
        h_q,
        h,
    })
}

/// A candidate answer leaving the Answer Ranker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub question: String,
    pub passage_id: String,
    pub answer: AnswerSpan,
    pub s_openqa: f64,
    /// Forward encoding of (question, passage), reused by the coherence model.
    #[serde(skip)]
    pub encoding: TokenEncoding,
}

/// An answer found by the reader together with its encoding.
#[derive(Debug, Clone)]
pub struct AnswerInput {
    pub answer: AnswerSpan,
    pub encoding: TokenEncoding,
}

/// Scores non-null answers with the MLP and keeps the best `k3`.
pub fn answer_rank(
    params: &MlpParams,
    question: &str,
    inputs: Vec<AnswerInput>,
    k3: usize,
) -> Result<Vec<RankedCandidate>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.answer.is_null() {
            continue;
        }
        let features = featurize(&input.encoding, &input.answer)?;
        let s_openqa = params.score(&features.h)?;
        out.push(RankedCandidate {
            question: question.to_string(),
            passage_id: input.answer.passage_id.clone(),
            answer: input.answer,
            s_openqa,
            encoding: input.encoding,
        });
    }
    out.sort_by(|a, b| by_score_then_id(a.s_openqa, &a.passage_id, b.s_openqa, &b.passage_id));
    out.truncate(k3);
    Ok(out)
}

/// Encodes the non-null answers among ranked passages, in order.
pub fn encode_answers<R: Reader + ?Sized>(
    reader: &R,
    question: &str,
    ranked: &[RankedPassage<'_>],
) -> Result<Vec<AnswerInput>> {
    let found: Vec<&RankedPassage<'_>> = ranked.iter().filter(|r| !r.answer.is_null()).collect();
    let items: Vec<ReadItem<'_>> = found
        .iter()
        .map(|r| ReadItem {
            question,
            passage: r.passage,
        })
        .collect();
    let first = found.first().map_or("", |r| r.passage.passage_id.as_str());
    let encodings = reader
        .encode_batch(&items)
        .map_err(reader_context(question, first))?;
    Ok(found
        .into_iter()
        .zip(encodings)
        .map(|(r, encoding)| AnswerInput {
            answer: r.answer.clone(),
            encoding,
        })
        .collect())
}
