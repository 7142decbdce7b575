//! Relation coherence: read each candidate passage backwards (from the answer
//! to the subject) and score how well the recovered subject agrees with the
//! subject of the row.

mod backward_data;
mod model;
mod reverse;
mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::error::{Error, Result};
use crate::index::{fold, IndexedCorpus};
use crate::rankers::{featurize, RankedCandidate};
use crate::readers::{reader_context, AnswerSpan, ReadItem, Reader, TokenEncoding, TokenSpan};

pub use backward_data::{
    build_backward_training_data, invert_question, BackwardExample, BackwardTuple, INTERROGATIVES,
};
pub use model::{
    coherence_score, similarity, CoherenceBreakdown, CoherenceGrads, CoherenceParams,
    NULL_SUBJECT_FLOOR,
};
pub use reverse::{make_reverse_question, ReverseQuestion};
pub use train::{select_training_window, train_coherence, CoherenceExample};

/// `[rows[start]; rows[end]]`, the representation of a token span.
pub fn span_vector(rows: &[Vec<f64>], span: Option<TokenSpan>) -> Result<Vec<f64>> {
    let span = span.ok_or(Error::Span {
        start: -1,
        end: -1,
        len: rows.len(),
    })?;
    if span.start > span.end || span.end >= rows.len() {
        return Err(Error::Span {
            start: span.start as i64,
            end: span.end as i64,
            len: rows.len(),
        });
    }
    Ok([rows[span.start].as_slice(), rows[span.end].as_slice()].concat())
}

/// Span representation over the passage side of an encoding.
pub fn passage_span(encoding: &TokenEncoding, span: Option<TokenSpan>) -> Result<Vec<f64>> {
    span_vector(&encoding.passage_vectors, span)
}

/// Span representation over the question side of an encoding.
pub fn question_span(encoding: &TokenEncoding, span: Option<TokenSpan>) -> Result<Vec<f64>> {
    span_vector(&encoding.question_vectors, span)
}

/// First case-insensitive occurrence of the subject's tokens in the question.
pub fn find_subject_span(question: &str, subject: &str) -> Option<TokenSpan> {
    let q: Vec<String> = tokenize(question).iter().map(|t| fold(t)).collect();
    let s: Vec<String> = tokenize(subject).iter().map(|t| fold(t)).collect();
    if s.is_empty() || s.len() > q.len() {
        return None;
    }
    q.windows(s.len())
        .position(|w| w == s.as_slice())
        .map(|i| TokenSpan::new(i, i + s.len() - 1))
}

/// Everything the coherence score needs for one candidate, as vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceInput {
    /// Answer Ranker features of the forward reading (5d).
    pub answer_features: Vec<f64>,
    /// `[f_span(object); b_span(object)]` (4d).
    pub object: Vec<f64>,
    /// Subject span in the forward question (2d).
    pub subject: Vec<f64>,
    /// The mask token in the reverse question (2d).
    pub sub_mask: Vec<f64>,
    /// Subject recovered by the backward reader (2d), if any.
    pub p_subject: Option<Vec<f64>>,
}

impl CoherenceInput {
    /// Assembles the vectors from the forward and backward encodings. The
    /// object occupies the answer span in both encodings.
    pub fn from_encodings(
        forward: &TokenEncoding,
        backward: &TokenEncoding,
        answer: &AnswerSpan,
        subject_span: TokenSpan,
        sub_mask_pos: usize,
        p_subject: Option<TokenSpan>,
    ) -> Result<Self> {
        let answer_features = featurize(forward, answer)?.h;
        let object = [
            passage_span(forward, answer.span)?,
            passage_span(backward, answer.span)?,
        ]
        .concat();
        Ok(CoherenceInput {
            answer_features,
            object,
            subject: question_span(forward, Some(subject_span))?,
            sub_mask: question_span(backward, Some(TokenSpan::single(sub_mask_pos)))?,
            p_subject: p_subject.map(|s| passage_span(backward, Some(s))).transpose()?,
        })
    }

    /// Input for a candidate whose backward reading is unavailable; only the
    /// forward term is informative and both similarities take the floor.
    pub fn forward_only(forward: &TokenEncoding, answer: &AnswerSpan) -> Result<Self> {
        let d = forward.d;
        Ok(CoherenceInput {
            answer_features: featurize(forward, answer)?.h,
            object: vec![0.0; 4 * d],
            subject: vec![0.0; 2 * d],
            sub_mask: vec![0.0; 2 * d],
            p_subject: None,
        })
    }
}

/// A candidate with its coherence score attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    #[serde(flatten)]
    pub candidate: RankedCandidate,
    pub s_coher: f64,
    pub breakdown: CoherenceBreakdown,
    pub p_subject: AnswerSpan,
}

/// Coherence inputs for a list of candidates plus the count of candidates
/// that fell back to the null-subject floor because of a failure.
#[derive(Debug, Clone)]
pub struct PreparedCandidates {
    pub inputs: Vec<CoherenceInput>,
    pub p_subjects: Vec<AnswerSpan>,
    pub warnings: usize,
}

/// Builds reverse questions, runs the backward reader and encodes both
/// directions for every candidate.
pub fn prepare_candidates<R: Reader + ?Sized>(
    reader: &R,
    index: &IndexedCorpus,
    question: &str,
    subject: &str,
    candidates: &[RankedCandidate],
) -> Result<PreparedCandidates> {
    let mut inputs = Vec::with_capacity(candidates.len());
    let mut p_subjects = Vec::with_capacity(candidates.len());
    let mut warnings = 0;
    let subject_span = find_subject_span(question, subject);
    for cand in candidates {
        let passage = index
            .passage(&cand.passage_id)
            .ok_or_else(|| Error::UnknownPassage(cand.passage_id.clone()))?;
        let fallback = |warnings: &mut usize, reason: String| -> Result<(CoherenceInput, AnswerSpan)> {
            log::warn!("coherence: passage `{}`: {reason}", cand.passage_id);
            *warnings += 1;
            Ok((
                CoherenceInput::forward_only(&cand.encoding, &cand.answer)?,
                AnswerSpan::null(&cand.passage_id, 0.0, 0.0),
            ))
        };
        let (Some(subject_span), Ok(rq)) = (
            subject_span,
            make_reverse_question(question, subject, &cand.answer.text),
        ) else {
            let (input, p) = fallback(&mut warnings, format!("subject `{subject}` not in question"))?;
            inputs.push(input);
            p_subjects.push(p);
            continue;
        };
        let item = [ReadItem {
            question: &rq.surface,
            passage,
        }];
        let backward = reader
            .read_backward_batch(&item)
            .and_then(|mut v| {
                let a = v.remove(0);
                a.validate(passage)?;
                Ok(a)
            })
            .and_then(|a| reader.encode(&rq.surface, passage).map(|e| (a, e)));
        let (p_subject, bwd_encoding) = match backward {
            Ok(v) => v,
            Err(e) => {
                let err = reader_context(&rq.surface, &cand.passage_id)(e);
                let (input, p) = fallback(&mut warnings, err.to_string())?;
                inputs.push(input);
                p_subjects.push(p);
                continue;
            }
        };
        inputs.push(CoherenceInput::from_encodings(
            &cand.encoding,
            &bwd_encoding,
            &cand.answer,
            subject_span,
            rq.sub_mask_pos,
            p_subject.span,
        )?);
        p_subjects.push(p_subject);
    }
    Ok(PreparedCandidates {
        inputs,
        p_subjects,
        warnings,
    })
}

/// Scores every candidate; output order follows input order.
pub fn score_candidates<R: Reader + ?Sized>(
    params: &CoherenceParams,
    reader: &R,
    index: &IndexedCorpus,
    question: &str,
    subject: &str,
    candidates: Vec<RankedCandidate>,
) -> Result<(Vec<ScoredCandidate>, usize)> {
    let prepared = prepare_candidates(reader, index, question, subject, &candidates)?;
    let mut out = Vec::with_capacity(candidates.len());
    for ((candidate, input), p_subject) in candidates
        .into_iter()
        .zip(&prepared.inputs)
        .zip(prepared.p_subjects)
    {
        let breakdown = coherence_score(params, input)?;
        out.push(ScoredCandidate {
            candidate,
            s_coher: breakdown.total,
            breakdown,
            p_subject,
        });
    }
    Ok((out, prepared.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_vector_examples() {
        let rows = vec![vec![1.0, 2.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(
            span_vector(&rows, Some(TokenSpan::new(0, 3))).unwrap(),
            [1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            span_vector(&rows, Some(TokenSpan::single(3))).unwrap(),
            [3.0, 4.0, 3.0, 4.0]
        );
        assert!(span_vector(&rows, None).is_err());
        assert!(span_vector(&rows, Some(TokenSpan::new(2, 4))).is_err());
    }

    #[test]
    fn subject_span_lookup() {
        assert_eq!(
            find_subject_span("Who founded Standard Oil?", "standard oil"),
            Some(TokenSpan::new(2, 3))
        );
        assert_eq!(find_subject_span("What is John's age?", "John"), Some(TokenSpan::single(2)));
        assert_eq!(find_subject_span("Who?", "John"), None);
    }
}
