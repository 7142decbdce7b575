//! Distant supervision: label reader answers on retrieved passages by fuzzy
//! matching against the known objects of training rows.

use serde::{Deserialize, Serialize};

use crate::coherence::{prepare_candidates, select_training_window, CoherenceExample};
use crate::error::{Error, Result};
use crate::evalkit::token_f1;
use crate::evalkit::normalize_answer;
use crate::extractor::{PartialTable, Pipeline};
use crate::index::{preprocess_question, IndexedCorpus};
use crate::rankers::{featurize, RankerExample};
use crate::readers::{reader_context, AnswerSpan, ReadItem, Reader, TokenSpan};

/// Token F1 after answer normalization; 0 when either side normalizes to
/// nothing.
pub fn fuzzy_f1(predicted: &str, gold: &str) -> f64 {
    if normalize_answer(predicted).is_empty() || normalize_answer(gold).is_empty() {
        return 0.0;
    }
    token_f1(predicted, gold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupervisionConfig {
    pub retrieve_k: usize,
    pub f1_threshold: f64,
    pub min_pos: usize,
    pub n_neg: usize,
    /// Phrase boost used when retrieving training passages.
    pub boost_weight: f64,
}

impl Default for SupervisionConfig {
    fn default() -> Self {
        SupervisionConfig {
            retrieve_k: 150,
            f1_threshold: 0.7,
            min_pos: 1,
            n_neg: 5,
            boost_weight: 1.0,
        }
    }
}

impl SupervisionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f1_threshold > 0.0 && self.f1_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "F1 threshold must be in (0, 1], got {}",
                self.f1_threshold
            )));
        }
        if self.retrieve_k == 0 {
            return Err(Error::Config("retrieve_k must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// A reader answer on a retrieved passage with its distant label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPassage {
    pub question: String,
    pub passage_id: String,
    pub answer: AnswerSpan,
    pub label: Label,
    pub match_f1: f64,
}

/// Labels the reader's answer on each passage. Null answers score F1 0.
pub fn label_answers(question: &str, answers: Vec<AnswerSpan>, object: &str, threshold: f64) -> Vec<LabeledPassage> {
    answers
        .into_iter()
        .map(|answer| {
            let match_f1 = if answer.is_null() { 0.0 } else { fuzzy_f1(&answer.text, object) };
            LabeledPassage {
                question: question.to_string(),
                passage_id: answer.passage_id.clone(),
                label: if match_f1 >= threshold { Label::Positive } else { Label::Negative },
                answer,
                match_f1,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRef {
    pub passage_id: String,
    pub start: usize,
    pub end: usize,
}

/// One training question for the Answer Ranker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingQuestion {
    pub question: String,
    pub positives: Vec<SpanRef>,
    pub negatives: Vec<SpanRef>,
}

fn span_ref(l: &LabeledPassage) -> Option<SpanRef> {
    l.answer.span.map(|s| SpanRef {
        passage_id: l.passage_id.clone(),
        start: s.start,
        end: s.end,
    })
}

/// Retrieves, reads and labels passages for every row with a known object.
/// Rows short of `min_pos` positives or `n_neg` non-null negatives are
/// skipped and counted; negatives are the first `n_neg` by passage id.
pub fn build_training_set<R: Reader + ?Sized>(
    tables: &[PartialTable],
    index: &IndexedCorpus,
    reader: &R,
    cfg: &SupervisionConfig,
) -> Result<(Vec<TrainingQuestion>, usize)> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut skipped = 0;
    for table in tables {
        table.validate()?;
        for row in &table.rows {
            let Some(object) = &row.object else { continue };
            let question = table.question(&row.subject);
            let query = preprocess_question(&question, &row.subject).with_boost(cfg.boost_weight);
            let hits = index.retrieve(&query, cfg.retrieve_k);
            let passages: Vec<_> = hits
                .iter()
                .map(|h| index.passage(&h.passage_id).expect("hits come from the index"))
                .collect();
            let items: Vec<ReadItem<'_>> = passages
                .iter()
                .map(|&passage| ReadItem {
                    question: &question,
                    passage,
                })
                .collect();
            let first = passages.first().map_or("", |p| p.passage_id.as_str());
            let answers = reader.read_batch(&items).map_err(reader_context(&question, first))?;
            for (a, p) in answers.iter().zip(&passages) {
                a.validate(p).map_err(reader_context(&question, &p.passage_id))?;
            }
            let labeled = label_answers(&question, answers, object, cfg.f1_threshold);
            let positives: Vec<SpanRef> = labeled
                .iter()
                .filter(|l| l.label == Label::Positive)
                .filter_map(span_ref)
                .collect();
            let mut negatives: Vec<SpanRef> = labeled
                .iter()
                .filter(|l| l.label == Label::Negative)
                .filter_map(span_ref)
                .collect();
            if positives.len() < cfg.min_pos || negatives.len() < cfg.n_neg {
                skipped += 1;
                continue;
            }
            negatives.sort_by(|a, b| a.passage_id.cmp(&b.passage_id));
            negatives.truncate(cfg.n_neg);
            out.push(TrainingQuestion {
                question,
                positives,
                negatives,
            });
        }
    }
    if skipped > 0 {
        log::info!("distant supervision: skipped {skipped} rows short of positives or negatives");
    }
    Ok((out, skipped))
}

/// Encodes every labeled span into Answer Ranker features.
pub fn ranker_examples<R: Reader + ?Sized>(
    training: &[TrainingQuestion],
    index: &IndexedCorpus,
    reader: &R,
) -> Result<Vec<RankerExample>> {
    let features = |q: &str, spans: &[SpanRef]| -> Result<Vec<Vec<f64>>> {
        spans
            .iter()
            .map(|s| {
                let passage = index
                    .passage(&s.passage_id)
                    .ok_or_else(|| Error::UnknownPassage(s.passage_id.clone()))?;
                if s.start > s.end || s.end >= passage.len() {
                    return Err(Error::Span {
                        start: s.start as i64,
                        end: s.end as i64,
                        len: passage.len(),
                    });
                }
                let encoding = reader
                    .encode(q, passage)
                    .map_err(reader_context(q, &s.passage_id))?;
                let answer = AnswerSpan::found(
                    &s.passage_id,
                    TokenSpan::new(s.start, s.end),
                    passage.span_text(s.start, s.end),
                    0.0,
                    0.0,
                );
                Ok(featurize(&encoding, &answer)?.h)
            })
            .collect()
    };
    training
        .iter()
        .map(|t| {
            Ok(RankerExample {
                positives: features(&t.question, &t.positives)?,
                negatives: features(&t.question, &t.negatives)?,
            })
        })
        .collect()
}

/// Runs the funnel up to the Answer Ranker for every training row, labels
/// its candidates against the known object, and prepares coherence inputs
/// for the top `m` (extended until both labels appear). Rows whose
/// candidates are all one label are skipped and counted.
pub fn build_coherence_examples<R: Reader + ?Sized>(
    pipeline: &Pipeline<'_, R>,
    tables: &[PartialTable],
    m: usize,
    threshold: f64,
) -> Result<(Vec<CoherenceExample>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for table in tables {
        table.validate()?;
        for row in &table.rows {
            let Some(object) = &row.object else { continue };
            let question = table.question(&row.subject);
            let rc = pipeline.answer_candidates(&question, &row.subject, pipeline.config.k2)?;
            let labels: Vec<bool> = rc
                .candidates
                .iter()
                .map(|c| fuzzy_f1(&c.answer.text, object) >= threshold)
                .collect();
            let Some(window) = select_training_window(&labels, m) else {
                skipped += 1;
                continue;
            };
            let chosen: Vec<_> = window.iter().map(|&i| rc.candidates[i].clone()).collect();
            let prepared = prepare_candidates(pipeline.reader, pipeline.index, &question, &row.subject, &chosen)?;
            out.push(CoherenceExample {
                candidates: prepared
                    .inputs
                    .into_iter()
                    .zip(window.iter().map(|&i| labels[i]))
                    .collect(),
            });
        }
    }
    Ok((out, skipped))
}
