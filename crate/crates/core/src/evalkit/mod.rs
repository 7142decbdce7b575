//! Answer metrics, per-table evaluation, training-set samplers and the
//! stage throughput benchmark.

mod bench;
mod metrics;
mod sample;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::{CellStatus, FilledCell, PartialTable};

pub use bench::{bench_throughput, BenchReport, BenchStage, BENCH_STAGES};
pub use metrics::{exact_match, normalize_answer, token_f1};
pub use sample::{sample_training, SamplerSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowScore {
    pub row: usize,
    pub subject: String,
    pub gold: String,
    pub predicted: String,
    pub em: f64,
    pub f1: f64,
}

/// Scores of one table; `em` and `f1` are means over rows, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub relationship_id: String,
    pub em: f64,
    pub f1: f64,
    pub rows: Vec<RowScore>,
}

/// Compares filled cells against the table's known objects. Empty and
/// failed cells score 0.
pub fn evaluate(filled: &[FilledCell], table: &PartialTable) -> Result<EvalResult> {
    if filled.len() != table.rows.len() {
        return Err(Error::Table(format!(
            "{} filled cells for a table of {} rows",
            filled.len(),
            table.rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(filled.len());
    for (i, (cell, row)) in filled.iter().zip(&table.rows).enumerate() {
        let gold = row
            .object
            .as_ref()
            .ok_or_else(|| Error::Table(format!("row {i} (`{}`) has no object to evaluate against", row.subject)))?;
        let (em, f1) = match cell.status {
            CellStatus::Filled => (exact_match(&cell.answer_text, gold), token_f1(&cell.answer_text, gold)),
            _ => (0.0, 0.0),
        };
        rows.push(RowScore {
            row: i,
            subject: row.subject.clone(),
            gold: gold.clone(),
            predicted: cell.answer_text.clone(),
            em,
            f1,
        });
    }
    let n = rows.len().max(1) as f64;
    Ok(EvalResult {
        relationship_id: table.relationship_id.clone(),
        em: 100.0 * rows.iter().map(|r| r.em).sum::<f64>() / n,
        f1: 100.0 * rows.iter().map(|r| r.f1).sum::<f64>() / n,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{FunnelCounts, StageTimings, TableRow};

    fn cell(row: usize, answer: &str, status: CellStatus) -> FilledCell {
        FilledCell {
            row,
            subject: format!("s{row}"),
            question: String::new(),
            status,
            reason: None,
            answer_text: answer.into(),
            passage_id: None,
            doc_id: None,
            s_openqa_raw: None,
            s_coher_raw: None,
            s_final: None,
            alternatives: vec![],
            funnel: FunnelCounts::default(),
            timings: StageTimings::default(),
        }
    }

    fn table(objects: &[&str]) -> PartialTable {
        PartialTable {
            relationship_id: "r".into(),
            key_attribute: "k".into(),
            question_template: "q <subject>".into(),
            rows: objects
                .iter()
                .enumerate()
                .map(|(i, o)| TableRow {
                    subject: format!("s{i}"),
                    object: Some(o.to_string()),
                })
                .collect(),
        }
    }

    #[test]
    fn aggregates() {
        let t = table(&["Paris", "Rome"]);
        let all = evaluate(&[cell(0, "paris", CellStatus::Filled), cell(1, "Rome.", CellStatus::Filled)], &t).unwrap();
        assert_eq!((all.em, all.f1), (100.0, 100.0));
        let half = evaluate(&[cell(0, "Paris", CellStatus::Filled), cell(1, "", CellStatus::Empty)], &t).unwrap();
        assert_eq!(half.em, 50.0);
        // a failed cell keeps any stale text out of the score
        let failed = evaluate(&[cell(0, "Paris", CellStatus::Failed), cell(1, "Rome", CellStatus::Filled)], &t).unwrap();
        assert_eq!(failed.em, 50.0);
        assert!(evaluate(&[cell(0, "Paris", CellStatus::Filled)], &t).is_err());
    }
}
