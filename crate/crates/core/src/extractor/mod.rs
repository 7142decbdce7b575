//! Runs the funnel for every row of a table, pools expert scores across the
//! rows of the relationship and picks one answer per row.

mod ensemble;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::{score_candidates, CoherenceBreakdown, CoherenceParams};
use crate::error::{Error, Result};
use crate::index::{preprocess_question, IndexedCorpus};
use crate::rankers::{answer_rank, encode_answers, rank_passages, MlpParams, PipelineConfig, RankedCandidate};
use crate::readers::{AnswerSpan, Reader};

pub use ensemble::{normalize_experts, select_final, zscore_normalize, ExpertScores, NormalizedScores, TIE_EPS};

/// Placeholder for the key value in question templates.
pub const SUBJECT_SLOT: &str = "<subject>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub subject: String,
    /// Ground truth, used only for training and evaluation.
    #[serde(default)]
    pub object: Option<String>,
}

/// One relationship: a key column and a question template for the missing
/// attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialTable {
    pub relationship_id: String,
    pub key_attribute: String,
    pub question_template: String,
    pub rows: Vec<TableRow>,
}

impl PartialTable {
    pub fn validate(&self) -> Result<()> {
        let slots = self.question_template.matches(SUBJECT_SLOT).count();
        if slots != 1 {
            return Err(Error::Table(format!(
                "template `{}` must contain {SUBJECT_SLOT} exactly once (found {slots})",
                self.question_template
            )));
        }
        if let Some(i) = self.rows.iter().position(|r| r.subject.trim().is_empty()) {
            return Err(Error::Table(format!("row {i} has an empty subject")));
        }
        Ok(())
    }

    pub fn question(&self, subject: &str) -> String {
        self.question_template.replacen(SUBJECT_SLOT, subject, 1)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let table: PartialTable = crate::io::read_json_file(path)?;
        table.validate()?;
        Ok(table)
    }
}

/// Wall-clock milliseconds spent in each stage of the funnel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub retrieve_ms: f64,
    pub read_ms: f64,
    pub answer_rank_ms: f64,
    pub coherence_ms: f64,
}

impl StageTimings {
    /// Cumulative latency after each of the four stages.
    pub fn cumulative(&self) -> [f64; 4] {
        let a = self.retrieve_ms;
        let b = a + self.read_ms;
        let c = b + self.answer_rank_ms;
        [a, b, c, c + self.coherence_ms]
    }
}

/// Candidate counts after each stage of one row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelCounts {
    pub retrieved: usize,
    pub ranked: usize,
    pub answered: usize,
    pub candidates: usize,
    pub chosen: usize,
}

/// A candidate answer with raw and normalized expert scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub passage_id: String,
    pub doc_id: String,
    pub answer_text: String,
    pub start_tok: usize,
    pub end_tok: usize,
    pub s_openqa_raw: f64,
    pub s_coher_raw: Option<f64>,
    pub s_openqa_z: Option<f64>,
    pub s_coher_z: Option<f64>,
    pub s_final: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coherence: Option<CoherenceBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_subject: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Filled,
    Empty,
    Failed,
}

/// The answer chosen for one row, with its provenance and the candidates it
/// was chosen from (best first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilledCell {
    pub row: usize,
    pub subject: String,
    pub question: String,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    pub answer_text: String,
    pub passage_id: Option<String>,
    pub doc_id: Option<String>,
    pub s_openqa_raw: Option<f64>,
    pub s_coher_raw: Option<f64>,
    pub s_final: Option<f64>,
    pub alternatives: Vec<Alternative>,
    pub funnel: FunnelCounts,
    pub timings: StageTimings,
}

impl FilledCell {
    pub fn chosen(&self) -> Option<&Alternative> {
        match self.status {
            CellStatus::Filled => self.alternatives.first(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub total_ms: f64,
    pub mean_ms: f64,
    /// Questions per second through this stage alone.
    pub qps: f64,
}

/// Per-stage wall-clock totals for a table run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: usize,
    pub stages: std::collections::BTreeMap<String, StageReport>,
    pub select_ms: f64,
    pub total_ms: f64,
}

impl TimingReport {
    fn from_cells(cells: &[FilledCell], select_ms: f64, total_ms: f64) -> Self {
        let n = cells.len();
        let mut stages = std::collections::BTreeMap::new();
        type Field = fn(&StageTimings) -> f64;
        let pick: [(&str, Field); 4] = [
            ("retrieve", |t| t.retrieve_ms),
            ("read", |t| t.read_ms),
            ("answer_rank", |t| t.answer_rank_ms),
            ("coherence", |t| t.coherence_ms),
        ];
        for (name, f) in pick {
            let total: f64 = cells.iter().map(|c| f(&c.timings)).sum();
            stages.insert(
                name.to_string(),
                StageReport {
                    total_ms: total,
                    mean_ms: if n == 0 { 0.0 } else { total / n as f64 },
                    qps: if total > 0.0 { n as f64 / (total / 1000.0) } else { 0.0 },
                },
            );
        }
        TimingReport {
            rows: n,
            stages,
            select_ms,
            total_ms,
        }
    }
}

/// Everything the funnel needs, borrowed for the duration of a run.
pub struct Pipeline<'a, R: Reader + ?Sized> {
    pub index: &'a IndexedCorpus,
    pub reader: &'a R,
    pub ranker: &'a MlpParams,
    /// `None` runs the open-QA baseline: one candidate per row, ranked by
    /// the Answer Ranker alone.
    pub coherence: Option<&'a CoherenceParams>,
    pub config: PipelineConfig,
    /// Upper bound on rows processed concurrently; 0 uses all cores.
    pub jobs: usize,
}

impl<R: Reader + ?Sized> Clone for Pipeline<'_, R> {
    fn clone(&self) -> Self {
        Pipeline { ..*self }
    }
}

/// Output of the funnel for one row before cross-row selection.
#[derive(Debug, Clone)]
pub struct RowCandidates {
    pub question: String,
    pub candidates: Vec<RankedCandidate>,
    pub coherence: Option<Vec<(f64, CoherenceBreakdown, AnswerSpan)>>,
    pub funnel: FunnelCounts,
    pub timings: StageTimings,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

impl<'a, R: Reader + ?Sized> Pipeline<'a, R> {
    fn k3(&self) -> usize {
        if self.coherence.is_some() {
            self.config.k3
        } else {
            1
        }
    }

    /// Candidates for one question, up to the Answer Ranker, keeping `k3`.
    pub fn answer_candidates(&self, question: &str, subject: &str, k3: usize) -> Result<RowCandidates> {
        let cfg = &self.config;
        let mut timings = StageTimings::default();
        let mut funnel = FunnelCounts::default();

        let t = Instant::now();
        let query = preprocess_question(question, subject).with_boost(cfg.boost_weight);
        let hits = self.index.retrieve(&query, cfg.k1);
        timings.retrieve_ms = elapsed_ms(t);
        funnel.retrieved = hits.len();

        let t = Instant::now();
        let ranked = rank_passages(self.reader, self.index, question, &hits, cfg.k2)?;
        timings.read_ms = elapsed_ms(t);
        funnel.ranked = ranked.len();

        let t = Instant::now();
        let inputs = encode_answers(self.reader, question, &ranked)?;
        funnel.answered = inputs.len();
        let candidates = answer_rank(self.ranker, question, inputs, k3)?;
        timings.answer_rank_ms = elapsed_ms(t);
        funnel.candidates = candidates.len();

        Ok(RowCandidates {
            question: question.to_string(),
            candidates,
            coherence: None,
            funnel,
            timings,
        })
    }

    /// The whole funnel for one row.
    pub fn process_row(&self, table: &PartialTable, subject: &str) -> Result<RowCandidates> {
        let question = table.question(subject);
        let mut row = self.answer_candidates(&question, subject, self.k3())?;
        if let Some(params) = self.coherence {
            let t = Instant::now();
            let (scored, warnings) = score_candidates(
                params,
                self.reader,
                self.index,
                &question,
                subject,
                std::mem::take(&mut row.candidates),
            )?;
            if warnings > 0 {
                log::warn!("row `{subject}`: {warnings} candidates scored without a backward reading");
            }
            let mut coher = Vec::with_capacity(scored.len());
            for s in scored {
                coher.push((s.s_coher, s.breakdown, s.p_subject));
                row.candidates.push(s.candidate);
            }
            row.coherence = Some(coher);
            row.timings.coherence_ms = elapsed_ms(t);
        }
        Ok(row)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }

    /// Fills every row of the table. Row failures are reported in their cell
    /// and do not stop the run.
    pub fn fill_table(&self, table: &PartialTable) -> Result<(Vec<FilledCell>, TimingReport)> {
        table.validate()?;
        self.config.validate()?;
        let start = Instant::now();
        let rows: Vec<Result<RowCandidates>> = self.pool()?.install(|| {
            table
                .rows
                .par_iter()
                .map(|r| self.process_row(table, &r.subject))
                .collect()
        });
        let t = Instant::now();
        let cells = self.assemble(table, rows)?;
        let select_ms = elapsed_ms(t);
        let report = TimingReport::from_cells(&cells, select_ms, elapsed_ms(start));
        Ok((cells, report))
    }

    fn assemble(&self, table: &PartialTable, rows: Vec<Result<RowCandidates>>) -> Result<Vec<FilledCell>> {
        let use_coherence = self.coherence.is_some();
        let scores: Vec<Vec<ExpertScores>> = rows
            .iter()
            .map(|r| match r {
                Ok(rc) => rc
                    .candidates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| ExpertScores {
                        passage_id: c.passage_id.clone(),
                        openqa: c.s_openqa,
                        coherence: rc.coherence.as_ref().map_or(0.0, |v| v[i].0),
                    })
                    .collect(),
                Err(_) => Vec::new(),
            })
            .collect();
        let normalized = if use_coherence {
            Some(normalize_experts(&scores)?)
        } else {
            None
        };

        let mut cells = Vec::with_capacity(rows.len());
        for (i, (row, result)) in table.rows.iter().zip(rows).enumerate() {
            let question = table.question(&row.subject);
            let mut cell = FilledCell {
                row: i,
                subject: row.subject.clone(),
                question,
                status: CellStatus::Empty,
                reason: None,
                answer_text: String::new(),
                passage_id: None,
                doc_id: None,
                s_openqa_raw: None,
                s_coher_raw: None,
                s_final: None,
                alternatives: Vec::new(),
                funnel: FunnelCounts::default(),
                timings: StageTimings::default(),
            };
            let rc = match result {
                Ok(rc) => rc,
                Err(e) => {
                    log::warn!("row {i} (`{}`) failed: {e}", row.subject);
                    cell.status = CellStatus::Failed;
                    cell.reason = Some(e.to_string());
                    cells.push(cell);
                    continue;
                }
            };
            cell.funnel = rc.funnel;
            cell.timings = rc.timings;
            let mut alts = Vec::with_capacity(rc.candidates.len());
            for (j, c) in rc.candidates.iter().enumerate() {
                let span = c.answer.span.expect("ranked candidates are non-null");
                let doc_id = self
                    .index
                    .passage(&c.passage_id)
                    .map(|p| p.doc_id.clone())
                    .ok_or_else(|| Error::UnknownPassage(c.passage_id.clone()))?;
                let coher = rc.coherence.as_ref().map(|v| &v[j]);
                let z = normalized.as_ref().map(|n| n[i][j]);
                alts.push(Alternative {
                    passage_id: c.passage_id.clone(),
                    doc_id,
                    answer_text: c.answer.text.clone(),
                    start_tok: span.start,
                    end_tok: span.end,
                    s_openqa_raw: c.s_openqa,
                    s_coher_raw: coher.map(|v| v.0),
                    s_openqa_z: z.map(|z| z.openqa),
                    s_coher_z: z.map(|z| z.coherence),
                    s_final: z.map_or(c.s_openqa, |z| z.s_final),
                    coherence: coher.map(|v| v.1),
                    p_subject: coher.and_then(|v| (!v.2.is_null()).then(|| v.2.text.clone())),
                });
            }
            alts.sort_by(|a, b| {
                b.s_final
                    .total_cmp(&a.s_final)
                    .then_with(|| a.passage_id.cmp(&b.passage_id))
            });
            if let Some(top) = alts.first().map(|a| a.s_final) {
                let pick = (0..alts.len())
                    .filter(|&k| alts[k].s_final >= top - TIE_EPS)
                    .min_by(|&a, &b| alts[a].passage_id.cmp(&alts[b].passage_id))
                    .unwrap_or(0);
                let chosen = alts.remove(pick);
                alts.insert(0, chosen);
            }
            match alts.first() {
                Some(best) => {
                    cell.status = CellStatus::Filled;
                    cell.answer_text = best.answer_text.clone();
                    cell.passage_id = Some(best.passage_id.clone());
                    cell.doc_id = Some(best.doc_id.clone());
                    cell.s_openqa_raw = Some(best.s_openqa_raw);
                    cell.s_coher_raw = best.s_coher_raw;
                    cell.s_final = Some(best.s_final);
                    cell.funnel.chosen = 1;
                }
                None => cell.reason = Some("no-candidates".into()),
            }
            cell.alternatives = alts;
            cells.push(cell);
        }
        Ok(cells)
    }
}

/// Runs the full funnel with both experts.
pub fn fill_table<R: Reader + ?Sized>(
    table: &PartialTable,
    index: &IndexedCorpus,
    reader: &R,
    ranker: &MlpParams,
    coherence: &CoherenceParams,
    config: &PipelineConfig,
) -> Result<(Vec<FilledCell>, TimingReport)> {
    Pipeline {
        index,
        reader,
        ranker,
        coherence: Some(coherence),
        config: *config,
        jobs: 0,
    }
    .fill_table(table)
}

/// Open-QA baseline: the Answer Ranker's top candidate per row.
pub fn fabricqa_only<R: Reader + ?Sized>(
    table: &PartialTable,
    index: &IndexedCorpus,
    reader: &R,
    ranker: &MlpParams,
    config: &PipelineConfig,
) -> Result<(Vec<FilledCell>, TimingReport)> {
    Pipeline {
        index,
        reader,
        ranker,
        coherence: None,
        config: *config,
        jobs: 0,
    }
    .fill_table(table)
}
