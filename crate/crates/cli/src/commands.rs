use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, ValueEnum};

use relfill_core::coherence::{build_backward_training_data, train_coherence as fit_coherence, BackwardTuple, CoherenceParams};
use relfill_core::evalkit::{bench_throughput, evaluate, sample_training, SamplerSpec};
use relfill_core::extractor::{CellStatus, FilledCell, PartialTable, Pipeline};
use relfill_core::io::{read_jsonl_file, write_json_file, write_jsonl_file};
use relfill_core::rankers::{train_answer_ranker, RankerExample, TrainConfig};
use relfill_core::supervision::{build_coherence_examples, build_training_set, ranker_examples, SupervisionConfig, TrainingQuestion};
use relfill_core::{build_index, chunk_corpus, preprocess_question, ChunkConfig, Document, IndexedCorpus, MlpParams};

use crate::{existing, existing_all, FunnelArgs, ReaderArgs, Usage};

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// JSONL corpus: {"doc_id", "title", "text"} per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    chunk_size: usize,
    /// Defaults to half the chunk size.
    #[arg(long)]
    stride: Option<usize>,
}

pub fn index(a: IndexArgs) -> anyhow::Result<ExitCode> {
    let docs: Vec<Document> = read_jsonl_file(existing(&a.corpus)?)?;
    let mut cfg = ChunkConfig::with_size(a.chunk_size);
    if let Some(s) = a.stride {
        cfg.stride = s;
    }
    let passages = chunk_corpus(&docs, &cfg)?;
    let idx = build_index(passages)?;
    idx.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("indexed {} documents into {} passages", docs.len(), idx.len());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
        }
    }
}

fn load_index(path: &Path) -> anyhow::Result<IndexedCorpus> {
    IndexedCorpus::load(existing(path)?).with_context(|| format!("loading index {}", path.display()))
}

fn load_ranker(path: &Path) -> anyhow::Result<MlpParams> {
    let text = std::fs::read_to_string(existing(path)?)?;
    MlpParams::from_json(&text).with_context(|| format!("loading ranker {}", path.display()))
}

fn load_tables(paths: &[PathBuf]) -> anyhow::Result<Vec<PartialTable>> {
    existing_all(paths)?;
    paths
        .iter()
        .map(|p| PartialTable::load(p).with_context(|| format!("loading table {}", p.display())))
        .collect()
}

fn check_width(name: &str, expected: usize, actual: usize) -> anyhow::Result<()> {
    if expected != actual {
        return Err(Usage(format!("{name} expects reader width {expected}, reader has d={actual}")).into());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct FillArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Answer Ranker parameters; a seeded initialization is used when absent.
    #[arg(long)]
    ranker: Option<PathBuf>,
    /// Coherence parameters; a seeded initialization is used when absent.
    #[arg(long)]
    coherence: Option<PathBuf>,
    /// Open-QA baseline: Answer Ranker only, one candidate per row.
    #[arg(long)]
    no_coherence: bool,
    /// Filled cells, one JSON object per row.
    #[arg(long)]
    out: PathBuf,
    /// Per-stage timing report.
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Seed and width for parameters initialized in place of missing files.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[command(flatten)]
    funnel: FunnelArgs,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn fill(a: FillArgs) -> anyhow::Result<ExitCode> {
    let table = load_tables(std::slice::from_ref(&a.table))?.remove(0);
    let index = load_index(&a.index)?;
    let config = a.funnel.config()?;
    let reader = a.reader.build()?;
    let d = reader.dim();
    let ranker = match &a.ranker {
        Some(p) => load_ranker(p)?,
        None => {
            log::warn!("no --ranker given: using untrained parameters (seed {})", a.seed);
            MlpParams::init_seeded(5 * d, a.hidden, 1, 0.0, a.seed)
        }
    };
    check_width("ranker", ranker.d_in() / 5, d)?;
    let coherence = match (&a.coherence, a.no_coherence) {
        (_, true) => None,
        (Some(p), false) => Some(
            CoherenceParams::load(existing(p)?).with_context(|| format!("loading coherence {}", p.display()))?,
        ),
        (None, false) => {
            log::warn!("no --coherence given: using untrained parameters (seed {})", a.seed);
            Some(CoherenceParams::init_seeded(d, a.hidden, 0.0, a.seed))
        }
    };
    if let Some(c) = &coherence {
        check_width("coherence model", c.d, d)?;
    }
    let pipeline = Pipeline {
        index: &index,
        reader: reader.as_ref(),
        ranker: &ranker,
        coherence: coherence.as_ref(),
        config,
        jobs: a.funnel.jobs,
    };
    let (cells, report) = pipeline.fill_table(&table)?;
    write_jsonl_file(&a.out, &cells)?;
    if let Some(t) = &a.timings {
        write_json_file(t, &report)?;
    }
    let count = |s: CellStatus| cells.iter().filter(|c| c.status == s).count();
    let failed = count(CellStatus::Failed);
    println!(
        "{} rows: {} filled, {} empty, {} failed ({:.0} ms)",
        cells.len(),
        count(CellStatus::Filled),
        count(CellStatus::Empty),
        failed,
        report.total_ms
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

#[derive(Debug, Args)]
struct SupervisionArgs {
    /// Passages retrieved per training row.
    #[arg(long, default_value_t = 150)]
    retrieve_k: usize,
    /// Fuzzy F1 at or above which an answer counts as the object.
    #[arg(long, default_value_t = 0.7)]
    f1_threshold: f64,
    #[arg(long, default_value_t = 1)]
    min_pos: usize,
    #[arg(long, default_value_t = 5)]
    n_neg: usize,
    #[arg(long, default_value_t = 1.0)]
    boost_weight: f64,
}

impl SupervisionArgs {
    fn config(&self) -> anyhow::Result<SupervisionConfig> {
        let cfg = SupervisionConfig {
            retrieve_k: self.retrieve_k,
            f1_threshold: self.f1_threshold,
            min_pos: self.min_pos,
            n_neg: self.n_neg,
            boost_weight: self.boost_weight,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BuildDataArgs {
    /// Tables whose rows carry known objects.
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<PathBuf>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    supervision: SupervisionArgs,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn build_data(a: BuildDataArgs) -> anyhow::Result<ExitCode> {
    let tables = load_tables(&a.tables)?;
    let index = load_index(&a.index)?;
    let cfg = a.supervision.config()?;
    let reader = a.reader.build()?;
    let (set, skipped) = build_training_set(&tables, &index, reader.as_ref(), &cfg)?;
    write_jsonl_file(&a.out, &set)?;
    println!("{} training questions, {skipped} rows skipped", set.len());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct TrainRankerArgs {
    /// Training set from build-data (needs --index).
    #[arg(long, conflicts_with = "examples", required_unless_present = "examples")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    index: Option<PathBuf>,
    /// Precomputed feature vectors: {"positives": [[..]], "negatives": [[..]]} per line.
    #[arg(long)]
    examples: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Loss before training and after every epoch, as JSON.
    #[arg(long)]
    loss_trace: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn train_ranker(a: TrainRankerArgs) -> anyhow::Result<ExitCode> {
    let examples: Vec<RankerExample> = match (&a.data, &a.examples) {
        (_, Some(path)) => read_jsonl_file(existing(path)?)?,
        (Some(data), None) => {
            let Some(index) = &a.index else {
                return Err(Usage("--data needs --index".into()).into());
            };
            let training: Vec<TrainingQuestion> = read_jsonl_file(existing(data)?)?;
            let index = load_index(index)?;
            let reader = a.reader.build()?;
            ranker_examples(&training, &index, reader.as_ref())?
        }
        (None, None) => unreachable!("clap requires one of --data and --examples"),
    };
    let d_in = examples
        .iter()
        .flat_map(|e| e.positives.iter().chain(&e.negatives))
        .map(Vec::len)
        .next()
        .ok_or_else(|| Usage("no training examples".into()))?;
    let init = MlpParams::init_seeded(d_in, a.train.hidden, 1, a.train.dropout, a.train.seed);
    let report = train_answer_ranker(init, &examples, &a.train.config())?;
    std::fs::write(&a.out, report.params.to_json()?)?;
    if let Some(p) = &a.loss_trace {
        write_json_file(p, &report.loss_trace)?;
    }
    println!(
        "trained on {} questions ({} skipped): loss {:.4} -> {:.4}",
        examples.len() - report.skipped,
        report.skipped,
        report.loss_trace[0],
        report.loss_trace.last().unwrap()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct TrainCoherenceArgs {
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<PathBuf>,
    #[arg(long)]
    index: PathBuf,
    /// Trained Answer Ranker used to produce the candidates.
    #[arg(long)]
    ranker: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Candidates per question in the training window.
    #[arg(long, default_value_t = 7)]
    m: usize,
    #[arg(long, default_value_t = 0.7)]
    f1_threshold: f64,
    #[arg(long)]
    loss_trace: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    funnel: FunnelArgs,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn train_coherence(a: TrainCoherenceArgs) -> anyhow::Result<ExitCode> {
    let tables = load_tables(&a.tables)?;
    let index = load_index(&a.index)?;
    let ranker = load_ranker(&a.ranker)?;
    let mut config = a.funnel.config()?;
    config.m = a.m;
    config.validate()?;
    let reader = a.reader.build()?;
    check_width("ranker", ranker.d_in() / 5, reader.dim())?;
    let pipeline = Pipeline {
        index: &index,
        reader: reader.as_ref(),
        ranker: &ranker,
        coherence: None,
        config,
        jobs: a.funnel.jobs,
    };
    let (examples, skipped) = build_coherence_examples(&pipeline, &tables, a.m, a.f1_threshold)?;
    if examples.is_empty() {
        return Err(Usage(format!("no usable coherence training questions ({skipped} skipped)")).into());
    }
    let init = CoherenceParams::init_seeded(reader.dim(), a.train.hidden, a.train.dropout, a.train.seed);
    let report = fit_coherence(init, &examples, a.m, &a.train.config())?;
    report.params.save(&a.out)?;
    if let Some(p) = &a.loss_trace {
        write_json_file(p, &report.loss_trace)?;
    }
    println!(
        "trained on {} questions ({} skipped): loss {:.4} -> {:.4}",
        examples.len(),
        skipped,
        report.loss_trace[0],
        report.loss_trace.last().unwrap()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct BuildBackwardDataArgs {
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<PathBuf>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Passages retrieved per (subject, object) pair.
    #[arg(long, default_value_t = 30)]
    retrieve_k: usize,
    #[arg(long, default_value_t = 0.7)]
    f1_threshold: f64,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn build_backward_data(a: BuildBackwardDataArgs) -> anyhow::Result<ExitCode> {
    let tables = load_tables(&a.tables)?;
    let index = load_index(&a.index)?;
    let reader = a.reader.build()?;
    let mut tuples = Vec::new();
    for t in &tables {
        for row in &t.rows {
            let Some(object) = &row.object else { continue };
            let question = t.question(&row.subject);
            let hits = index.retrieve(&preprocess_question(&question, &row.subject), a.retrieve_k);
            let passages = hits.iter().filter_map(|h| index.passage(&h.passage_id)).collect();
            let tuple = BackwardTuple {
                question_template: t.question_template.clone(),
                subject: row.subject.clone(),
                object: object.clone(),
            };
            tuples.push((tuple, passages));
        }
    }
    let (examples, skipped) = build_backward_training_data(reader.as_ref(), &tuples, a.f1_threshold)?;
    write_jsonl_file(&a.out, &examples)?;
    println!("{} backward examples from {} pairs, {skipped} pairs without any", examples.len(), tuples.len());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `fill`.
    #[arg(long)]
    filled: PathBuf,
    /// The table with its known objects.
    #[arg(long)]
    table: PathBuf,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn eval(a: EvalArgs) -> anyhow::Result<ExitCode> {
    let cells: Vec<FilledCell> = read_jsonl_file(existing(&a.filled)?)?;
    let table = load_tables(std::slice::from_ref(&a.table))?.remove(0);
    let result = evaluate(&cells, &table)?;
    match &a.out {
        Some(p) => {
            write_json_file(p, &result)?;
            println!("{}: EM {:.2} F1 {:.2} over {} rows", result.relationship_id, result.em, result.f1, result.rows.len());
        }
        None => println!("{}", serde_json::to_string_pretty(&result)?),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    ranker: PathBuf,
    #[arg(long)]
    coherence: PathBuf,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Report JSON keyed by stage.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    funnel: FunnelArgs,
    #[command(flatten)]
    reader: ReaderArgs,
}

pub fn bench(a: BenchArgs) -> anyhow::Result<ExitCode> {
    let table = load_tables(std::slice::from_ref(&a.table))?.remove(0);
    let index = load_index(&a.index)?;
    let ranker = load_ranker(&a.ranker)?;
    let coherence = CoherenceParams::load(existing(&a.coherence)?)?;
    let reader = a.reader.build()?;
    check_width("ranker", ranker.d_in() / 5, reader.dim())?;
    check_width("coherence model", coherence.d, reader.dim())?;
    let pipeline = Pipeline {
        index: &index,
        reader: reader.as_ref(),
        ranker: &ranker,
        coherence: Some(&coherence),
        config: a.funnel.config()?,
        jobs: 1,
    };
    let report = bench_throughput(&pipeline, &table, a.repeats)?;
    if let Some(p) = &a.out {
        write_json_file(p, &report.stages)?;
    }
    for (name, s) in report.ordered() {
        println!("{name:<20} {:>10.1} q/s  median {:.2} ms", s.qps, s.median_latency_ms);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMode {
    ChangingRows,
    ChangingRelationships,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, num_args = 1.., required = true)]
    tables: Vec<PathBuf>,
    #[arg(long, value_enum)]
    mode: SampleMode,
    /// Share of rows kept per table (changing-rows).
    #[arg(long)]
    fraction: Option<f64>,
    /// Tables kept (changing-relationships).
    #[arg(long)]
    count: Option<usize>,
    /// Rows kept per table (changing-relationships).
    #[arg(long)]
    rows_per_relation: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the sampled tables, one `<relationship_id>.json` each.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn sample(a: SampleArgs) -> anyhow::Result<ExitCode> {
    let tables = load_tables(&a.tables)?;
    let missing = |flag: &str| Usage(format!("--mode {:?} needs --{flag}", a.mode));
    let spec = match a.mode {
        SampleMode::ChangingRows => SamplerSpec::ChangingRows {
            fraction: a.fraction.ok_or_else(|| missing("fraction"))?,
            seed: a.seed,
        },
        SampleMode::ChangingRelationships => SamplerSpec::ChangingRelationships {
            count: a.count.ok_or_else(|| missing("count"))?,
            rows_per_relation: a.rows_per_relation.ok_or_else(|| missing("rows-per-relation"))?,
            seed: a.seed,
        },
    };
    let sampled = sample_training(&tables, &spec)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for t in &sampled {
        write_json_file(&a.out_dir.join(format!("{}.json", t.relationship_id)), t)?;
    }
    let rows: usize = sampled.iter().map(|t| t.rows.len()).sum();
    println!("sampled {} tables, {rows} rows", sampled.len());
    Ok(ExitCode::SUCCESS)
}
