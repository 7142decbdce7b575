mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relfill_core::{PipelineConfig, Reader, RemoteReader, StubReader};

/// Fill missing cells of partially filled tables from a document corpus.
#[derive(Debug, Parser)]
#[command(name = "relfill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk a JSONL corpus and build the BM25 index.
    Index(commands::IndexArgs),
    /// Fill the missing column of a table.
    Fill(commands::FillArgs),
    /// Label retrieved passages against known objects (distant supervision).
    BuildData(commands::BuildDataArgs),
    /// Train the Answer Ranker.
    TrainRanker(commands::TrainRankerArgs),
    /// Train the relation-coherence model on the pipeline's own candidates.
    TrainCoherence(commands::TrainCoherenceArgs),
    /// Build training data for a backward reader.
    BuildBackwardData(commands::BuildBackwardDataArgs),
    /// Score filled cells against a table's known objects.
    Eval(commands::EvalArgs),
    /// Measure per-stage throughput of the pipeline.
    Bench(commands::BenchArgs),
    /// Subsample training tables.
    Sample(commands::SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReaderKind {
    Stub,
    Remote,
}

#[derive(Debug, Args)]
struct ReaderArgs {
    #[arg(long, value_enum, default_value = "stub")]
    reader: ReaderKind,
    /// Base URL of a remote reader.
    #[arg(long, env = "RELFILL_READER_ENDPOINT")]
    endpoint: Option<String>,
    /// Stub reader seed.
    #[arg(long, default_value_t = 0)]
    reader_seed: u64,
    /// Stub reader vector width.
    #[arg(long, default_value_t = 32)]
    dim: usize,
    /// Requests per remote batch.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

impl ReaderArgs {
    fn build(&self) -> anyhow::Result<Box<dyn Reader>> {
        match self.reader {
            ReaderKind::Stub => {
                let r = StubReader::new(self.reader_seed, self.dim).map_err(|e| Usage(e.to_string()))?;
                Ok(Box::new(r))
            }
            ReaderKind::Remote => {
                let Some(endpoint) = &self.endpoint else {
                    return Err(Usage("--reader remote needs --endpoint or RELFILL_READER_ENDPOINT".into()).into());
                };
                let r = RemoteReader::connect(endpoint)?.with_batching(self.batch_size, 4);
                log::info!("remote reader at {} (d={})", r.endpoint(), r.dim());
                Ok(Box::new(r))
            }
        }
    }
}

#[derive(Debug, Args)]
struct FunnelArgs {
    /// Passages retrieved per question.
    #[arg(long, default_value_t = 30)]
    k1: usize,
    /// Passages kept by the Passage Ranker.
    #[arg(long, default_value_t = 30)]
    k2: usize,
    /// Candidates kept by the Answer Ranker.
    #[arg(long, default_value_t = 5)]
    k3: usize,
    /// Score added per exact subject phrase in a passage.
    #[arg(long, default_value_t = 1.0)]
    boost_weight: f64,
    /// Rows processed concurrently (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl FunnelArgs {
    fn config(&self) -> anyhow::Result<PipelineConfig> {
        let cfg = PipelineConfig {
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            boost_weight: self.boost_weight,
            ..PipelineConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A problem with the invocation itself (exit code 1).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn existing(path: &Path) -> anyhow::Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Usage(format!("no such file: {}", path.display())).into())
    }
}

fn existing_all(paths: &[PathBuf]) -> anyhow::Result<()> {
    if paths.is_empty() {
        return Err(Usage("at least one table is required".into()).into());
    }
    for p in paths {
        existing(p)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<relfill_core::Error>() {
            return if e.is_validation() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Index(a) => commands::index(a),
        Command::Fill(a) => commands::fill(a),
        Command::BuildData(a) => commands::build_data(a),
        Command::TrainRanker(a) => commands::train_ranker(a),
        Command::TrainCoherence(a) => commands::train_coherence(a),
        Command::BuildBackwardData(a) => commands::build_backward_data(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
        Command::Sample(a) => commands::sample(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
