//! Fill missing cells of partially filled relations by asking one question per
//! row against a document corpus.
//!
//! The pipeline is a funnel: BM25 retrieval ([`index`]) feeds a reader whose
//! margin scores filter passages, an MLP Answer Ranker keeps the best
//! candidates ([`rankers`]), and a relation-coherence model re-reads each
//! candidate backwards to check that the passage connects answer and subject
//! ([`coherence`]). Scores from the two experts are z-normalized across all
//! rows of the table before the final choice ([`extractor`]).

pub mod coherence;
pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod extractor;
pub mod index;
pub mod io;
pub mod rankers;
pub mod readers;
pub mod supervision;
pub mod synth;

pub use corpus::{chunk_corpus, tokenize, ChunkConfig, Document, Passage};
pub use error::{Error, ReaderError, Result};
pub use extractor::{FilledCell, PartialTable};
pub use index::{build_index, preprocess_question, CompoundQuery, IndexedCorpus, RetrievalHit};
pub use rankers::{MlpParams, PipelineConfig};
pub use readers::{AnswerSpan, Reader, RemoteReader, StubReader, TokenEncoding};
