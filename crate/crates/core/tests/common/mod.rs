#![allow(dead_code)]

use relfill_core::coherence::{train_coherence, CoherenceParams};
use relfill_core::extractor::Pipeline;
use relfill_core::rankers::{train_answer_ranker, TrainConfig};
use relfill_core::supervision::{build_coherence_examples, build_training_set, ranker_examples, SupervisionConfig};
use relfill_core::synth::Fixture;
use relfill_core::{build_index, chunk_corpus, ChunkConfig, IndexedCorpus, MlpParams, PipelineConfig, StubReader};

pub const DIM: usize = 32;
pub const HIDDEN: usize = 16;

pub fn index_of(fixture: &Fixture) -> IndexedCorpus {
    build_index(chunk_corpus(&fixture.documents, &ChunkConfig::default()).unwrap()).unwrap()
}

pub fn reader() -> StubReader {
    StubReader::new(11, DIM).unwrap()
}

pub struct Trained {
    pub ranker: MlpParams,
    pub coherence: CoherenceParams,
    pub ranker_loss: Vec<f64>,
    pub coherence_loss: Vec<f64>,
}

/// Trains both experts on the fixture's training rows.
pub fn train(fixture: &Fixture, index: &IndexedCorpus, reader: &StubReader) -> Trained {
    let tables = vec![fixture.training.clone().expect("fixture has training rows")];
    let (training, skipped) = build_training_set(&tables, index, reader, &SupervisionConfig::default()).unwrap();
    assert_eq!(skipped, 0);
    let examples = ranker_examples(&training, index, reader).unwrap();
    let cfg = TrainConfig { epochs: 50, lr: 0.05, seed: 1 };
    let ranker = train_answer_ranker(MlpParams::init_seeded(5 * DIM, HIDDEN, 1, 0.0, 2), &examples, &cfg).unwrap();

    let pipeline = Pipeline {
        index,
        reader,
        ranker: &ranker.params,
        coherence: None,
        config: PipelineConfig::default(),
        jobs: 1,
    };
    let (coh_examples, skipped) = build_coherence_examples(&pipeline, &tables, 7, 0.7).unwrap();
    assert_eq!(skipped, 0);
    let coherence = train_coherence(CoherenceParams::init_seeded(DIM, HIDDEN, 0.0, 3), &coh_examples, 7, &cfg).unwrap();
    Trained {
        ranker: ranker.params,
        coherence: coherence.params,
        ranker_loss: ranker.loss_trace,
        coherence_loss: coherence.loss_trace,
    }
}
