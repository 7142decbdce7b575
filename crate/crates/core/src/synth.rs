//! Synthetic corpora and tables for tests, examples and benchmarks.
//!
//! Every generated word is a unique pseudo-word, so the only lexical overlap
//! between documents is the one planted on purpose.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Document;
use crate::extractor::{PartialTable, TableRow};
use crate::rankers::RankerExample;

pub const CAPITAL_TEMPLATE: &str = "What is the capital of <subject>?";

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 6] = ["", "n", "r", "l", "x", "k"];
const FILLER_FRAMES: [&str; 4] = [
    "The {} of {} is {} {} .",
    "{} {} was built by the {} on {} .",
    "It is said that {} and {} are {} {} .",
    "{} {} , {} {} .",
];

/// Deterministic source of distinct pronounceable pseudo-words.
pub struct WordGen {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordGen {
    pub fn new(seed: u64) -> Self {
        let reserved = ["city", "capital", "vale", "the", "national", "parliament", "exiles", "sailors"];
        WordGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: reserved.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// A fresh lowercase word of 2–3 syllables.
    pub fn word(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).unwrap());
                w.push_str(VOWELS.choose(&mut self.rng).unwrap());
            }
            w.push_str(CODAS.choose(&mut self.rng).unwrap());
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    /// A fresh capitalized word.
    pub fn name(&mut self) -> String {
        let w = self.word();
        let mut c = w.chars();
        let first = c.next().unwrap().to_uppercase();
        first.chain(c).collect()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn filler_text(words: &mut WordGen, sentences: usize) -> String {
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let frame = *FILLER_FRAMES.choose(words.rng()).unwrap();
        let mut s = String::new();
        let mut parts = frame.split("{}").peekable();
        while let Some(p) = parts.next() {
            s.push_str(p);
            if parts.peek().is_some() {
                s.push_str(&words.word());
            }
        }
        out.push(s);
    }
    out.join(" ")
}

/// A table row with its planted fact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedFact {
    pub subject: String,
    pub object: String,
    pub doc_id: String,
}

/// Documents plus the tables they answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub documents: Vec<Document>,
    pub table: PartialTable,
    pub facts: Vec<PlantedFact>,
    /// Rows with known objects for training, if the fixture has any.
    pub training: Option<PartialTable>,
    /// Row of `table` whose decoy is planted, and the decoy's document.
    pub decoy: Option<(usize, String)>,
}

fn fact_text(subject: &str, object: &str) -> String {
    format!("{object} , {subject} , hosts the national parliament .")
}

/// Passage that answers the forward question with `answer` but names the
/// subject's words only apart, so reading it backwards yields another subject.
fn decoy_text(subject: &str, answer: &str, words: &mut WordGen) -> String {
    let (first, second) = subject.split_once(' ').expect("two-word subjects");
    format!(
        "{answer} , {} exiles , welcomed {first} {} . It was the capital .",
        second.to_lowercase(),
        words.word()
    )
}

fn subject(words: &mut WordGen) -> String {
    format!("{} {}", words.name(), words.name())
}

fn object(words: &mut WordGen) -> String {
    format!("{} City", words.name())
}

fn table(id: &str, facts: &[PlantedFact]) -> PartialTable {
    PartialTable {
        relationship_id: id.to_string(),
        key_attribute: "country".into(),
        question_template: CAPITAL_TEMPLATE.into(),
        rows: facts
            .iter()
            .map(|f| TableRow {
                subject: f.subject.clone(),
                object: Some(f.object.clone()),
            })
            .collect(),
    }
}

/// 50 documents: 10 state one (country, capital) fact each, 40 are unrelated
/// filler. Each row of the table is answered by exactly one passage.
pub fn planted_fixture(seed: u64) -> Fixture {
    let mut words = WordGen::new(seed);
    let mut documents = Vec::with_capacity(50);
    let mut facts = Vec::with_capacity(10);
    for i in 0..10 {
        let doc_id = format!("fact-{i:03}");
        let (s, o) = (subject(&mut words), object(&mut words));
        documents.push(Document {
            doc_id: doc_id.clone(),
            title: String::new(),
            text: format!("{} {}", fact_text(&s, &o), filler_text(&mut words, 2)),
        });
        facts.push(PlantedFact {
            subject: s,
            object: o,
            doc_id,
        });
    }
    for i in 0..40 {
        documents.push(Document {
            doc_id: format!("filler-{i:03}"),
            title: String::new(),
            text: filler_text(&mut words, 4),
        });
    }
    Fixture {
        table: table("capital", &facts),
        documents,
        facts,
        training: None,
        decoy: None,
    }
}

/// Planted facts for a test table and `n_train` training rows. Every training
/// row also gets `decoys_per_row` decoy passages, and test row `poisoned`
/// gets one decoy whose answer is the object of a training row.
pub fn decoy_fixture(seed: u64, n_train: usize, decoys_per_row: usize, poisoned: usize) -> Fixture {
    assert!(n_train > 0 && poisoned < 10);
    let mut words = WordGen::new(seed);
    let mut documents = Vec::new();
    let push = |documents: &mut Vec<Document>, doc_id: String, text: String| {
        documents.push(Document {
            doc_id,
            title: String::new(),
            text,
        })
    };

    let mut train_facts = Vec::with_capacity(n_train);
    for i in 0..n_train {
        let doc_id = format!("train-{i:03}");
        let (s, o) = (subject(&mut words), object(&mut words));
        push(&mut documents, doc_id.clone(), fact_text(&s, &o));
        for j in 0..decoys_per_row {
            let wrong = object(&mut words);
            let text = decoy_text(&s, &wrong, &mut words);
            push(&mut documents, format!("train-{i:03}-decoy-{j}"), text);
        }
        train_facts.push(PlantedFact {
            subject: s,
            object: o,
            doc_id,
        });
    }

    let mut facts = Vec::with_capacity(10);
    for i in 0..10 {
        let doc_id = format!("test-{i:03}");
        let (s, o) = (subject(&mut words), object(&mut words));
        push(&mut documents, doc_id.clone(), fact_text(&s, &o));
        facts.push(PlantedFact {
            subject: s,
            object: o,
            doc_id,
        });
    }
    let decoy_id = format!("test-{poisoned:03}-decoy");
    let seen_answer = train_facts[0].object.clone();
    let text = decoy_text(&facts[poisoned].subject, &seen_answer, &mut words);
    push(&mut documents, decoy_id.clone(), text);

    for i in 0..40 {
        let text = filler_text(&mut words, 4);
        push(&mut documents, format!("filler-{i:03}"), text);
    }
    Fixture {
        table: table("capital", &facts),
        training: Some(table("capital", &train_facts)),
        documents,
        facts,
        decoy: Some((poisoned, decoy_id)),
    }
}

/// Answer Ranker examples where the first feature separates positives
/// (in `[0.5, 1.5]`) from negatives (in `[-1.5, -0.5]`); the rest is noise.
pub fn separable_ranker_data(questions: usize, n_neg: usize, dim: usize, seed: u64) -> Vec<RankerExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |sign: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        x[0] = sign * rng.random_range(0.5..1.5);
        x
    };
    (0..questions)
        .map(|_| RankerExample {
            positives: vec![sample(1.0, &mut rng)],
            negatives: (0..n_neg).map(|_| sample(-1.0, &mut rng)).collect(),
        })
        .collect()
}

/// Random whitespace-separated text drawn from a small vocabulary with
/// punctuation and genitives mixed in.
pub fn random_text<R: Rng>(rng: &mut R, max_tokens: usize) -> String {
    const VOCAB: [&str; 16] = [
        "alpha", "Beta", "gamma's", "delta", "(eps)", "zeta,", "eta.", "theta!", "iota", "kappa-lambda",
        "mu", "\"nu\"", "xi's", "...", "omicron", "<sub_mask>",
    ];
    let n = rng.random_range(1..=max_tokens.max(1));
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{chunk_corpus, ChunkConfig};
    use crate::index::build_index;
    use crate::readers::{Reader, StubReader};

    #[test]
    fn words_are_unique_and_deterministic() {
        let mut a = WordGen::new(1);
        let mut b = WordGen::new(1);
        let wa: Vec<String> = (0..500).map(|_| a.word()).collect();
        let wb: Vec<String> = (0..500).map(|_| b.word()).collect();
        assert_eq!(wa, wb);
        assert_eq!(wa.iter().collect::<HashSet<_>>().len(), 500);
    }

    #[test]
    fn planted_corpus_shape() {
        let f = planted_fixture(7);
        assert_eq!(f.documents.len(), 50);
        assert_eq!(f.table.rows.len(), 10);
        f.table.validate().unwrap();
    }

    #[test]
    fn only_the_planted_passage_answers() {
        let f = planted_fixture(7);
        let passages = chunk_corpus(&f.documents, &ChunkConfig::default()).unwrap();
        let reader = StubReader::new(0, 8).unwrap();
        for fact in &f.facts {
            let q = f.table.question(&fact.subject);
            let found: Vec<_> = passages
                .iter()
                .map(|p| reader.read(&q, p).unwrap())
                .filter(|a| !a.is_null())
                .collect();
            assert_eq!(found.len(), 1, "{q}");
            assert_eq!(found[0].text, fact.object);
            assert_eq!(found[0].passage_id, format!("{}#0", fact.doc_id));
        }
        assert!(build_index(passages).is_ok());
    }

    #[test]
    fn decoy_outscores_the_fact_on_margin() {
        let f = decoy_fixture(3, 4, 5, 2);
        let passages = chunk_corpus(&f.documents, &ChunkConfig::default()).unwrap();
        let reader = StubReader::new(0, 8).unwrap();
        let (row, decoy_id) = f.decoy.clone().unwrap();
        let q = f.table.question(&f.facts[row].subject);
        let by_id = |id: &str| passages.iter().find(|p| p.doc_id == id).unwrap();
        let decoy = reader.read(&q, by_id(&decoy_id)).unwrap();
        let fact = reader.read(&q, by_id(&f.facts[row].doc_id)).unwrap();
        assert_eq!(fact.text, f.facts[row].object);
        assert_eq!(decoy.text, f.training.as_ref().unwrap().rows[0].object.as_deref().unwrap());
        assert!(decoy.s_margin > fact.s_margin);
    }
}
