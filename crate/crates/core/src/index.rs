//! BM25 inverted index over passages with an exact-phrase boost.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Passage};
use crate::error::{Error, Result};
use crate::io::check_header;

const INDEX_FORMAT: &str = "relfill-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25 {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25 {
    fn default() -> Self {
        Bm25 { k1: 1.2, b: 0.75 }
    }
}

impl Bm25 {
    /// Lucene-style idf, always positive.
    pub fn idf(&self, n: usize, df: usize) -> f64 {
        let (n, df) = (n as f64, df as f64);
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn term_weight(&self, tf: u32, doc_len: u32, avg_len: f64) -> f64 {
        let tf = tf as f64;
        let norm = if avg_len > 0.0 {
            1.0 - self.b + self.b * doc_len as f64 / avg_len
        } else {
            1.0
        };
        tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub passage: u32,
    pub tf: u32,
}

/// Case folding applied to every indexed and query token.
pub fn fold(token: &str) -> String {
    token.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundQuery {
    pub bag_terms: Vec<String>,
    pub exact_phrases: Vec<Vec<String>>,
    pub boost_weight: f64,
}

impl CompoundQuery {
    pub fn with_boost(mut self, boost_weight: f64) -> Self {
        self.boost_weight = boost_weight;
        self
    }
}

/// Tokenizes and case-folds a question; the subject becomes an exact phrase.
pub fn preprocess_question(question: &str, subject: &str) -> CompoundQuery {
    let bag_terms = tokenize(question).iter().map(|t| fold(t)).collect();
    let phrase: Vec<String> = tokenize(subject).iter().map(|t| fold(t)).collect();
    CompoundQuery {
        bag_terms,
        exact_phrases: if phrase.is_empty() { vec![] } else { vec![phrase] },
        boost_weight: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub passage_id: String,
    pub ir_score: f64,
}

/// Orders hits by score descending, then passage id ascending.
pub fn sort_hits(hits: &mut [RetrievalHit]) {
    hits.sort_by(|a, b| {
        b.ir_score
            .total_cmp(&a.ir_score)
            .then_with(|| a.passage_id.cmp(&b.passage_id))
    });
}

/// True when `phrase` occurs contiguously and in order in `tokens`.
pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

#[derive(Debug, Clone)]
pub struct IndexedCorpus {
    bm25: Bm25,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_len: f64,
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
    folded: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    bm25: Bm25,
    avg_len: f64,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    passages: Vec<Passage>,
}

pub fn build_index<I>(passages: I) -> Result<IndexedCorpus>
where
    I: IntoIterator<Item = Passage>,
{
    IndexedCorpus::build(passages, Bm25::default())
}

impl IndexedCorpus {
    pub fn build<I>(passages: I, bm25: Bm25) -> Result<Self>
    where
        I: IntoIterator<Item = Passage>,
    {
        let passages: Vec<Passage> = passages.into_iter().collect();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(passages.len());
        let mut seen = HashSet::new();
        for (i, p) in passages.iter().enumerate() {
            if !seen.insert(p.passage_id.as_str()) {
                return Err(Error::DuplicatePassage(p.passage_id.clone()));
            }
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &p.tokens {
                *tf.entry(fold(t)).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    passage: i as u32,
                    tf: count,
                });
            }
            doc_lengths.push(p.tokens.len() as u32);
        }
        let avg_len = mean_len(&doc_lengths);
        Ok(Self::assemble(bm25, postings, doc_lengths, avg_len, passages))
    }

    fn assemble(
        bm25: Bm25,
        postings: BTreeMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        avg_len: f64,
        passages: Vec<Passage>,
    ) -> Self {
        let by_id = passages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.passage_id.clone(), i))
            .collect();
        let folded = passages
            .iter()
            .map(|p| p.tokens.iter().map(|t| fold(t)).collect())
            .collect();
        IndexedCorpus {
            bm25,
            postings,
            doc_lengths,
            avg_len,
            passages,
            by_id,
            folded,
        }
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn bm25(&self) -> Bm25 {
        self.bm25
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn passage(&self, passage_id: &str) -> Option<&Passage> {
        self.by_id.get(passage_id).map(|&i| &self.passages[i])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// Top `k` passages by BM25 over the bag terms plus `boost_weight` per
    /// exact phrase present. Passages scoring zero are not hits.
    pub fn retrieve(&self, query: &CompoundQuery, k: usize) -> Vec<RetrievalHit> {
        if k == 0 || self.passages.is_empty() {
            return Vec::new();
        }
        let mut terms: Vec<&str> = Vec::new();
        for t in &query.bag_terms {
            if !terms.contains(&t.as_str()) {
                terms.push(t);
            }
        }
        let mut phrases: Vec<&[String]> = Vec::new();
        for p in &query.exact_phrases {
            if !p.is_empty() && !phrases.contains(&p.as_slice()) {
                phrases.push(p);
            }
        }

        let n = self.passages.len();
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = self.bm25.idf(n, list.len());
            for post in list {
                let dl = self.doc_lengths[post.passage as usize];
                *scores.entry(post.passage).or_insert(0.0) +=
                    idf * self.bm25.term_weight(post.tf, dl, self.avg_len);
            }
        }
        if query.boost_weight > 0.0 {
            for phrase in &phrases {
                for post in self.postings(&phrase[0]) {
                    if contains_phrase(&self.folded[post.passage as usize], phrase) {
                        *scores.entry(post.passage).or_insert(0.0) += query.boost_weight;
                    }
                }
            }
        }

        let mut hits: Vec<RetrievalHit> = scores
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(i, s)| RetrievalHit {
                passage_id: self.passages[i as usize].passage_id.clone(),
                ir_score: s,
            })
            .collect();
        sort_hits(&mut hits);
        hits.truncate(k);
        hits
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let file = IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            bm25: self.bm25,
            avg_len: self.avg_len,
            doc_lengths: self.doc_lengths.clone(),
            postings: self.postings.clone(),
            passages: self.passages.clone(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn read_from<R: Read>(reader: R) -> Result<Self> {
        let file: IndexFile = serde_json::from_reader(reader)?;
        check_header(INDEX_FORMAT, &file.format, file.version, INDEX_VERSION)?;
        if file.doc_lengths.len() != file.passages.len() {
            return Err(Error::Format("doc_lengths and passages disagree".into()));
        }
        for list in file.postings.values() {
            if list.iter().any(|p| p.passage as usize >= file.passages.len()) {
                return Err(Error::Format("posting refers to a missing passage".into()));
            }
        }
        Ok(Self::assemble(
            file.bm25,
            file.postings,
            file.doc_lengths,
            file.avg_len,
            file.passages,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(r)
    }
}

fn mean_len(lengths: &[u32]) -> f64 {
    if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64
    }
}
