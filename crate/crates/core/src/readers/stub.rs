use std::collections::HashSet;

use crate::coherence::ReverseQuestion;
use crate::corpus::{tokenize, Passage, SUB_MASK};
use crate::error::ReaderError;
use crate::index::fold;

use super::{AnswerSpan, Reader, TokenEncoding, TokenSpan};

pub const STOPWORDS: [&str; 25] = [
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "is", "it", "its", "of",
    "on", "or", "that", "the", "to", "was", "were", "what", "which", "with",
];

/// Distance (in tokens) on either side of a run searched for question tokens.
const CONTEXT_WINDOW: usize = 3;

/// Reserved token whose vector stands in for the sequence summary.
pub const CLS_TOKEN: &str = "<cls>";

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// Lexical stand-in for a reading-comprehension model.
///
/// An answer is the longest run of passage tokens that are not question tokens,
/// stopwords or punctuation, and that has a content question token within
/// three positions on either side. Its score is the run length. The null score
/// is 0.5 per content question token missing from the passage. Ties prefer the
/// run closest to a question token, then the earliest run.
///
/// Token vectors are unit-norm Gaussian directions seeded by a hash of the
/// lowercased token, so equal tokens share a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubReader {
    seed: u64,
    dim: usize,
}

impl StubReader {
    pub fn new(seed: u64, dim: usize) -> Result<Self, ReaderError> {
        if dim < 4 || !dim.is_multiple_of(2) {
            return Err(ReaderError::InvalidInput(format!(
                "stub dimension must be even and at least 4, got {dim}"
            )));
        }
        Ok(StubReader { seed, dim })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deterministic unit vector for a token.
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = SplitMix64::new(fnv1a(fold(token).as_bytes()) ^ mix(self.seed));
        let mut v = Vec::with_capacity(self.dim);
        while v.len() < self.dim {
            // Box-Muller, one pair per draw
            let u1 = 1.0 - rng.next_f64();
            let u2 = rng.next_f64();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            v.push(r * theta.cos());
            v.push(r * theta.sin());
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }

    fn answer(&self, question_tokens: &[String], passage: &Passage) -> Result<AnswerSpan, ReaderError> {
        if passage.is_empty() {
            return Err(ReaderError::InvalidInput(format!(
                "passage `{}` is empty",
                passage.passage_id
            )));
        }
        let question: HashSet<String> = question_tokens.iter().map(|t| fold(t)).collect();
        let content: HashSet<&str> = question
            .iter()
            .map(String::as_str)
            .filter(|t| !is_stopword(t) && !is_punctuation(t) && *t != SUB_MASK)
            .collect();
        let folded: Vec<String> = passage.tokens.iter().map(|t| fold(t)).collect();
        let present: HashSet<&str> = folded.iter().map(String::as_str).collect();
        let missing = content.iter().filter(|t| !present.contains(*t)).count();
        let s_null = 0.5 * missing as f64;

        let content_positions: Vec<usize> = folded
            .iter()
            .enumerate()
            .filter(|(_, t)| content.contains(t.as_str()))
            .map(|(i, _)| i)
            .collect();
        let eligible =
            |t: &str| !question.contains(t) && !is_stopword(t) && !is_punctuation(t);

        // (len, distance, start, end)
        let mut best: Option<(usize, usize, usize, usize)> = None;
        let mut i = 0;
        while i < folded.len() {
            if !eligible(&folded[i]) {
                i += 1;
                continue;
            }
            let start = i;
            while i < folded.len() && eligible(&folded[i]) {
                i += 1;
            }
            let end = i - 1;
            let distance = content_positions
                .iter()
                .map(|&p| if p < start { start - p } else { p - end })
                .filter(|&d| d <= CONTEXT_WINDOW)
                .min();
            if let Some(distance) = distance {
                let len = end - start + 1;
                let better = match best {
                    None => true,
                    Some((bl, bd, _, _)) => len > bl || (len == bl && distance < bd),
                };
                if better {
                    best = Some((len, distance, start, end));
                }
            }
        }
        Ok(match best {
            Some((len, _, start, end)) => AnswerSpan::found(
                &passage.passage_id,
                TokenSpan::new(start, end),
                passage.span_text(start, end),
                len as f64,
                s_null,
            ),
            None => AnswerSpan::null(&passage.passage_id, 0.0, s_null),
        })
    }
}

impl Reader for StubReader {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read(&self, question: &str, passage: &Passage) -> Result<AnswerSpan, ReaderError> {
        self.answer(&tokenize(question), passage)
    }

    fn read_backward(&self, reverse_question: &str, passage: &Passage) -> Result<AnswerSpan, ReaderError> {
        let tokens = match ReverseQuestion::parse(reverse_question) {
            Some(rq) => {
                let mut t = tokenize(&rq.object_text);
                t.extend(tokenize(&rq.masked_question));
                t
            }
            None => tokenize(reverse_question),
        };
        self.answer(&tokens, passage)
    }

    fn encode(&self, question: &str, passage: &Passage) -> Result<TokenEncoding, ReaderError> {
        Ok(TokenEncoding {
            question_vectors: tokenize(question).iter().map(|t| self.token_vector(t)).collect(),
            passage_vectors: passage.tokens.iter().map(|t| self.token_vector(t)).collect(),
            cls_vector: self.token_vector(CLS_TOKEN),
            d: self.dim,
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix(self.0)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passage(text: &str) -> Passage {
        Passage::from_text("p", "d", text)
    }

    #[test]
    fn reads_capital_of_france() {
        let r = StubReader::new(7, 8).unwrap();
        let a = r
            .read("capital of France?", &passage("the capital of france is paris"))
            .unwrap();
        assert_eq!(a.text, "paris");
        assert_eq!(a.span, Some(TokenSpan::single(5)));
        assert!(a.s_best >= 1.0);
        assert!(a.s_margin > 0.0);
    }

    #[test]
    fn disjoint_question_is_null() {
        let r = StubReader::new(7, 8).unwrap();
        let a = r.read("capital of France?", &passage("zebras graze quietly")).unwrap();
        assert!(a.is_null());
        assert_eq!(a.bounds(), (-1, -1));
        assert_eq!(a.s_best, 0.0);
        assert!(a.s_margin <= 0.0);
        assert_eq!(a.s_margin, a.s_best - a.s_null);
    }

    #[test]
    fn reads_are_deterministic() {
        let r = StubReader::new(3, 8).unwrap();
        let p = passage("Zorblat is in Freedonia . It was founded long ago .");
        let a = r.read("What is the capital of Freedonia?", &p).unwrap();
        let b = r.read("What is the capital of Freedonia?", &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.text, "Zorblat");
        assert!(a.validate(&p).is_ok());
    }

    #[test]
    fn empty_passage_is_an_error() {
        let r = StubReader::new(3, 8).unwrap();
        assert!(r.read("q", &passage("")).is_err());
    }

    #[test]
    fn backward_read_recovers_subject() {
        let r = StubReader::new(3, 8).unwrap();
        let p = passage("Zorblat is in Freedonia .");
        let a = r
            .read_backward(
                "object : Zorblat , question : What is the capital of <sub_mask> ?",
                &p,
            )
            .unwrap();
        assert_eq!(a.text, "Freedonia");
    }

    #[test]
    fn encoding_properties() {
        let r = StubReader::new(11, 6).unwrap();
        let p = passage("Paris is the capital");
        let e = r.encode("capital of France", &p).unwrap();
        assert_eq!(e.question_vectors[0], e.passage_vectors[3]);
        for v in e.question_vectors.iter().chain(&e.passage_vectors) {
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
        assert_eq!(e.cls_vector, r.token_vector("<cls>"));
        e.validate(3, 4).unwrap();

        let other = StubReader::new(12, 6).unwrap();
        assert_ne!(other.token_vector("capital"), r.token_vector("capital"));
        assert_eq!(r.token_vector("Capital"), r.token_vector("capital"));
    }

    #[test]
    fn dimension_must_be_even_and_at_least_four() {
        assert!(StubReader::new(0, 3).is_err());
        assert!(StubReader::new(0, 2).is_err());
        assert!(StubReader::new(0, 5).is_err());
        assert!(StubReader::new(0, 4).is_ok());
    }
}
