use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{Batch, DimResponse, EncodeRequest, EncodeResponse, ReadRequest, ReadResponse};
use super::{AnswerSpan, ReadItem, Reader, TokenEncoding};
use crate::corpus::{tokenize, Passage};
use crate::error::ReaderError;

/// Client for a reader served over the JSON/HTTP protocol in [`super::wire`].
///
/// Large batches are split into requests of `batch_size` items; up to
/// `max_in_flight` requests run concurrently and results keep input order.
#[derive(Debug, Clone)]
pub struct RemoteReader {
    endpoint: String,
    agent: ureq::Agent,
    dim: usize,
    batch_size: usize,
    max_in_flight: usize,
}

impl RemoteReader {
    /// Connects and queries `GET /dim`.
    pub fn connect(endpoint: &str) -> Result<Self, ReaderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        let mut reader = RemoteReader {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
            dim: 0,
            batch_size: 32,
            max_in_flight: 4,
        };
        let dim: DimResponse = reader.get("/dim")?;
        if dim.d == 0 {
            return Err(ReaderError::Malformed("reader reports d=0".into()));
        }
        reader.dim = dim.d;
        Ok(reader)
    }

    pub fn with_batching(mut self, batch_size: usize, max_in_flight: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn transport(&self, e: impl std::fmt::Display) -> ReaderError {
        ReaderError::Transport {
            endpoint: self.endpoint.clone(),
            message: e.to_string(),
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ReaderError> {
        let mut resp = self
            .agent
            .get(&format!("{}{path}", self.endpoint))
            .call()
            .map_err(|e| self.transport(e))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| ReaderError::Malformed(format!("{path}: {e}")))
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ReaderError> {
        let mut resp = self
            .agent
            .post(&format!("{}{path}", self.endpoint))
            .send_json(body)
            .map_err(|e| self.transport(e))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| ReaderError::Malformed(format!("{path}: {e}")))
    }

    fn pipelined<T, U, F>(&self, items: &[T], call: F) -> Result<Vec<U>, ReaderError>
    where
        T: Sync,
        U: Send,
        F: Fn(&[T]) -> Result<Vec<U>, ReaderError> + Sync,
    {
        let chunks: Vec<&[T]> = items.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(items.len());
        for wave in chunks.chunks(self.max_in_flight) {
            if wave.len() == 1 {
                out.extend(call(wave[0])?);
                continue;
            }
            let results: Vec<Result<Vec<U>, ReaderError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave.iter().map(|chunk| s.spawn(|| call(chunk))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("reader request thread panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }

    fn read_path(&self, path: &str, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        self.pipelined(items, |chunk| {
            let body = Batch {
                items: chunk
                    .iter()
                    .map(|it| ReadRequest {
                        question: it.question.to_string(),
                        passage_tokens: it.passage.tokens.clone(),
                        passage_id: it.passage.passage_id.clone(),
                    })
                    .collect(),
            };
            let resp: Batch<ReadResponse> = self.post(path, &body)?;
            if resp.items.len() != chunk.len() {
                return Err(ReaderError::Malformed(format!(
                    "{path}: sent {} items, received {}",
                    chunk.len(),
                    resp.items.len()
                )));
            }
            chunk
                .iter()
                .zip(resp.items)
                .map(|(it, r)| {
                    let answer = r.into_answer(&it.passage.passage_id)?;
                    answer.validate(it.passage)?;
                    Ok(answer)
                })
                .collect()
        })
    }
}

impl Reader for RemoteReader {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read(&self, question: &str, passage: &Passage) -> Result<AnswerSpan, ReaderError> {
        let mut v = self.read_batch(&[ReadItem { question, passage }])?;
        Ok(v.remove(0))
    }

    fn read_backward(&self, reverse_question: &str, passage: &Passage) -> Result<AnswerSpan, ReaderError> {
        let mut v = self.read_backward_batch(&[ReadItem {
            question: reverse_question,
            passage,
        }])?;
        Ok(v.remove(0))
    }

    fn encode(&self, question: &str, passage: &Passage) -> Result<TokenEncoding, ReaderError> {
        let mut v = self.encode_batch(&[ReadItem { question, passage }])?;
        Ok(v.remove(0))
    }

    fn read_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        self.read_path("/read", items)
    }

    fn read_backward_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<AnswerSpan>, ReaderError> {
        self.read_path("/read_backward", items)
    }

    fn encode_batch(&self, items: &[ReadItem<'_>]) -> Result<Vec<TokenEncoding>, ReaderError> {
        self.pipelined(items, |chunk| {
            let body = Batch {
                items: chunk
                    .iter()
                    .map(|it| EncodeRequest {
                        question: it.question.to_string(),
                        passage_tokens: it.passage.tokens.clone(),
                    })
                    .collect(),
            };
            let resp: Batch<EncodeResponse> = self.post("/encode", &body)?;
            if resp.items.len() != chunk.len() {
                return Err(ReaderError::Malformed(format!(
                    "/encode: sent {} items, received {}",
                    chunk.len(),
                    resp.items.len()
                )));
            }
            chunk
                .iter()
                .zip(resp.items)
                .map(|(it, r)| {
                    let enc = r.into_encoding(self.dim);
                    enc.validate(tokenize(it.question).len(), it.passage.len())?;
                    Ok(enc)
                })
                .collect()
        })
    }
}
