use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpGrads, MlpParams};
use crate::error::Result;

/// Cross-entropy of each positive against all negatives, averaged over the
/// positives:
///
/// `loss = -(1/N⁺) Σᵢ log(exp(sᵢ⁺) / (exp(sᵢ⁺) + Σⱼ exp(sⱼ⁻)))`
///
/// Returns the loss and its gradient with respect to every score.
pub fn listwise_loss(pos: &[f64], neg: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n_pos = pos.len() as f64;
    let mut loss = 0.0;
    let mut d_pos = vec![0.0; pos.len()];
    let mut d_neg = vec![0.0; neg.len()];
    for (i, &sp) in pos.iter().enumerate() {
        let max = neg.iter().copied().fold(sp, f64::max);
        let z: f64 = (sp - max).exp() + neg.iter().map(|&s| (s - max).exp()).sum::<f64>();
        let log_z = max + z.ln();
        loss += log_z - sp;
        d_pos[i] += ((sp - log_z).exp() - 1.0) / n_pos;
        for (j, &sn) in neg.iter().enumerate() {
            d_neg[j] += (sn - log_z).exp() / n_pos;
        }
    }
    (loss / n_pos, d_pos, d_neg)
}

/// Precomputed features of one training question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerExample {
    pub positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<P> {
    pub params: P,
    /// Mean inference-mode loss before training (index 0) and after each epoch.
    pub loss_trace: Vec<f64>,
    /// Questions ignored because they lacked positives or negatives.
    pub skipped: usize,
}

fn mean_loss(params: &MlpParams, data: &[&RankerExample]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ex in data {
        let pos: Vec<f64> = ex.positives.iter().map(|h| params.score(h)).collect::<Result<_>>()?;
        let neg: Vec<f64> = ex.negatives.iter().map(|h| params.score(h)).collect::<Result<_>>()?;
        total += listwise_loss(&pos, &neg).0;
    }
    Ok(total / data.len() as f64)
}

/// Plain gradient descent, one update per question, dropout on in training.
pub fn train_answer_ranker(
    mut params: MlpParams,
    data: &[RankerExample],
    cfg: &TrainConfig,
) -> Result<TrainReport<MlpParams>> {
    params.validate()?;
    let usable: Vec<&RankerExample> = data
        .iter()
        .filter(|ex| !ex.positives.is_empty() && !ex.negatives.is_empty())
        .collect();
    let skipped = data.len() - usable.len();
    if skipped > 0 {
        log::warn!("answer ranker: ignoring {skipped} questions without both positives and negatives");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut loss_trace = vec![mean_loss(&params, &usable)?];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &qi in &order {
            let ex = usable[qi];
            let inputs: Vec<&Vec<f64>> = ex.positives.iter().chain(&ex.negatives).collect();
            let mut traces = Vec::with_capacity(inputs.len());
            for h in &inputs {
                let mask = params.sample_mask(&mut rng);
                traces.push(params.forward_trace(h, mask)?);
            }
            let scores: Vec<f64> = traces.iter().map(|t| t.output[0]).collect();
            let (pos, neg) = scores.split_at(ex.positives.len());
            let (_, d_pos, d_neg) = listwise_loss(pos, neg);
            let mut grads = MlpGrads::zeros_like(&params);
            for ((h, trace), up) in inputs.iter().zip(&traces).zip(d_pos.iter().chain(&d_neg)) {
                grads.accumulate(&params.backward(h, trace, &[*up])?);
            }
            params.step(&grads, cfg.lr);
        }
        loss_trace.push(mean_loss(&params, &usable)?);
    }
    Ok(TrainReport {
        params,
        loss_trace,
        skipped,
    })
}
