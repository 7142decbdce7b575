use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{coherence_score, CoherenceGrads, CoherenceParams};
use super::CoherenceInput;
use crate::error::Result;
use crate::rankers::{listwise_loss, TrainConfig, TrainReport};

/// The pipeline's candidates for one training question, best first, each
/// labelled correct or not.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceExample {
    pub candidates: Vec<(CoherenceInput, bool)>,
}

/// Indices of the candidates used for training: the first `m`, extended one
/// at a time until both labels appear. `None` if the list never has both.
pub fn select_training_window(labels: &[bool], m: usize) -> Option<Vec<usize>> {
    let mut end = m.min(labels.len());
    let has = |end: usize, v: bool| labels[..end].contains(&v);
    while end < labels.len() && !(has(end, true) && has(end, false)) {
        end += 1;
    }
    (has(end, true) && has(end, false)).then(|| (0..end).collect())
}

struct Selected<'a> {
    pos: Vec<&'a CoherenceInput>,
    neg: Vec<&'a CoherenceInput>,
}

fn mean_loss(params: &CoherenceParams, data: &[Selected<'_>]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for q in data {
        let pos: Vec<f64> = q
            .pos
            .iter()
            .map(|i| coherence_score(params, i).map(|b| b.total))
            .collect::<Result<_>>()?;
        let neg: Vec<f64> = q
            .neg
            .iter()
            .map(|i| coherence_score(params, i).map(|b| b.total))
            .collect::<Result<_>>()?;
        total += listwise_loss(&pos, &neg).0;
    }
    Ok(total / data.len() as f64)
}

/// Jointly trains the three coherence heads with the listwise loss over the
/// top-`m` candidates of each question.
pub fn train_coherence(
    mut params: CoherenceParams,
    data: &[CoherenceExample],
    m: usize,
    cfg: &TrainConfig,
) -> Result<TrainReport<CoherenceParams>> {
    params.validate()?;
    let mut selected = Vec::new();
    for ex in data {
        let labels: Vec<bool> = ex.candidates.iter().map(|(_, l)| *l).collect();
        if let Some(window) = select_training_window(&labels, m) {
            let (pos, neg): (Vec<_>, Vec<_>) = window.iter().map(|&i| &ex.candidates[i]).partition(|(_, l)| *l);
            selected.push(Selected {
                pos: pos.into_iter().map(|(x, _)| x).collect(),
                neg: neg.into_iter().map(|(x, _)| x).collect(),
            });
        }
    }
    let skipped = data.len() - selected.len();
    if skipped > 0 {
        log::warn!("coherence: ignoring {skipped} questions without both correct and incorrect candidates");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..selected.len()).collect();
    let mut loss_trace = vec![mean_loss(&params, &selected)?];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &qi in &order {
            let q = &selected[qi];
            let inputs: Vec<&CoherenceInput> = q.pos.iter().chain(&q.neg).copied().collect();
            let mut traces = Vec::with_capacity(inputs.len());
            for x in &inputs {
                traces.push(params.trace(x, |head| head.sample_mask(&mut rng))?);
            }
            let scores: Vec<f64> = traces.iter().map(|t| t.breakdown.total).collect();
            let (pos, neg) = scores.split_at(q.pos.len());
            let (_, d_pos, d_neg) = listwise_loss(pos, neg);
            let mut grads = CoherenceGrads::zeros_like(&params);
            for ((x, trace), up) in inputs.iter().zip(&traces).zip(d_pos.iter().chain(&d_neg)) {
                grads.accumulate(&params.backward(x, trace, *up)?);
            }
            params.step(&grads, cfg.lr);
        }
        loss_trace.push(mean_loss(&params, &selected)?);
    }
    Ok(TrainReport {
        params,
        loss_trace,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_extends_past_m() {
        assert_eq!(select_training_window(&[true, false, false], 2), Some(vec![0, 1]));
        assert_eq!(
            select_training_window(&[false, false, false, true], 2),
            Some(vec![0, 1, 2, 3])
        );
        assert_eq!(select_training_window(&[true, true], 7), None);
        assert_eq!(select_training_window(&[], 7), None);
        assert_eq!(select_training_window(&[false, true, false], 7), Some(vec![0, 1, 2]));
    }

    fn input(d: usize, tag: f64, with_subject: bool) -> CoherenceInput {
        CoherenceInput {
            answer_features: vec![0.1; 5 * d],
            object: vec![tag; 4 * d],
            subject: vec![0.5; 2 * d],
            sub_mask: vec![-0.5; 2 * d],
            p_subject: with_subject.then(|| vec![tag; 2 * d]),
        }
    }

    #[test]
    fn learns_to_prefer_coherent_candidates() {
        let d = 2;
        let data: Vec<CoherenceExample> = (0..10)
            .map(|i| CoherenceExample {
                candidates: vec![
                    (input(d, -0.3 - 0.01 * i as f64, true), false),
                    (input(d, 0.4 + 0.01 * i as f64, true), true),
                    (input(d, 0.0, false), false),
                ],
            })
            .collect();
        let params = CoherenceParams::init_seeded(d, 8, 0.0, 1);
        let cfg = TrainConfig {
            epochs: 40,
            lr: 0.1,
            seed: 2,
        };
        let report = train_coherence(params, &data, 7, &cfg).unwrap();
        assert_eq!(report.skipped, 0);
        assert!(report.loss_trace[40] < report.loss_trace[0]);
        let p = &report.params;
        for ex in &data {
            let good = coherence_score(p, &ex.candidates[1].0).unwrap().total;
            let bad = coherence_score(p, &ex.candidates[0].0).unwrap().total;
            assert!(good > bad);
        }
    }
}
