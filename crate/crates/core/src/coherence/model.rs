use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CoherenceInput;
use crate::error::{Error, Result};
use crate::io::check_header;
use crate::rankers::mlp::{MlpGrads, MlpParams, MlpTrace};

const FORMAT: &str = "relfill-coherence";
const VERSION: u32 = 1;

/// Similarity assigned to both hops when the backward reader found no subject.
pub const NULL_SUBJECT_FLOOR: f64 = -1.0;

/// The three heads of the coherence model for reader dimension `d`.
///
/// * `theta1`: answer features (5d) to a forward score
/// * `theta2`: `[a; b; a⊙b]` of two 4d vectors (12d) to a similarity
/// * `theta_obj`: `[f_span(obj); b_span(obj)]` (4d) to a unified object (2d)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceParams {
    pub d: usize,
    pub theta1: MlpParams,
    pub theta2: MlpParams,
    pub theta_obj: MlpParams,
}

#[derive(Serialize, Deserialize)]
struct CoherenceFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    params: CoherenceParams,
}

/// The three terms of a coherence score and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceBreakdown {
    pub forward: f64,
    pub one_hop: f64,
    pub two_hop: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceGrads {
    pub theta1: MlpGrads,
    pub theta2: MlpGrads,
    pub theta_obj: MlpGrads,
}

impl CoherenceGrads {
    pub fn zeros_like(p: &CoherenceParams) -> Self {
        CoherenceGrads {
            theta1: MlpGrads::zeros_like(&p.theta1),
            theta2: MlpGrads::zeros_like(&p.theta2),
            theta_obj: MlpGrads::zeros_like(&p.theta_obj),
        }
    }

    pub fn accumulate(&mut self, other: &CoherenceGrads) {
        self.theta1.accumulate(&other.theta1);
        self.theta2.accumulate(&other.theta2);
        self.theta_obj.accumulate(&other.theta_obj);
    }
}

struct SimTrace {
    x: Vec<f64>,
    trace: MlpTrace,
}

struct HopTraces {
    obj: MlpTrace,
    h_p: Vec<f64>,
    h_mask: Vec<f64>,
    h_sub: Vec<f64>,
    one_hop: SimTrace,
    two_hop: SimTrace,
}

/// Forward pass of one candidate, kept for backpropagation.
pub struct CoherenceTrace {
    forward: MlpTrace,
    hops: Option<HopTraces>,
    pub breakdown: CoherenceBreakdown,
}

fn pair_input(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(3 * a.len());
    x.extend_from_slice(a);
    x.extend_from_slice(b);
    x.extend(a.iter().zip(b).map(|(u, v)| u * v));
    x
}

/// `θ2([a; b; a⊙b])`
pub fn similarity(theta2: &MlpParams, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "similarity operands",
            expected: a.len(),
            actual: b.len(),
        });
    }
    theta2.score(&pair_input(a, b))
}

/// Inference-mode coherence score.
pub fn coherence_score(params: &CoherenceParams, input: &CoherenceInput) -> Result<CoherenceBreakdown> {
    Ok(params.trace(input, |_| None)?.breakdown)
}

fn check_len(context: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            actual: v.len(),
        })
    }
}

impl CoherenceParams {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        CoherenceParams {
            d,
            theta1: MlpParams::zeros(5 * d, hidden, 1),
            theta2: MlpParams::zeros(12 * d, hidden, 1),
            theta_obj: MlpParams::zeros(4 * d, hidden, 2 * d),
        }
    }

    pub fn init<R: Rng>(d: usize, hidden: usize, dropout_rate: f64, rng: &mut R) -> Self {
        CoherenceParams {
            d,
            theta1: MlpParams::init(5 * d, hidden, 1, dropout_rate, rng),
            theta2: MlpParams::init(12 * d, hidden, 1, dropout_rate, rng),
            theta_obj: MlpParams::init(4 * d, hidden, 2 * d, dropout_rate, rng),
        }
    }

    pub fn init_seeded(d: usize, hidden: usize, dropout_rate: f64, seed: u64) -> Self {
        Self::init(d, hidden, dropout_rate, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        for (name, p, d_in, d_out) in [
            ("theta1", &self.theta1, 5 * d, 1),
            ("theta2", &self.theta2, 12 * d, 1),
            ("theta_obj", &self.theta_obj, 4 * d, 2 * d),
        ] {
            p.validate()?;
            if p.d_in() != d_in || p.d_out() != d_out {
                return Err(Error::Format(format!(
                    "{name} is {}→{}, expected {d_in}→{d_out} for d = {d}",
                    p.d_in(),
                    p.d_out()
                )));
            }
        }
        Ok(())
    }

    fn check_input(&self, input: &CoherenceInput) -> Result<()> {
        let d = self.d;
        check_len("coherence answer features", &input.answer_features, 5 * d)?;
        if let Some(p) = &input.p_subject {
            check_len("coherence object", &input.object, 4 * d)?;
            check_len("coherence subject", &input.subject, 2 * d)?;
            check_len("coherence sub_mask", &input.sub_mask, 2 * d)?;
            check_len("coherence p_subject", p, 2 * d)?;
        }
        Ok(())
    }

    /// Forward pass; `mask` supplies a dropout mask per head invocation.
    pub fn trace(
        &self,
        input: &CoherenceInput,
        mut mask: impl FnMut(&MlpParams) -> Option<Vec<f64>>,
    ) -> Result<CoherenceTrace> {
        self.check_input(input)?;
        let forward = self.theta1.forward_trace(&input.answer_features, mask(&self.theta1))?;
        let f = forward.output[0];
        let Some(p_subject) = &input.p_subject else {
            return Ok(CoherenceTrace {
                forward,
                hops: None,
                breakdown: CoherenceBreakdown {
                    forward: f,
                    one_hop: NULL_SUBJECT_FLOOR,
                    two_hop: NULL_SUBJECT_FLOOR,
                    total: f + 2.0 * NULL_SUBJECT_FLOOR,
                },
            });
        };
        let obj = self.theta_obj.forward_trace(&input.object, mask(&self.theta_obj))?;
        let uni = &obj.output;
        let h_p = [uni.as_slice(), p_subject].concat();
        let h_mask = [uni.as_slice(), &input.sub_mask].concat();
        let h_sub = [uni.as_slice(), &input.subject].concat();
        let x1 = pair_input(&h_p, &h_mask);
        let t1 = self.theta2.forward_trace(&x1, mask(&self.theta2))?;
        let x2 = pair_input(&h_p, &h_sub);
        let t2 = self.theta2.forward_trace(&x2, mask(&self.theta2))?;
        let (one_hop, two_hop) = (t1.output[0], t2.output[0]);
        Ok(CoherenceTrace {
            forward,
            breakdown: CoherenceBreakdown {
                forward: f,
                one_hop,
                two_hop,
                total: f + one_hop + two_hop,
            },
            hops: Some(HopTraces {
                obj,
                h_p,
                h_mask,
                h_sub,
                one_hop: SimTrace { x: x1, trace: t1 },
                two_hop: SimTrace { x: x2, trace: t2 },
            }),
        })
    }

    /// Gradients of `upstream · total` with respect to all three heads.
    pub fn backward(&self, input: &CoherenceInput, trace: &CoherenceTrace, upstream: f64) -> Result<CoherenceGrads> {
        let mut grads = CoherenceGrads::zeros_like(self);
        grads.theta1 = self
            .theta1
            .backward(&input.answer_features, &trace.forward, &[upstream])?;
        let Some(hops) = &trace.hops else {
            return Ok(grads);
        };
        let n = 4 * self.d;
        let mut d_uni = vec![0.0; 2 * self.d];
        for (sim, other) in [(&hops.one_hop, &hops.h_mask), (&hops.two_hop, &hops.h_sub)] {
            let g = self.theta2.backward(&sim.x, &sim.trace, &[upstream])?;
            let (ga, rest) = g.x.split_at(n);
            let (gb, gab) = rest.split_at(n);
            for i in 0..n {
                // d/dh_p and d/d(other); only the first 2d entries depend on θ_obj
                let d_hp = ga[i] + gab[i] * other[i];
                let d_other = gb[i] + gab[i] * hops.h_p[i];
                if i < d_uni.len() {
                    d_uni[i] += d_hp + d_other;
                }
            }
            grads.theta2.accumulate(&g);
        }
        grads.theta_obj = self.theta_obj.backward(&input.object, &hops.obj, &d_uni)?;
        Ok(grads)
    }

    pub fn step(&mut self, grads: &CoherenceGrads, lr: f64) {
        self.theta1.step(&grads.theta1, lr);
        self.theta2.step(&grads.theta2, lr);
        self.theta_obj.step(&grads.theta_obj, lr);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CoherenceFile {
            format: FORMAT.into(),
            version: VERSION,
            params: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CoherenceFile = serde_json::from_str(text)?;
        check_header(FORMAT, &file.format, file.version, VERSION)?;
        file.params.validate()?;
        Ok(file.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
