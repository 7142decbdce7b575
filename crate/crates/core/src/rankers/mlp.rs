//! Two-layer perceptron `w2ᵀ·dropout(relu(w1ᵀ·x + b1)) + b2` with manual
//! backpropagation. Shared by the Answer Ranker and the coherence heads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::check_header;

const MLP_FORMAT: &str = "relfill-mlp";
const MLP_VERSION: u32 = 1;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// `d_in × d_hidden`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `d_hidden × d_out`
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub dropout_rate: f64,
}

#[derive(Serialize, Deserialize)]
struct MlpFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    params: MlpParams,
}

/// Gradients of an MLP output with respect to its parameters and input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub x: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pre: Vec<f64>,
    /// Inverted-dropout scale per hidden unit (`0` dropped, `1/(1-p)` kept).
    mask: Option<Vec<f64>>,
    hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(d_in: usize, d_hidden: usize, d_out: usize) -> Self {
        MlpParams {
            w1: Matrix::zeros(d_in, d_hidden),
            b1: vec![0.0; d_hidden],
            w2: Matrix::zeros(d_hidden, d_out),
            b2: vec![0.0; d_out],
            dropout_rate: 0.0,
        }
    }

    /// Uniform(−0.1, 0.1) initialization.
    pub fn init<R: Rng>(d_in: usize, d_hidden: usize, d_out: usize, dropout_rate: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(d_in, d_hidden, d_out);
        p.dropout_rate = dropout_rate;
        for v in p
            .w1
            .data
            .iter_mut()
            .chain(p.b1.iter_mut())
            .chain(p.w2.data.iter_mut())
            .chain(p.b2.iter_mut())
        {
            *v = rng.random_range(-0.1..0.1);
        }
        p
    }

    pub fn init_seeded(d_in: usize, d_hidden: usize, d_out: usize, dropout_rate: f64, seed: u64) -> Self {
        Self::init(d_in, d_hidden, d_out, dropout_rate, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn d_in(&self) -> usize {
        self.w1.rows
    }

    pub fn d_hidden(&self) -> usize {
        self.w1.cols
    }

    pub fn d_out(&self) -> usize {
        self.b2.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = self.w1.is_consistent()
            && self.w2.is_consistent()
            && self.b1.len() == self.w1.cols
            && self.w2.rows == self.w1.cols
            && self.b2.len() == self.w2.cols;
        if !dims_ok {
            return Err(Error::Invalid("inconsistent MLP parameter dimensions".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Invalid(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        let finite = self
            .w1
            .data
            .iter()
            .chain(&self.b1)
            .chain(&self.w2.data)
            .chain(&self.b2)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("non-finite MLP parameter".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d_in() {
            return Err(Error::Dimension {
                context: "mlp input",
                expected: self.d_in(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Samples an inverted-dropout mask for the hidden layer.
    pub fn sample_mask<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        if self.dropout_rate <= 0.0 {
            return None;
        }
        let keep = 1.0 - self.dropout_rate;
        Some(
            (0..self.d_hidden())
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect(),
        )
    }

    pub fn forward_trace(&self, x: &[f64], mask: Option<Vec<f64>>) -> Result<MlpTrace> {
        self.check_input(x)?;
        let h = self.d_hidden();
        let mut pre = self.b1.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w1.data[i * h..(i + 1) * h];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += w * xi;
            }
        }
        let hidden: Vec<f64> = pre
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let a = v.max(0.0);
                match &mask {
                    Some(m) => a * m[j],
                    None => a,
                }
            })
            .collect();
        let d_out = self.d_out();
        let mut output = self.b2.clone();
        for (j, &a) in hidden.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.w2.data[j * d_out..(j + 1) * d_out];
            for (o, w) in output.iter_mut().zip(row) {
                *o += w * a;
            }
        }
        Ok(MlpTrace {
            pre,
            mask,
            hidden,
            output,
        })
    }

    /// Inference-mode output (no dropout).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x, None)?.output)
    }

    /// Inference-mode output of a scalar head.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        debug_assert_eq!(self.d_out(), 1);
        Ok(self.forward(x)?[0])
    }

    /// Backpropagates `upstream` (one value per output) through a traced pass.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, x: &[f64], trace: &MlpTrace, upstream: &[f64]) -> Result<MlpGrads> {
        self.check_input(x)?;
        if upstream.len() != self.d_out() {
            return Err(Error::Dimension {
                context: "mlp upstream gradient",
                expected: self.d_out(),
                actual: upstream.len(),
            });
        }
        let (d_in, h, d_out) = (self.d_in(), self.d_hidden(), self.d_out());
        let mut g = MlpGrads {
            w1: Matrix::zeros(d_in, h),
            b1: vec![0.0; h],
            w2: Matrix::zeros(h, d_out),
            b2: upstream.to_vec(),
            x: vec![0.0; d_in],
        };
        let mut d_pre = vec![0.0; h];
        for j in 0..h {
            let mut d_hidden = 0.0;
            for k in 0..d_out {
                *g.w2.get_mut(j, k) = trace.hidden[j] * upstream[k];
                d_hidden += self.w2.get(j, k) * upstream[k];
            }
            if trace.pre[j] > 0.0 {
                let scale = trace.mask.as_ref().map_or(1.0, |m| m[j]);
                d_pre[j] = d_hidden * scale;
            }
        }
        g.b1.copy_from_slice(&d_pre);
        for i in 0..d_in {
            let mut dx = 0.0;
            for j in 0..h {
                *g.w1.get_mut(i, j) = x[i] * d_pre[j];
                dx += self.w1.get(i, j) * d_pre[j];
            }
            g.x[i] = dx;
        }
        Ok(g)
    }

    /// `self -= lr * grads`
    pub fn step(&mut self, grads: &MlpGrads, lr: f64) {
        for (p, g) in self.w1.data.iter_mut().zip(&grads.w1.data) {
            *p -= lr * g;
        }
        for (p, g) in self.b1.iter_mut().zip(&grads.b1) {
            *p -= lr * g;
        }
        for (p, g) in self.w2.data.iter_mut().zip(&grads.w2.data) {
            *p -= lr * g;
        }
        for (p, g) in self.b2.iter_mut().zip(&grads.b2) {
            *p -= lr * g;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MlpFile {
            format: MLP_FORMAT.into(),
            version: MLP_VERSION,
            params: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MlpFile = serde_json::from_str(text)?;
        check_header(MLP_FORMAT, &file.format, file.version, MLP_VERSION)?;
        file.params.validate()?;
        Ok(file.params)
    }
}

impl MlpGrads {
    pub fn zeros_like(p: &MlpParams) -> Self {
        MlpGrads {
            w1: Matrix::zeros(p.d_in(), p.d_hidden()),
            b1: vec![0.0; p.d_hidden()],
            w2: Matrix::zeros(p.d_hidden(), p.d_out()),
            b2: vec![0.0; p.d_out()],
            x: vec![0.0; p.d_in()],
        }
    }

    /// `self += other` (parameter parts only).
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.w1.data.iter_mut().zip(&other.w1.data) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.data.iter_mut().zip(&other.w2.data) {
            *a += b;
        }
        for (a, b) in self.b2.iter_mut().zip(&other.b2) {
            *a += b;
        }
    }
}

/// Scalar MLP output; in train mode a dropout mask is drawn from `seed`.
pub fn mlp_forward(params: &MlpParams, x: &[f64], train_mode: bool, seed: u64) -> Result<f64> {
    let mask = if train_mode {
        params.sample_mask(&mut ChaCha8Rng::seed_from_u64(seed))
    } else {
        None
    };
    Ok(params.forward_trace(x, mask)?.output[0])
}

/// Gradients of the inference-mode scalar output scaled by `upstream`.
pub fn mlp_grad(params: &MlpParams, x: &[f64], upstream: f64) -> Result<MlpGrads> {
    let trace = params.forward_trace(x, None)?;
    params.backward(x, &trace, &[upstream])
}
