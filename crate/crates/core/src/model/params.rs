use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub embed_dim: usize,
    pub hidden_units: usize,
    pub num_layers: usize,
    /// Truncated-backprop window length.
    pub seq_len: usize,
    pub dropout: f64,
}

impl Default for ModelHyper {
    fn default() -> Self {
        Self {
            embed_dim: 300,
            hidden_units: 300,
            num_layers: 2,
            seq_len: 35,
            dropout: 0.25,
        }
    }
}

impl ModelHyper {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("hidden_units", self.hidden_units),
            ("num_layers", self.num_layers),
            ("seq_len", self.seq_len),
        ] {
            if v == 0 {
                errs.push(format!("{name}: must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            errs.push(format!("dropout: {} not in [0, 1)", self.dropout));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// One LSTM layer. Gate blocks are stacked in the order input, forget,
/// candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_ih: Matrix,
    pub w_hh: Matrix,
    pub bias: Matrix,
}

impl LstmLayer {
    pub fn hidden_units(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.cols()
    }
}

/// All trainable tensors. Also used as the gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Input word vectors, `|V| x embed_dim`.
    pub embedding: Matrix,
    pub layers: Vec<LstmLayer>,
    /// Output projection, `|V| x hidden_units`.
    pub w_out: Matrix,
    pub b_out: Matrix,
}

impl ModelParams {
    /// Embeddings and projection are uniform in [-0.1, 0.1]; recurrent
    /// weights uniform in [-1/sqrt(H), 1/sqrt(H)]; output bias zero.
    pub fn init(hyper: &ModelHyper, vocab_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, h) = (hyper.embed_dim, hyper.hidden_units);
        let embedding = Matrix::uniform(vocab_size, d, 0.1, &mut rng);
        let k = 1.0 / (h as f64).sqrt();
        let layers = (0..hyper.num_layers)
            .map(|l| {
                let input = if l == 0 { d } else { h };
                LstmLayer {
                    w_ih: Matrix::uniform(4 * h, input, k, &mut rng),
                    w_hh: Matrix::uniform(4 * h, h, k, &mut rng),
                    bias: Matrix::uniform(1, 4 * h, k, &mut rng),
                }
            })
            .collect();
        let w_out = Matrix::uniform(vocab_size, h, 0.1, &mut rng);
        Self {
            embedding,
            layers,
            w_out,
            b_out: Matrix::zeros(1, vocab_size),
        }
    }

    pub fn zeros(hyper: &ModelHyper, vocab_size: usize) -> Self {
        let (d, h) = (hyper.embed_dim, hyper.hidden_units);
        Self {
            embedding: Matrix::zeros(vocab_size, d),
            layers: (0..hyper.num_layers)
                .map(|l| LstmLayer {
                    w_ih: Matrix::zeros(4 * h, if l == 0 { d } else { h }),
                    w_hh: Matrix::zeros(4 * h, h),
                    bias: Matrix::zeros(1, 4 * h),
                })
                .collect(),
            w_out: Matrix::zeros(vocab_size, h),
            b_out: Matrix::zeros(1, vocab_size),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|(_, t)| t.fill(0.0));
        z
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn hidden_units(&self) -> usize {
        self.w_out.cols()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("embedding".to_string(), &self.embedding)];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("layer{l}.w_ih"), &layer.w_ih));
            out.push((format!("layer{l}.w_hh"), &layer.w_hh));
            out.push((format!("layer{l}.bias"), &layer.bias));
        }
        out.push(("w_out".to_string(), &self.w_out));
        out.push(("b_out".to_string(), &self.b_out));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![("embedding".to_string(), &mut self.embedding)];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("layer{l}.w_ih"), &mut layer.w_ih));
            out.push((format!("layer{l}.w_hh"), &mut layer.w_hh));
            out.push((format!("layer{l}.bias"), &mut layer.bias));
        }
        out.push(("w_out".to_string(), &mut self.w_out));
        out.push(("b_out".to_string(), &mut self.b_out));
        out
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        self.axpy(1.0, other);
    }

    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.axpy(alpha, src);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.tensors_mut()
            .into_iter()
            .for_each(|(_, t)| t.scale(alpha));
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .map(|(_, t)| t.sq_norm())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Overwrites embedding rows from a text file of `token v1 .. vd` lines.
    /// Tokens absent from `vocab` are skipped. Returns the number of rows
    /// replaced.
    pub fn overlay_embeddings(&mut self, path: &Path, vocab: &Vocabulary) -> Result<usize> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.overlay_embeddings_str(&text, vocab)
    }

    pub fn overlay_embeddings_str(&mut self, text: &str, vocab: &Vocabulary) -> Result<usize> {
        let dim = self.embed_dim();
        let mut replaced = 0;
        for (idx, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let values: Vec<f64> = parts
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(idx + 1, format!("bad number {s:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::EmbeddingDim {
                    line: idx + 1,
                    expected: dim,
                    found: values.len(),
                });
            }
            if let Some(id) = vocab.get(token) {
                self.embedding.row_mut(id).copy_from_slice(&values);
                replaced += 1;
            }
        }
        Ok(replaced)
    }
}
