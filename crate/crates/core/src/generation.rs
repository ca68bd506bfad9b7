//! Ancestral sampling of documents from a trained model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Source, TokenStream, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{HiddenState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub num_docs: usize,
    /// Tokens per document.
    pub doc_len: usize,
    /// Softmax temperature. `0` selects the argmax at every step.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            num_docs: 10_000,
            doc_len: 500,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.num_docs == 0 {
            errs.push("num_docs: must be at least 1".into());
        }
        if self.doc_len == 0 {
            errs.push("doc_len: must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            errs.push(format!("temperature: {} must be >= 0", self.temperature));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Picks the next token from logits, never returning `<unk>`.
fn sample_next<R: Rng>(logits: &[f64], temperature: f64, rng: &mut R) -> usize {
    let candidates = logits
        .iter()
        .enumerate()
        .filter(|&(id, _)| id != Vocabulary::UNK);
    if temperature == 0.0 {
        // first maximum wins ties
        return candidates
            .fold((Vocabulary::EOS, f64::NEG_INFINITY), |best, (id, &z)| {
                if z > best.1 {
                    (id, z)
                } else {
                    best
                }
            })
            .0;
    }
    let scaled: Vec<(usize, f64)> = candidates.map(|(id, &z)| (id, z / temperature)).collect();
    let max = scaled
        .iter()
        .map(|&(_, z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|&(_, z)| (z - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (&(id, _), w) in scaled.iter().zip(&weights) {
        if u < *w {
            return id;
        }
        u -= w;
    }
    // rounding fallthrough
    scaled.last().map(|&(id, _)| id).unwrap_or(Vocabulary::EOS)
}

fn generate_one(params: &ModelParams, config: &GenerationConfig, doc: usize) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(doc as u64));
    let mut state = HiddenState::zeros(params);
    let mut prev = Vocabulary::EOS;
    let mut out = Vec::with_capacity(config.doc_len);
    for _ in 0..config.doc_len {
        let logits = params.step(prev, &mut state)?;
        prev = sample_next(&logits, config.temperature, &mut rng);
        out.push(prev);
    }
    Ok(out)
}

/// Samples `num_docs` independent documents. Document `i` uses the generator
/// seeded with `seed + i`, so output does not depend on scheduling.
pub fn generate(params: &ModelParams, config: &GenerationConfig) -> Result<Vec<TokenStream>> {
    config.validate().map_err(Error::Config)?;
    (0..config.num_docs)
        .into_par_iter()
        .map(|doc| {
            generate_one(params, config, doc).map(|ids| TokenStream::new(ids, Source::Generated))
        })
        .collect()
}

/// One document per line, tokens joined by single spaces.
pub fn render_documents(docs: &[TokenStream], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&vocab.decode(&doc.ids).join(" "));
        out.push('\n');
    }
    out
}

/// Reads a rendered corpus back: one document per line, whitespace-separated
/// tokens.
pub fn parse_documents(text: &str, vocab: &Vocabulary) -> Vec<TokenStream> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let toks: Vec<&str> = line.split_whitespace().collect();
            TokenStream::new(vocab.encode(&toks), Source::Generated)
        })
        .collect()
}
