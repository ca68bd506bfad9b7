//! Binary checkpoint format.
//!
//! ```text
//! "FLM1"                                  magic + version byte
//! u32 vocab_size, embed_dim, hidden_units, num_layers      (little endian)
//! f64 tensors, row-major, little endian, in this order:
//!     embedding            vocab_size x embed_dim
//!     per layer l:
//!         w_ih             4H x (l == 0 ? embed_dim : H)
//!         w_hh             4H x H
//!         bias             1 x 4H
//!     w_out                vocab_size x H
//!     b_out                1 x vocab_size
//! u32 token count, then per token: u32 byte length + UTF-8 bytes
//! u32 seq_len, f64 dropout, u32 vocabulary min_count
//! ```

use std::path::Path;

use super::{Matrix, ModelHyper, ModelParams};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const MAGIC: &[u8; 3] = b"FLM";
const VERSION: u8 = b'1';

pub fn encode_checkpoint(params: &ModelParams, hyper: &ModelHyper, vocab: &Vocabulary) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for v in [
        params.vocab_size(),
        params.embed_dim(),
        params.hidden_units(),
        params.num_layers(),
    ] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for (_, t) in params.tensors() {
        for x in t.as_slice() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf.extend_from_slice(&(vocab.len() as u32).to_le_bytes());
    for tok in vocab.tokens() {
        buf.extend_from_slice(&(tok.len() as u32).to_le_bytes());
        buf.extend_from_slice(tok.as_bytes());
    }
    buf.extend_from_slice(&(hyper.seq_len as u32).to_le_bytes());
    buf.extend_from_slice(&hyper.dropout.to_le_bytes());
    buf.extend_from_slice(&(vocab.min_count() as u32).to_le_bytes());
    buf
}

pub fn save_checkpoint(
    params: &ModelParams,
    hyper: &ModelHyper,
    vocab: &Vocabulary,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params, hyper, vocab)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, ModelHyper, Vocabulary)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(Error::CheckpointTruncated(what))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &'static str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &'static str) -> Result<Matrix> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::CheckpointShape(format!("{what} is {rows}x{cols}")))?;
        let raw = self.take(n.checked_mul(8).ok_or(Error::CheckpointTruncated(what))?, what)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelParams, ModelHyper, Vocabulary)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let head = r.take(4, "magic")?;
    if &head[..3] != MAGIC {
        return Err(Error::CheckpointMagic);
    }
    if head[3] != VERSION {
        return Err(Error::CheckpointVersion(head[3]));
    }
    let vocab_size = r.u32("header")?;
    let embed_dim = r.u32("header")?;
    let hidden = r.u32("header")?;
    let num_layers = r.u32("header")?;
    if vocab_size < 2 || embed_dim == 0 || hidden == 0 || num_layers == 0 {
        return Err(Error::CheckpointShape(format!(
            "header V={vocab_size} d={embed_dim} H={hidden} layers={num_layers}"
        )));
    }

    let embedding = r.matrix(vocab_size, embed_dim, "embedding")?;
    let mut layers = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let input = if l == 0 { embed_dim } else { hidden };
        layers.push(super::LstmLayer {
            w_ih: r.matrix(4 * hidden, input, "w_ih")?,
            w_hh: r.matrix(4 * hidden, hidden, "w_hh")?,
            bias: r.matrix(1, 4 * hidden, "bias")?,
        });
    }
    let w_out = r.matrix(vocab_size, hidden, "w_out")?;
    let b_out = r.matrix(1, vocab_size, "b_out")?;

    let n_tokens = r.u32("vocabulary")?;
    if n_tokens != vocab_size {
        return Err(Error::CheckpointShape(format!(
            "header vocab size {vocab_size} but {n_tokens} stored tokens"
        )));
    }
    let mut tokens = Vec::with_capacity(n_tokens);
    for _ in 0..n_tokens {
        let len = r.u32("vocabulary")?;
        let raw = r.take(len, "vocabulary")?;
        let tok = std::str::from_utf8(raw)
            .map_err(|_| Error::CheckpointShape("token is not UTF-8".into()))?;
        tokens.push(tok.to_string());
    }
    let seq_len = r.u32("trailer")?;
    let dropout = r.f64("trailer")?;
    let min_count = r.u32("trailer")?;
    if r.pos != bytes.len() {
        return Err(Error::CheckpointShape(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }

    let vocab = Vocabulary::from_list(tokens, min_count)
        .map_err(|e| Error::CheckpointShape(format!("vocabulary: {e}")))?;
    let params = ModelParams {
        embedding,
        layers,
        w_out,
        b_out,
    };
    let hyper = ModelHyper {
        embed_dim,
        hidden_units: hidden,
        num_layers,
        seq_len,
        dropout,
    };
    Ok((params, hyper, vocab))
}
