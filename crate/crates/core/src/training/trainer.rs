//! Truncated-BPTT training loop with plain SGD, global-norm clipping,
//! learning-rate annealing and early stopping.

use std::fmt::Write as _;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{add_bias_grad, bias_loss, cross_entropy, reg_loss, reg_loss_grad};
use super::{LossBreakdown, TrainConfig};
use crate::corpus::{GenderLexicon, TokenStream};
use crate::error::{Error, Result};
use crate::model::{softmax, Dropout, HiddenState, ModelHyper, ModelParams};

/// Loss weights and the word sets they act on.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub lexicon: &'a GenderLexicon,
    pub lambda: f64,
    pub reg_coeff: f64,
    pub reg_targets: &'a [usize],
}

/// One batch column's slice for a step: input ids and the ids they predict.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub inputs: &'a [usize],
    pub targets: &'a [usize],
}

struct ColumnResult {
    ce_sum: f64,
    bias_sum: f64,
    grads: ModelParams,
    state: HiddenState,
}

fn column_pass(
    params: &ModelParams,
    window: Window<'_>,
    state: &HiddenState,
    objective: &Objective<'_>,
    dropout: Option<(f64, u64)>,
) -> Result<ColumnResult> {
    let mut rng = dropout.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let drop = match (&dropout, rng.as_mut()) {
        (Some((rate, _)), Some(rng)) => Some(Dropout { rate: *rate, rng }),
        _ => None,
    };
    let (tape, state) = params.forward_tape(window.inputs, state, drop)?;
    let mut ce_sum = 0.0;
    let mut bias_sum = 0.0;
    let dlogits: Vec<Vec<f64>> = tape
        .logits()
        .iter()
        .zip(window.targets)
        .map(|(z, &y)| {
            let dist = softmax(z);
            ce_sum += cross_entropy(&dist, y);
            bias_sum += bias_loss(&dist, objective.lexicon);
            let mut d = dist.probs().to_vec();
            d[y] -= 1.0;
            if objective.lambda != 0.0 {
                add_bias_grad(&dist, objective.lexicon, objective.lambda, &mut d);
            }
            d
        })
        .collect();
    let grads = params.backward(&tape, &dlogits);
    Ok(ColumnResult {
        ce_sum,
        bias_sum,
        grads,
        state,
    })
}

/// Loss and exact gradient for one optimization step over parallel batch
/// columns. The objective is the mean over every predicted position of
/// `CE + lambda * L_B`, plus `reg_coeff * reg`. Returns the carried states.
///
/// `dropout` is `(rate, seeds)` with one seed per column.
pub fn batch_objective(
    params: &ModelParams,
    windows: &[Window<'_>],
    states: &[HiddenState],
    objective: &Objective<'_>,
    dropout: Option<(f64, &[u64])>,
) -> Result<(LossBreakdown, ModelParams, Vec<HiddenState>)> {
    assert_eq!(windows.len(), states.len());
    let results: Vec<ColumnResult> = windows
        .par_iter()
        .zip(states.par_iter())
        .enumerate()
        .map(|(b, (w, s))| {
            column_pass(
                params,
                *w,
                s,
                objective,
                dropout.map(|(rate, seeds)| (rate, seeds[b])),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let positions: usize = windows.iter().map(|w| w.inputs.len()).sum();
    let scale = 1.0 / positions as f64;
    let mut grads = params.zeros_like();
    let mut ce_sum = 0.0;
    let mut bias_sum = 0.0;
    let mut new_states = Vec::with_capacity(results.len());
    for r in results {
        grads.add_assign(&r.grads);
        ce_sum += r.ce_sum;
        bias_sum += r.bias_sum;
        new_states.push(r.state);
    }
    grads.scale(scale);

    let reg = if objective.reg_coeff != 0.0 {
        let (value, g) = reg_loss_grad(&params.embedding, objective.lexicon, objective.reg_targets)?;
        grads.embedding.axpy(objective.reg_coeff, &g);
        value
    } else {
        0.0
    };
    let loss = LossBreakdown::new(
        ce_sum * scale,
        bias_sum * scale,
        reg,
        objective.lambda,
        objective.reg_coeff,
    );
    Ok((loss, grads, new_states))
}

/// Rescales `grads` so its global norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_global_norm(grads: &mut ModelParams, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Multiplicative learning-rate decay applied on epochs without validation
/// improvement. The factor starts at `lo` and rises linearly to `hi` over
/// `steps` further triggers, then stays at `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AnnealSchedule {
    /// Factor used on the `k`-th trigger (0-based).
    pub fn factor(&self, k: usize) -> f64 {
        if self.steps == 0 {
            return self.hi;
        }
        let frac = (k.min(self.steps)) as f64 / self.steps as f64;
        self.lo + (self.hi - self.lo) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub valid: LossBreakdown,
    pub valid_perplexity: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainLog {
    /// One tab-separated line per epoch: epoch, mean CE, mean L_B, reg term,
    /// total, validation perplexity, learning rate.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
                e.epoch, e.train.ce, e.train.bias, e.train.reg, e.train.total, e.valid_perplexity, e.lr
            );
        }
        out
    }
}

/// Validation statistics with state threaded across the whole stream.
pub fn evaluate_stream(
    params: &ModelParams,
    stream: &[usize],
    objective: &Objective<'_>,
) -> Result<LossBreakdown> {
    if stream.len() < 2 {
        return Err(Error::undefined("validation", "held-out stream needs two tokens"));
    }
    let mut state = HiddenState::zeros(params);
    let mut ce = 0.0;
    let mut bias = 0.0;
    for w in stream.windows(2) {
        let dist = softmax(&params.step(w[0], &mut state)?);
        ce += cross_entropy(&dist, w[1]);
        bias += bias_loss(&dist, objective.lexicon);
    }
    let n = (stream.len() - 1) as f64;
    let reg = if objective.reg_coeff != 0.0 {
        reg_loss(&params.embedding, objective.lexicon, objective.reg_targets)?
    } else {
        0.0
    };
    Ok(LossBreakdown::new(
        ce / n,
        bias / n,
        reg,
        objective.lambda,
        objective.reg_coeff,
    ))
}

pub(crate) fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    // splitmix64 over the parts
    let mut x = base;
    for &p in parts {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

pub struct Trainer<'a> {
    pub hyper: ModelHyper,
    pub config: TrainConfig,
    pub lexicon: &'a GenderLexicon,
    /// Words penalized by the REG term.
    pub reg_targets: Vec<usize>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        hyper: ModelHyper,
        config: TrainConfig,
        lexicon: &'a GenderLexicon,
        reg_targets: Vec<usize>,
    ) -> Self {
        Self {
            hyper,
            config,
            lexicon,
            reg_targets,
        }
    }

    pub fn objective(&self) -> Objective<'_> {
        Objective {
            lexicon: self.lexicon,
            lambda: self.config.effective_lambda(),
            reg_coeff: self.config.effective_reg_coeff(),
            reg_targets: &self.reg_targets,
        }
    }

    /// Initializes parameters from `config.seed` and trains.
    pub fn fit(
        &self,
        vocab_size: usize,
        train: &TokenStream,
        valid: &TokenStream,
    ) -> Result<(ModelParams, TrainLog)> {
        let init = ModelParams::init(&self.hyper, vocab_size, self.config.seed);
        self.fit_from(init, train, valid)
    }

    pub fn fit_from(
        &self,
        init: ModelParams,
        train: &TokenStream,
        valid: &TokenStream,
    ) -> Result<(ModelParams, TrainLog)> {
        let cfg = &self.config;
        let seq_len = self.hyper.seq_len;
        if let Err(errs) = cfg.validate().and(self.hyper.validate()) {
            return Err(Error::Config(errs));
        }
        if train.len() <= seq_len * cfg.batch_size {
            return Err(Error::CorpusTooSmall {
                len: train.len(),
                batch_size: cfg.batch_size,
                seq_len,
            });
        }
        let objective = self.objective();
        if (objective.lambda > 0.0 || objective.reg_coeff > 0.0) && self.lexicon.is_empty() {
            return Err(Error::NoGenderPairs);
        }
        let vocab_size = init.vocab_size();
        train.check_range(vocab_size)?;
        valid.check_range(vocab_size)?;

        // batchify: B contiguous columns
        let col_len = train.len() / cfg.batch_size;
        let columns: Vec<&[usize]> = (0..cfg.batch_size)
            .map(|b| &train.ids[b * col_len..(b + 1) * col_len])
            .collect();

        let schedule = AnnealSchedule {
            lo: cfg.anneal_lo,
            hi: cfg.anneal_hi,
            steps: cfg.patience,
        };
        let mut params = init;
        let mut best = params.clone();
        let mut best_loss = f64::INFINITY;
        let mut log = TrainLog::default();
        let mut lr = cfg.lr;
        let mut triggers = 0;
        let mut stale = 0;

        for epoch in 1..=cfg.max_epochs {
            let mut states = vec![HiddenState::zeros(&params); cfg.batch_size];
            let mut acc = LossBreakdown::default();
            let mut acc_tokens = 0usize;
            let mut step = 0u64;
            let mut start = 0;
            while start + 1 < col_len {
                let len = seq_len.min(col_len - 1 - start);
                let windows: Vec<Window<'_>> = columns
                    .iter()
                    .map(|c| Window {
                        inputs: &c[start..start + len],
                        targets: &c[start + 1..start + 1 + len],
                    })
                    .collect();
                let seeds: Vec<u64> = (0..cfg.batch_size as u64)
                    .map(|b| derive_seed(cfg.seed, &[epoch as u64, step, b]))
                    .collect();
                let dropout = (self.hyper.dropout > 0.0).then_some((self.hyper.dropout, &seeds[..]));
                let (loss, mut grads, next) =
                    batch_objective(&params, &windows, &states, &objective, dropout)?;
                clip_global_norm(&mut grads, cfg.clip);
                params.axpy(-lr, &grads);
                states = next;

                let n = len * cfg.batch_size;
                acc.ce += loss.ce * n as f64;
                acc.bias += loss.bias * n as f64;
                acc.reg += loss.reg * n as f64;
                acc.total += loss.total * n as f64;
                acc_tokens += n;
                start += len;
                step += 1;
            }
            let denom = acc_tokens as f64;
            let train_loss = LossBreakdown {
                ce: acc.ce / denom,
                bias: acc.bias / denom,
                reg: acc.reg / denom,
                total: acc.total / denom,
            };
            if !params.is_finite() {
                return Err(Error::Config(vec![format!(
                    "training diverged in epoch {epoch}; lower lr or clip"
                )]));
            }

            let valid_loss = evaluate_stream(&params, &valid.ids, &objective)?;
            let valid_perplexity = valid_loss.ce.exp();
            log.epochs.push(EpochLog {
                epoch,
                train: train_loss,
                valid: valid_loss,
                valid_perplexity,
                lr,
            });
            info!(
                "epoch {epoch}: train ce {:.4} bias {:.4} | valid ppl {:.3} total {:.4} | lr {lr}",
                train_loss.ce, train_loss.bias, valid_perplexity, valid_loss.total
            );

            if valid_loss.total < best_loss {
                best_loss = valid_loss.total;
                best = params.clone();
                log.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                lr *= schedule.factor(triggers);
                triggers += 1;
                if stale >= cfg.patience {
                    log.stopped_early = true;
                    break;
                }
            }
        }
        Ok((best, log))
    }
}
