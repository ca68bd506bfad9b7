//! Stacked LSTM recurrence with exact backpropagation over a window.
//!
//! Dropout (inverted, train mode only) is applied to the input of every LSTM
//! layer and to the top layer output before projection, never to the
//! recurrent connections.

use rand::{Rng, RngCore};

use super::{softmax, LstmLayer, ModelParams, SoftmaxDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// Per-layer `(h, c)` activations carried between windows.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub layers: Vec<LayerState>,
}

impl HiddenState {
    pub fn zeros(params: &ModelParams) -> Self {
        let h = params.hidden_units();
        Self {
            layers: (0..params.num_layers())
                .map(|_| LayerState {
                    h: vec![0.0; h],
                    c: vec![0.0; h],
                })
                .collect(),
        }
    }
}

/// Train-mode dropout: rate plus the caller's seeded generator.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut dyn RngCore,
}

impl Dropout<'_> {
    fn mask(&mut self, n: usize) -> Vec<f64> {
        let keep = 1.0 - self.rate;
        (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct CellCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn cell(layer: &LstmLayer, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (CellCache, LayerState) {
    let h = layer.hidden_units();
    let mut z = layer.bias.as_slice().to_vec();
    layer.w_ih.matvec_acc(x, &mut z);
    layer.w_hh.matvec_acc(h_prev, &mut z);

    let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();

    let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h_new: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
    (
        CellCache {
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            tanh_c,
        },
        LayerState { h: h_new, c },
    )
}

/// Activations recorded by a forward pass for use in [`ModelParams::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    ids: Vec<usize>,
    /// `[layer][t]`
    cells: Vec<Vec<CellCache>>,
    /// Input to each layer after dropout, `[layer][t]`.
    inputs: Vec<Vec<Vec<f64>>>,
    in_masks: Vec<Vec<Option<Vec<f64>>>>,
    /// Top-layer output after dropout, `[t]`.
    top: Vec<Vec<f64>>,
    top_masks: Vec<Option<Vec<f64>>>,
    logits: Vec<Vec<f64>>,
}

impl Tape {
    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl ModelParams {
    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        let vocab_size = self.vocab_size();
        match ids.iter().find(|&&id| id >= vocab_size) {
            Some(&id) => Err(Error::TokenOutOfRange { id, vocab_size }),
            None => Ok(()),
        }
    }

    fn project(&self, top: &[f64]) -> Vec<f64> {
        let mut logits = self.b_out.as_slice().to_vec();
        self.w_out.matvec_acc(top, &mut logits);
        logits
    }

    /// Consumes one token in eval mode and returns the logits for the next.
    pub fn step(&self, id: usize, state: &mut HiddenState) -> Result<Vec<f64>> {
        self.check_ids(&[id])?;
        let mut x = self.embedding.row(id).to_vec();
        for (layer, st) in self.layers.iter().zip(state.layers.iter_mut()) {
            let (_, next) = cell(layer, &x, &st.h, &st.c);
            x.clone_from(&next.h);
            *st = next;
        }
        Ok(self.project(&x))
    }

    /// Eval-mode forward pass over `ids`, returning per-position logits and
    /// the final state.
    pub fn forward(
        &self,
        ids: &[usize],
        state: &HiddenState,
    ) -> Result<(Vec<Vec<f64>>, HiddenState)> {
        self.check_ids(ids)?;
        let mut st = state.clone();
        let logits = ids
            .iter()
            .map(|&id| self.step(id, &mut st))
            .collect::<Result<Vec<_>>>()?;
        Ok((logits, st))
    }

    /// Forward pass that records activations for backpropagation. Dropout is
    /// active only when `dropout` is given with a positive rate.
    pub fn forward_tape(
        &self,
        ids: &[usize],
        state: &HiddenState,
        mut dropout: Option<Dropout<'_>>,
    ) -> Result<(Tape, HiddenState)> {
        self.check_ids(ids)?;
        if let Some(d) = &dropout {
            if d.rate <= 0.0 {
                dropout = None;
            }
        }
        let n_layers = self.layers.len();
        let steps = ids.len();
        let mut tape = Tape {
            ids: ids.to_vec(),
            cells: vec![Vec::with_capacity(steps); n_layers],
            inputs: vec![Vec::with_capacity(steps); n_layers],
            in_masks: vec![Vec::with_capacity(steps); n_layers],
            top: Vec::with_capacity(steps),
            top_masks: Vec::with_capacity(steps),
            logits: Vec::with_capacity(steps),
        };
        let mut st = state.clone();
        for &id in ids {
            let mut x = self.embedding.row(id).to_vec();
            for (l, layer) in self.layers.iter().enumerate() {
                let mask = dropout.as_mut().map(|d| d.mask(x.len()));
                if let Some(m) = &mask {
                    x.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
                }
                let (cache, next) = cell(layer, &x, &st.layers[l].h, &st.layers[l].c);
                tape.inputs[l].push(std::mem::replace(&mut x, next.h.clone()));
                tape.in_masks[l].push(mask);
                tape.cells[l].push(cache);
                st.layers[l] = next;
            }
            let mask = dropout.as_mut().map(|d| d.mask(x.len()));
            if let Some(m) = &mask {
                x.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
            }
            tape.logits.push(self.project(&x));
            tape.top.push(x);
            tape.top_masks.push(mask);
        }
        Ok((tape, st))
    }

    /// Gradients of a loss whose derivative with respect to each position's
    /// logits is `dlogits[t]`. State carried into the window is treated as a
    /// constant.
    pub fn backward(&self, tape: &Tape, dlogits: &[Vec<f64>]) -> ModelParams {
        assert_eq!(dlogits.len(), tape.len(), "one logit gradient per position");
        let mut grads = self.zeros_like();
        let steps = tape.len();
        let hidden = self.hidden_units();

        // gradient flowing into each layer's output h_t from above
        let mut d_above: Vec<Vec<f64>> = Vec::with_capacity(steps);
        for (t, dl) in dlogits.iter().enumerate().take(steps) {
            grads.w_out.outer_acc(dl, &tape.top[t]);
            grads
                .b_out
                .as_mut_slice()
                .iter_mut()
                .zip(dl)
                .for_each(|(g, d)| *g += d);
            let mut dy = vec![0.0; hidden];
            self.w_out.matvec_t_acc(dl, &mut dy);
            if let Some(m) = &tape.top_masks[t] {
                dy.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
            }
            d_above.push(dy);
        }

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gl = &mut grads.layers[l];
            let h = layer.hidden_units();
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut d_below = vec![Vec::new(); steps];
            let mut dz = vec![0.0; 4 * h];
            for t in (0..steps).rev() {
                let cc = &tape.cells[l][t];
                for k in 0..h {
                    let dh = d_above[t][k] + dh_next[k];
                    let d_o = dh * cc.tanh_c[k];
                    let dc = dc_next[k] + dh * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);
                    let di = dc * cc.g[k];
                    let dg = dc * cc.i[k];
                    let df = dc * cc.c_prev[k];
                    dc_next[k] = dc * cc.f[k];
                    dz[k] = di * cc.i[k] * (1.0 - cc.i[k]);
                    dz[h + k] = df * cc.f[k] * (1.0 - cc.f[k]);
                    dz[2 * h + k] = dg * (1.0 - cc.g[k] * cc.g[k]);
                    dz[3 * h + k] = d_o * cc.o[k] * (1.0 - cc.o[k]);
                }
                gl.w_ih.outer_acc(&dz, &tape.inputs[l][t]);
                gl.w_hh.outer_acc(&dz, &cc.h_prev);
                gl.bias
                    .as_mut_slice()
                    .iter_mut()
                    .zip(&dz)
                    .for_each(|(g, d)| *g += d);

                dh_next.iter_mut().for_each(|v| *v = 0.0);
                layer.w_hh.matvec_t_acc(&dz, &mut dh_next);
                let mut dx = vec![0.0; layer.input_dim()];
                layer.w_ih.matvec_t_acc(&dz, &mut dx);
                if let Some(m) = &tape.in_masks[l][t] {
                    dx.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
                }
                d_below[t] = dx;
            }
            d_above = d_below;
        }

        for (t, &id) in tape.ids.iter().enumerate() {
            grads
                .embedding
                .row_mut(id)
                .iter_mut()
                .zip(&d_above[t])
                .for_each(|(g, d)| *g += d);
        }
        grads
    }
}

/// Anything that can score next-token distributions by consuming tokens one
/// at a time: a trained model or a hand-built oracle.
pub trait LanguageModel {
    type State: Clone;

    fn vocab_size(&self) -> usize;

    fn initial_state(&self) -> Self::State;

    /// Consumes `token` and returns the distribution over the next token.
    fn advance(&self, state: &mut Self::State, token: usize) -> Result<SoftmaxDistribution>;

    /// Distribution at the final position after feeding `seed` from the
    /// initial state.
    fn next_token_distribution(&self, seed: &[usize]) -> Result<SoftmaxDistribution> {
        let (&last, prefix) = seed.split_last().ok_or(Error::EmptySeed)?;
        let mut state = self.initial_state();
        for &id in prefix {
            self.advance(&mut state, id)?;
        }
        self.advance(&mut state, last)
    }
}

impl LanguageModel for ModelParams {
    type State = HiddenState;

    fn vocab_size(&self) -> usize {
        ModelParams::vocab_size(self)
    }

    fn initial_state(&self) -> HiddenState {
        HiddenState::zeros(self)
    }

    fn advance(&self, state: &mut HiddenState, token: usize) -> Result<SoftmaxDistribution> {
        Ok(softmax(&self.step(token, state)?))
    }
}
