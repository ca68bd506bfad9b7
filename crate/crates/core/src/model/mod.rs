//! Recurrent language model: embedding lookup, stacked LSTM, output
//! projection and softmax, with exact gradients.

mod checkpoint;
mod lstm;
mod matrix;
mod params;
mod softmax;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint,
};
pub use lstm::{Dropout, HiddenState, LanguageModel, LayerState, Tape};
pub use matrix::Matrix;
pub use params::{LstmLayer, ModelHyper, ModelParams};
pub use softmax::{softmax, SoftmaxDistribution};
