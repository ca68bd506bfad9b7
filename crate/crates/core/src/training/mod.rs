//! Loss functions and the optimization loop.

mod config;
mod loss;
mod trainer;

pub use config::{settings_from_config, ConfigFile, RegTargets, TrainConfig, TrainMode};
pub use loss::{
    bias_loss, bias_loss_grad_logits, combined_loss, cross_entropy, gender_direction, reg_loss,
    reg_loss_grad, LossBreakdown,
};
pub use trainer::{
    batch_objective, clip_global_norm, evaluate_stream, AnnealSchedule, EpochLog, Objective,
    TrainLog, Trainer, Window,
};
