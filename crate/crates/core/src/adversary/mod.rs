//! Conventional and adversarial training loops, evaluation records, and
//! best-epoch selection.

mod config;
mod history;
mod steps;
mod train;

pub use config::{loss_total, LossBreakdown, TrainConfig, Variant};
pub use history::{best_epoch, best_epoch_by, EvalRecord, RateScores, SetScores, TrainHistory};
pub use steps::{step_disc, step_main, step_plain};
pub use train::{evaluate, export_features, predict, train, TrainOutcome};
