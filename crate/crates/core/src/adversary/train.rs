use rand::seq::SliceRandom;

use super::config::{LossBreakdown, TrainConfig};
use super::history::{best_epoch, EvalRecord, RateScores, SetScores, TrainHistory};
use super::steps::{step_disc, step_main, step_plain};
use crate::data::{DatasetBundle, Provenance, TestSet};
use crate::error::{invalid, Result};
use crate::grad::Mode;
use crate::harness::metrics::{confusion, majority_share};
use crate::models::{argmax_rows, ModelBundle};
use crate::seed::{derive_seed, rng_for};

const SHUFFLE_STREAM: u64 = 1;
const STEP_STREAM: u64 = 2;
/// Frames per forward pass during evaluation and export.
const EVAL_CHUNK: usize = 128;

pub struct TrainOutcome {
    pub final_model: ModelBundle,
    /// Snapshot at the epoch with the best mean trained-rate test accuracy.
    pub best_model: ModelBundle,
    pub history: TrainHistory,
}

/// Activity and rate predictions for every frame, in eval mode.
pub fn predict(bundle: &ModelBundle, data: &DatasetBundle) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut act = Vec::with_capacity(data.len());
    let mut rate = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let batch = data.batch(chunk);
        let out = bundle.forward(&batch.inputs, Mode::Eval, &mut rng_for(0, &[]))?;
        act.extend(argmax_rows(&out.activity_logits));
        rate.extend(argmax_rows(&out.rate_logits));
    }
    Ok((act, rate))
}

fn score(
    bundle: &ModelBundle,
    data: &DatasetBundle,
) -> Result<(SetScores, Vec<usize>, Vec<usize>)> {
    let (act, rate) = predict(bundle, data)?;
    let truth: Vec<usize> = data.frames().iter().map(|f| f.activity).collect();
    let rate_truth: Vec<usize> = data.frames().iter().map(|f| f.rate_index).collect();
    let cm = confusion(&act, &truth, data.activities().len())?;
    let rate_hits = rate.iter().zip(&rate_truth).filter(|(a, b)| a == b).count();
    let scores = SetScores {
        frames: data.len(),
        accuracy: cm.accuracy(),
        rate_accuracy: if data.is_empty() {
            0.0
        } else {
            rate_hits as f64 / data.len() as f64
        },
        rate_majority: majority_share(&rate_truth, data.rates().len()),
        confusion: cm,
    };
    Ok((scores, rate, rate_truth))
}

fn is_trained_rate(data: &DatasetBundle, rate_hz: f64) -> bool {
    data.rates()
        .rates_hz()
        .iter()
        .any(|r| (r - rate_hz).abs() < 1e-9)
}

fn mean_loss(losses: &[LossBreakdown]) -> LossBreakdown {
    let n = losses.len().max(1) as f64;
    let l_ce = losses.iter().map(|l| l.l_ce).sum::<f64>() / n;
    let l_d = losses.iter().map(|l| l.l_d).sum::<f64>() / n;
    LossBreakdown::new(l_ce, l_d, losses.first().map_or(0.0, |l| l.lambda))
}

/// Score the model on the training bundle (optionally) and every test set.
pub fn evaluate(
    bundle: &ModelBundle,
    epoch: usize,
    loss: LossBreakdown,
    train: Option<&DatasetBundle>,
    tests: &[TestSet],
) -> Result<EvalRecord> {
    let train = train.map(|t| score(bundle, t).map(|s| s.0)).transpose()?;
    let mut scored = Vec::with_capacity(tests.len());
    let (mut pooled_pred, mut pooled_truth) = (Vec::new(), Vec::new());
    let mut num_rates = 1;
    for t in tests {
        let (scores, rate_pred, rate_truth) = score(bundle, &t.bundle)?;
        let trained = is_trained_rate(&t.bundle, t.rate_hz);
        if trained {
            pooled_pred.extend(rate_pred);
            pooled_truth.extend(rate_truth);
            num_rates = t.bundle.rates().len();
        }
        scored.push(RateScores {
            rate_hz: t.rate_hz,
            trained,
            scores,
        });
    }
    let trained: Vec<f64> = scored
        .iter()
        .filter(|s| s.trained)
        .map(|s| s.scores.accuracy)
        .collect();
    let pooled_hits = pooled_pred
        .iter()
        .zip(&pooled_truth)
        .filter(|(a, b)| a == b)
        .count();
    Ok(EvalRecord {
        epoch,
        loss,
        train,
        tests: scored,
        mean_trained_accuracy: if trained.is_empty() {
            0.0
        } else {
            trained.iter().sum::<f64>() / trained.len() as f64
        },
        pooled_rate_accuracy: if pooled_truth.is_empty() {
            0.0
        } else {
            pooled_hits as f64 / pooled_truth.len() as f64
        },
        pooled_rate_majority: majority_share(&pooled_truth, num_rates),
    })
}

/// Alternating minibatch training with periodic evaluation.
///
/// Adversarial variants run [`step_main`] then [`step_disc`] on every
/// minibatch. Conventional variants run [`step_plain`] followed by a
/// decoupled [`step_disc`], so the discriminator is still fitted for
/// diagnostics without influencing the encoder.
pub fn train(
    mut model: ModelBundle,
    data: &DatasetBundle,
    tests: &[TestSet],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return invalid("training bundle is empty");
    }
    if cfg.variant.augmented() != (data.provenance() == Provenance::Augmented) {
        return invalid(format!(
            "variant {} cannot train on a {:?} bundle",
            cfg.variant,
            data.provenance()
        ));
    }
    if data.activities().len() != model.spec.num_activities
        || data.rates().len() != model.spec.num_rates
    {
        return invalid("model head widths do not match the bundle schemas");
    }
    let lambda = cfg.effective_lambda();
    let eval_epochs = cfg.eval_epochs();
    let mut history = TrainHistory {
        variant: Some(cfg.variant),
        ..TrainHistory::default()
    };
    let mut best: Option<(f64, ModelBundle)> = None;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_for(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]));
        let first = history.batch_losses.len();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = data.batch(chunk);
            let seed = derive_seed(cfg.seed, &[STEP_STREAM, epoch as u64, b as u64]);
            let loss = if cfg.variant.adversarial() {
                let loss = step_main(&mut model, &batch, lambda, seed)?;
                step_disc(&mut model, &batch, seed)?;
                loss
            } else {
                let l_ce = step_plain(&mut model, &batch, seed)?;
                let l_d = step_disc(&mut model, &batch, seed)?;
                LossBreakdown::new(l_ce, l_d, 0.0)
            };
            history.batch_losses.push(loss);
        }
        if eval_epochs.contains(&epoch) {
            let loss = mean_loss(&history.batch_losses[first..]);
            let record = evaluate(&model, epoch, loss, cfg.eval_train.then_some(data), tests)?;
            log::info!(
                "{} epoch {epoch}: L_CE {:.4} L_D {:.4} mean trained-rate acc {:.4} pooled D acc {:.4}",
                cfg.variant,
                loss.l_ce,
                loss.l_d,
                record.mean_trained_accuracy,
                record.pooled_rate_accuracy
            );
            if best
                .as_ref()
                .is_none_or(|(v, _)| record.mean_trained_accuracy > *v)
            {
                best = Some((record.mean_trained_accuracy, model.clone()));
            }
            history.records.push(record);
        }
    }
    let best_model = best
        .map(|(_, m)| m)
        .expect("final epoch is always evaluated");
    debug_assert!(best_epoch(&history, None).is_ok());
    Ok(TrainOutcome {
        final_model: model,
        best_model,
        history,
    })
}

/// Eval-mode encoder features and activity labels for every frame.
pub fn export_features(
    bundle: &ModelBundle,
    data: &DatasetBundle,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut features = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let z = bundle.features(&data.batch(chunk).inputs)?;
        let width = z.dim(1);
        features.extend(z.data().chunks(width).map(|r| r.to_vec()));
    }
    Ok((features, data.frames().iter().map(|f| f.activity).collect()))
}
