use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{LossBreakdown, Variant};
use crate::error::{invalid, Result};
use crate::harness::metrics::ConfusionMatrix;

/// Activity and rate-discriminator scores on one evaluation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetScores {
    pub frames: usize,
    pub accuracy: f64,
    pub rate_accuracy: f64,
    /// Share of the most common rate label, the discriminator's chance
    /// reference.
    pub rate_majority: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateScores {
    pub rate_hz: f64,
    /// Whether the rate is one of the training schema rates.
    pub trained: bool,
    #[serde(flatten)]
    pub scores: SetScores,
}

/// Everything measured at one evaluation epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    /// Batch means for the epoch.
    pub loss: LossBreakdown,
    pub train: Option<SetScores>,
    pub tests: Vec<RateScores>,
    /// Mean activity accuracy over trained-rate test sets.
    pub mean_trained_accuracy: f64,
    /// Discriminator accuracy over all trained-rate test frames pooled.
    pub pooled_rate_accuracy: f64,
    pub pooled_rate_majority: f64,
}

impl EvalRecord {
    pub fn test_at(&self, rate_hz: f64) -> Option<&RateScores> {
        self.tests
            .iter()
            .find(|t| (t.rate_hz - rate_hz).abs() < 1e-9)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EvalRecord>,
    /// Every minibatch's loss terms, in training order.
    #[serde(skip)]
    pub batch_losses: Vec<LossBreakdown>,
    #[serde(skip)]
    pub variant: Option<Variant>,
}

impl TrainHistory {
    pub fn final_record(&self) -> Option<&EvalRecord> {
        self.records.last()
    }

    /// One JSON object per evaluation record.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self {
            records,
            ..Self::default()
        })
    }
}

/// Highest value of `metric` over the records and the first epoch reaching it.
pub fn best_epoch_by(
    records: &[EvalRecord],
    metric: impl Fn(&EvalRecord) -> f64,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for r in records {
        let v = metric(r);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((r.epoch, v));
        }
    }
    best.ok_or_else(|| crate::Error::InvalidArgument("empty training history".into()))
}

/// Best test activity accuracy at `rate_hz`, or of the mean over trained
/// rates when `rate_hz` is `None`.
pub fn best_epoch(history: &TrainHistory, rate_hz: Option<f64>) -> Result<(usize, f64)> {
    if let Some(rate) = rate_hz {
        if history.records.iter().any(|r| r.test_at(rate).is_none()) {
            return invalid(format!("history has no test set at {rate} Hz"));
        }
        best_epoch_by(&history.records, |r| {
            r.test_at(rate).expect("checked above").scores.accuracy
        })
    } else {
        best_epoch_by(&history.records, |r| r.mean_trained_accuracy)
    }
}
