use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grad::AdamConfig;

/// Training variant: conventional or adversarial, with or without
/// downsampling augmentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "org")]
    Org,
    #[serde(rename = "DA-org")]
    DaOrg,
    #[serde(rename = "Adv")]
    Adv,
    #[serde(rename = "DA-Adv")]
    DaAdv,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Org, Variant::DaOrg, Variant::Adv, Variant::DaAdv];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Org => "org",
            Variant::DaOrg => "DA-org",
            Variant::Adv => "Adv",
            Variant::DaAdv => "DA-Adv",
        }
    }

    pub fn adversarial(self) -> bool {
        matches!(self, Variant::Adv | Variant::DaAdv)
    }

    pub fn augmented(self) -> bool {
        matches!(self, Variant::DaOrg | Variant::DaAdv)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown variant `{s}` (expected org, DA-org, Adv, DA-Adv)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub eval_every: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub variant: Variant,
    /// Also score the training bundle at each evaluation.
    pub eval_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            lambda: 1.0,
            epochs: 150,
            eval_every: 10,
            adam: AdamConfig::default(),
            seed: 0,
            variant: Variant::Org,
            eval_train: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.eval_every == 0 {
            return invalid("batch size, epochs, and eval interval must be positive");
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return invalid(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            ));
        }
        Ok(())
    }

    /// Adversarial weight actually applied to the encoder.
    pub fn effective_lambda(&self) -> f64 {
        if self.variant.adversarial() {
            self.lambda
        } else {
            0.0
        }
    }

    /// Epochs (1-based) at which evaluation runs; the last epoch is always
    /// included.
    pub fn eval_epochs(&self) -> Vec<usize> {
        let mut epochs: Vec<usize> = (1..=self.epochs)
            .filter(|e| e % self.eval_every == 0)
            .collect();
        if epochs.last() != Some(&self.epochs) {
            epochs.push(self.epochs);
        }
        epochs
    }
}

/// Loss terms of one minibatch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_ce: f64,
    pub l_d: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_ce: f64, l_d: f64, lambda: f64) -> Self {
        Self {
            l_ce,
            l_d,
            lambda,
            total: loss_total(l_ce, l_d, lambda),
        }
    }
}

/// `L = L_CE − λ·L_D`.
pub fn loss_total(l_ce: f64, l_d: f64, lambda: f64) -> f64 {
    l_ce - lambda * l_d
}
