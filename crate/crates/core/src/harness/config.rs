use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::adversary::{TrainConfig, Variant};
use crate::data::{ActivitySchema, FramingOptions, RateSchema, DEFAULT_RATES_HZ, UNKNOWN_RATES_HZ};
use crate::error::{invalid, Error, Result};
use crate::models::{Arch, DEFAULT_K, HEAD_WIDTH};

/// Where subject recordings come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorpusSource {
    /// Generated from the experiment's master seed.
    Synth { n_subjects: usize },
    /// A `manifest.json` as written by `write_corpus`.
    Manifest { path: PathBuf },
}

/// Hand-crafted-feature baselines run next to the networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "hcf-knn")]
    HcfKnn,
    #[serde(rename = "hcf-dnn")]
    HcfDnn,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::HcfKnn => "HCF-kNN",
            Baseline::HcfDnn => "HCF-DNN",
        }
    }
}

/// One experiment: corpus, split protocol, models to train, and trial count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub corpus: CorpusSource,
    pub activities: ActivitySchema,
    pub n_train: usize,
    pub n_test: usize,
    /// Training subjects per trained rate, highest rate first.
    pub group_sizes: Vec<usize>,
    pub trained_rates_hz: Vec<f64>,
    /// Extra test rates outside the training schema.
    pub unknown_rates_hz: Vec<f64>,
    /// Also train `org` on all training subjects converted to this rate.
    pub unified_rate_hz: Option<f64>,
    pub variants: Vec<Variant>,
    pub baselines: Vec<Baseline>,
    pub arch: Arch,
    pub head_width: usize,
    /// `seed` and `variant` are overridden per trial and model.
    pub train: TrainConfig,
    pub framing: FramingOptions,
    pub knn_k: usize,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// Desk-scale setup: 40 synthetic subjects, 30 train in groups of 6,
    /// 10 test, `vgg-mini`.
    fn default() -> Self {
        Self {
            scenario: "desk".into(),
            corpus: CorpusSource::Synth { n_subjects: 40 },
            activities: ActivitySchema::default(),
            n_train: 30,
            n_test: 10,
            group_sizes: vec![6; 5],
            trained_rates_hz: DEFAULT_RATES_HZ.to_vec(),
            unknown_rates_hz: Vec::new(),
            unified_rate_hz: None,
            variants: vec![Variant::Org, Variant::DaAdv],
            baselines: Vec::new(),
            arch: Arch::VggMini,
            head_width: HEAD_WIDTH,
            train: TrainConfig::default(),
            framing: FramingOptions::default(),
            knn_k: DEFAULT_K,
            n_trials: 10,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn rate_schema(&self) -> Result<RateSchema> {
        RateSchema::new(self.trained_rates_hz.clone())
    }

    /// Trained rates followed by unknown rates.
    pub fn test_rates_hz(&self) -> Vec<f64> {
        self.trained_rates_hz
            .iter()
            .chain(&self.unknown_rates_hz)
            .copied()
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let rates = self.rate_schema()?;
        if self.group_sizes.len() != rates.len() {
            return invalid(format!(
                "{} group sizes for {} trained rates",
                self.group_sizes.len(),
                rates.len()
            ));
        }
        if self.group_sizes.iter().sum::<usize>() != self.n_train {
            return invalid(format!(
                "group sizes {:?} do not sum to n_train = {}",
                self.group_sizes, self.n_train
            ));
        }
        if self.n_test == 0 || self.n_trials == 0 {
            return invalid("n_test and n_trials must be positive");
        }
        if let CorpusSource::Synth { n_subjects } = self.corpus {
            if n_subjects < self.n_train + self.n_test {
                return invalid(format!(
                    "{n_subjects} synthetic subjects cannot cover {} train + {} test",
                    self.n_train, self.n_test
                ));
            }
        }
        for &r in self.unknown_rates_hz.iter().chain(&self.unified_rate_hz) {
            if !(r.is_finite() && r > 0.0) {
                return invalid(format!("rates must be positive, got {r}"));
            }
        }
        if self.variants.is_empty() && self.baselines.is_empty() && self.unified_rate_hz.is_none() {
            return invalid("experiment has nothing to train");
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return invalid("variants listed twice");
        }
        if self.head_width == 0 || self.knn_k == 0 {
            return invalid("head_width and knn_k must be positive");
        }
        self.train.validate()
    }
}

pub const PRESET_NAMES: [&str; 10] = [
    "basic",
    "subjects-100",
    "subjects-50",
    "subjects-25",
    "ratio-low",
    "ratio-even",
    "ratio-high",
    "unknown-sr",
    "ablation",
    "desk",
];

/// Full-size protocol: 176 subjects, 50 held out, `vgg16-1d`, 150 epochs,
/// 10 trials.
fn full_scale(scenario: &str, group_sizes: Vec<usize>, variants: Vec<Variant>) -> ExperimentConfig {
    ExperimentConfig {
        scenario: scenario.into(),
        corpus: CorpusSource::Synth { n_subjects: 176 },
        n_train: group_sizes.iter().sum(),
        n_test: 50,
        group_sizes,
        variants,
        arch: Arch::Vgg16_1d,
        ..ExperimentConfig::default()
    }
}

/// Named scenario grids. Every preset except `desk` uses the full-size
/// protocol.
pub fn scenario_preset(name: &str) -> Result<ExperimentConfig> {
    let basic_variants = vec![Variant::Org, Variant::DaAdv];
    let all = Variant::ALL.to_vec();
    let cfg = match name {
        "basic" => ExperimentConfig {
            unified_rate_hz: Some(6.25),
            baselines: vec![Baseline::HcfKnn, Baseline::HcfDnn],
            ..full_scale(name, vec![20; 5], basic_variants)
        },
        "unknown-sr" => ExperimentConfig {
            unknown_rates_hz: UNKNOWN_RATES_HZ.to_vec(),
            baselines: vec![Baseline::HcfDnn],
            ..full_scale(name, vec![20; 5], basic_variants)
        },
        "subjects-100" | "ablation" => full_scale(name, vec![20; 5], all),
        "subjects-50" | "ratio-even" => full_scale(name, vec![10; 5], all),
        "subjects-25" => full_scale(name, vec![5; 5], all),
        "ratio-low" => full_scale(name, vec![5, 5, 5, 5, 30], all),
        "ratio-high" => full_scale(name, vec![30, 5, 5, 5, 5], all),
        "desk" => ExperimentConfig::default(),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            let cfg = scenario_preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.scenario, name);
        }
    }

    #[test]
    fn unknown_preset_lists_names() {
        match scenario_preset("nope") {
            Err(Error::UnknownPreset { valid, .. }) => assert_eq!(valid.len(), PRESET_NAMES.len()),
            other => panic!("expected UnknownPreset, got {other:?}"),
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"n_trials": 2, "variants": ["org"]}"#).unwrap();
        assert_eq!(cfg.n_trials, 2);
        assert_eq!(cfg.group_sizes, vec![6; 5]);
        assert_eq!(cfg.arch, Arch::VggMini);
    }
}
