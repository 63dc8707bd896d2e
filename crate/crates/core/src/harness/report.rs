use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::{ClassScore, ConfusionMatrix, MeanStd};
use crate::data::SplitSpec;
use crate::error::{invalid, Result};

/// One model's scores on one test rate within a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate_hz: f64,
    pub trained: bool,
    /// Highest accuracy at this rate over all evaluations.
    pub best_accuracy: f64,
    pub best_epoch: usize,
    /// Scores at the model's selected epoch (best mean trained-rate
    /// accuracy).
    pub selected_accuracy: f64,
    pub classes: Vec<ClassScore>,
    pub confusion: ConfusionMatrix,
    pub rate_accuracy: Option<f64>,
}

/// Rate-discriminator accuracy over the training bundle and the pooled
/// trained-rate test sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorResult {
    pub best_test: f64,
    pub best_test_epoch: usize,
    pub final_test: f64,
    /// Majority-class share of the pooled test labels.
    pub test_majority: f64,
    pub best_train: Option<f64>,
    pub final_train: Option<f64>,
    pub train_majority: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub selected_epoch: usize,
    pub rates: Vec<RateResult>,
    pub discriminator: Option<DiscriminatorResult>,
}

impl ModelResult {
    pub fn at(&self, rate_hz: f64) -> Option<&RateResult> {
        self.rates
            .iter()
            .find(|r| (r.rate_hz - rate_hz).abs() < 1e-9)
    }
}

/// Number of frames each bundle held in one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub mixed: usize,
    pub augmented: Option<usize>,
    pub test_per_rate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub split: SplitSpec,
    pub frames: FrameCounts,
    pub models: Vec<ModelResult>,
}

impl TrialResult {
    pub fn model(&self, name: &str) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rate_hz: f64,
    pub trained: bool,
    pub best_accuracy: MeanStd,
    pub selected_accuracy: MeanStd,
    /// Per-class F-measure at the selected epoch.
    pub f_measure: Vec<MeanStd>,
    pub rate_accuracy: Option<MeanStd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorSummary {
    pub best_test: MeanStd,
    pub final_test: MeanStd,
    pub test_majority: MeanStd,
    pub best_train: Option<MeanStd>,
    pub final_train: Option<MeanStd>,
    pub train_majority: Option<MeanStd>,
}

/// Per-trial difference `model − reference` in best accuracy at one rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub rate_hz: f64,
    pub delta: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub rates: Vec<RateSummary>,
    pub discriminator: Option<DiscriminatorSummary>,
    /// Paired against `org` when both ran.
    pub vs_org: Vec<PairedDelta>,
}

impl ModelSummary {
    pub fn at(&self, rate_hz: f64) -> Option<&RateSummary> {
        self.rates
            .iter()
            .find(|r| (r.rate_hz - rate_hz).abs() < 1e-9)
    }
}

/// Mean and standard deviation across trials for every model and test rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub n_trials: usize,
    pub activities: Vec<String>,
    pub models: Vec<ModelSummary>,
}

impl MetricsReport {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }
}

fn stats(values: impl Iterator<Item = f64>) -> MeanStd {
    MeanStd::of(&values.collect::<Vec<_>>())
}

fn optional_stats(values: Vec<Option<f64>>) -> Option<MeanStd> {
    values
        .into_iter()
        .collect::<Option<Vec<f64>>>()
        .map(|v| MeanStd::of(&v))
}

fn summarize_rate(per_trial: &[&RateResult]) -> RateSummary {
    let first = per_trial[0];
    let classes = first.classes.len();
    RateSummary {
        rate_hz: first.rate_hz,
        trained: first.trained,
        best_accuracy: stats(per_trial.iter().map(|r| r.best_accuracy)),
        selected_accuracy: stats(per_trial.iter().map(|r| r.selected_accuracy)),
        f_measure: (0..classes)
            .map(|c| stats(per_trial.iter().map(|r| r.classes[c].f_measure)))
            .collect(),
        rate_accuracy: optional_stats(per_trial.iter().map(|r| r.rate_accuracy).collect()),
    }
}

fn summarize_discriminator(per_trial: &[&DiscriminatorResult]) -> DiscriminatorSummary {
    DiscriminatorSummary {
        best_test: stats(per_trial.iter().map(|d| d.best_test)),
        final_test: stats(per_trial.iter().map(|d| d.final_test)),
        test_majority: stats(per_trial.iter().map(|d| d.test_majority)),
        best_train: optional_stats(per_trial.iter().map(|d| d.best_train).collect()),
        final_train: optional_stats(per_trial.iter().map(|d| d.final_train).collect()),
        train_majority: optional_stats(per_trial.iter().map(|d| d.train_majority).collect()),
    }
}

/// Aggregate trials (in trial-index order) into the experiment report.
pub fn aggregate(config: &ExperimentConfig, trials: &[TrialResult]) -> Result<MetricsReport> {
    let Some(first) = trials.first() else {
        return invalid("no trials to aggregate");
    };
    let mut sorted: Vec<&TrialResult> = trials.iter().collect();
    sorted.sort_by_key(|t| t.trial);
    let mut models = Vec::new();
    for m in &first.models {
        let runs: Vec<&ModelResult> = sorted
            .iter()
            .map(|t| {
                t.model(&m.model).ok_or_else(|| {
                    crate::Error::InvalidArgument(format!(
                        "trial {} lacks model {}",
                        t.trial, m.model
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mut rates = Vec::new();
        for r in &m.rates {
            let per_trial: Vec<&RateResult> = runs
                .iter()
                .map(|run| {
                    run.at(r.rate_hz).ok_or_else(|| {
                        crate::Error::InvalidArgument(format!(
                            "model {} lacks rate {} Hz",
                            run.model, r.rate_hz
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            rates.push(summarize_rate(&per_trial));
        }
        let discriminator = runs
            .iter()
            .map(|run| run.discriminator.as_ref())
            .collect::<Option<Vec<_>>>()
            .map(|d| summarize_discriminator(&d));
        let vs_org = match sorted
            .iter()
            .map(|t| t.model("org"))
            .collect::<Option<Vec<_>>>()
        {
            Some(org) if m.model != "org" => m
                .rates
                .iter()
                .filter_map(|r| {
                    let diffs: Option<Vec<f64>> = runs
                        .iter()
                        .zip(&org)
                        .map(|(run, o)| {
                            Some(run.at(r.rate_hz)?.best_accuracy - o.at(r.rate_hz)?.best_accuracy)
                        })
                        .collect();
                    diffs.map(|d| PairedDelta {
                        rate_hz: r.rate_hz,
                        delta: MeanStd::of(&d),
                    })
                })
                .collect(),
            _ => Vec::new(),
        };
        models.push(ModelSummary {
            model: m.model.clone(),
            rates,
            discriminator,
            vs_org,
        });
    }
    Ok(MetricsReport {
        scenario: config.scenario.clone(),
        seed: config.seed,
        n_trials: trials.len(),
        activities: config.activities.names().to_vec(),
        models,
    })
}

fn rate_label(rate_hz: f64) -> String {
    format!("{rate_hz} Hz")
}

/// Best-epoch accuracy grid: one row per model, one column per test rate,
/// cells `mean (±std)` in percent.
pub fn write_table_csv(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    let rates: Vec<f64> = report
        .models
        .first()
        .map(|m| m.rates.iter().map(|r| r.rate_hz).collect())
        .unwrap_or_default();
    let mut header = vec!["model".to_string()];
    header.extend(rates.iter().map(|&r| rate_label(r)));
    out.write_record(&header)?;
    for m in &report.models {
        let mut row = vec![m.model.clone()];
        for &r in &rates {
            row.push(m.at(r).map_or_else(String::new, |s| {
                format!(
                    "{:.1} (±{:.1})",
                    100.0 * s.best_accuracy.mean,
                    100.0 * s.best_accuracy.std
                )
            }));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn trial_file_name(trial: usize) -> String {
    format!("trial-{trial}.json")
}

/// Config and per-trial results persisted in an experiment directory.
pub fn load_trials(dir: &Path) -> Result<(ExperimentConfig, Vec<TrialResult>)> {
    let config: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
    let mut trials = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name.starts_with("trial-") && name.ends_with(".json") {
            trials.push(serde_json::from_str::<TrialResult>(&fs::read_to_string(
                &path,
            )?)?);
        }
    }
    if trials.is_empty() {
        return invalid(format!("no trial-*.json files in {}", dir.display()));
    }
    trials.sort_by_key(|t| t.trial);
    Ok((config, trials))
}

/// Recompute `report.json` and `table.csv` from persisted trials.
pub fn rebuild_report(dir: &Path) -> Result<MetricsReport> {
    let (config, trials) = load_trials(dir)?;
    let report = aggregate(&config, &trials)?;
    write_json(&report, &dir.join("report.json"))?;
    write_table_csv(&report, &dir.join("table.csv"))?;
    Ok(report)
}
