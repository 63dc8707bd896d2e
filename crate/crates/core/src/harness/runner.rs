use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Baseline, CorpusSource, ExperimentConfig};
use super::metrics::{confusion, f_measure};
use super::report::{
    aggregate, trial_file_name, write_json, write_table_csv, DiscriminatorResult, FrameCounts,
    MetricsReport, ModelResult, RateResult, TrialResult,
};
use crate::adversary::{best_epoch, best_epoch_by, train, TrainConfig, TrainHistory, Variant};
use crate::data::{
    augment_downsample, build_mixed_training, build_test_sets, build_unified_training, load_corpus,
    split_subjects, synth_corpus, DatasetBundle, SubjectRecording, TestSet,
};
use crate::error::{invalid, Result};
use crate::models::{
    hcf_dnn_spec, hcf_extract, knn_fit, save_checkpoint, standardize_fit, CheckpointMeta,
    DenseClassifier, ModelBundle, ModelSpec,
};
use crate::seed::derive_seed;

const CORPUS_STREAM: u64 = 0;
const TRIAL_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const BASELINE_STREAM: u64 = 3;

/// Where and what to persist while running.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Also write `best-<trial>-<model>.ckpt` for every network.
    pub checkpoints: bool,
}

pub struct ExperimentOutcome {
    pub report: MetricsReport,
    pub trials: Vec<TrialResult>,
}

/// Recordings for the experiment; synthetic corpora derive from the master
/// seed so they are shared by every trial.
pub fn load_experiment_corpus(config: &ExperimentConfig) -> Result<Vec<SubjectRecording>> {
    match &config.corpus {
        CorpusSource::Synth { n_subjects } => Ok(synth_corpus(
            *n_subjects,
            derive_seed(config.seed, &[CORPUS_STREAM]),
            &config.activities,
        )),
        CorpusSource::Manifest { path } => load_corpus(path, &config.activities),
    }
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[TRIAL_STREAM, trial as u64])
}

/// Name used in reports for a network trained on a single unified rate.
pub fn unified_model_name(rate_hz: f64) -> String {
    format!("org-unified-{rate_hz}Hz")
}

fn history_file(dir: &Path, trial: usize, model: &str) -> PathBuf {
    dir.join(format!("history-{trial}-{model}.jsonl"))
}

/// Per-rate and discriminator results from a training history.
fn network_result(model: &str, history: &TrainHistory) -> Result<ModelResult> {
    let (selected_epoch, _) = best_epoch(history, None)?;
    let selected = history
        .records
        .iter()
        .find(|r| r.epoch == selected_epoch)
        .expect("best epoch comes from the records");
    let mut rates = Vec::new();
    for t in &selected.tests {
        let (best_epoch, best_accuracy) = best_epoch(history, Some(t.rate_hz))?;
        rates.push(RateResult {
            rate_hz: t.rate_hz,
            trained: t.trained,
            best_accuracy,
            best_epoch,
            selected_accuracy: t.scores.accuracy,
            classes: f_measure(&t.scores.confusion),
            confusion: t.scores.confusion.clone(),
            rate_accuracy: Some(t.scores.rate_accuracy),
        });
    }
    let last = history.final_record().expect("history is not empty");
    let (best_test_epoch, best_test) = best_epoch_by(&history.records, |r| r.pooled_rate_accuracy)?;
    let best_train = history
        .records
        .iter()
        .map(|r| r.train.as_ref().map(|t| t.rate_accuracy))
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max));
    Ok(ModelResult {
        model: model.to_string(),
        selected_epoch,
        rates,
        discriminator: Some(DiscriminatorResult {
            best_test,
            best_test_epoch,
            final_test: last.pooled_rate_accuracy,
            test_majority: last.pooled_rate_majority,
            best_train,
            final_train: last.train.as_ref().map(|t| t.rate_accuracy),
            train_majority: last.train.as_ref().map(|t| t.rate_majority),
        }),
    })
}

/// Scores for a single-shot classifier given its predictions per test set.
fn baseline_result(
    model: &str,
    epoch: usize,
    tests: &[TestSet],
    preds: Vec<Vec<usize>>,
) -> Result<ModelResult> {
    let mut rates = Vec::new();
    for (t, pred) in tests.iter().zip(preds) {
        let truth: Vec<usize> = t.bundle.frames().iter().map(|f| f.activity).collect();
        let cm = confusion(&pred, &truth, t.bundle.activities().len())?;
        rates.push(RateResult {
            rate_hz: t.rate_hz,
            trained: t
                .bundle
                .rates()
                .rates_hz()
                .iter()
                .any(|r| (r - t.rate_hz).abs() < 1e-9),
            best_accuracy: cm.accuracy(),
            best_epoch: epoch,
            selected_accuracy: cm.accuracy(),
            classes: f_measure(&cm),
            confusion: cm,
            rate_accuracy: None,
        });
    }
    Ok(ModelResult {
        model: model.to_string(),
        selected_epoch: epoch,
        rates,
        discriminator: None,
    })
}

fn hcf_features(bundle: &DatasetBundle) -> Vec<Vec<f64>> {
    bundle
        .frames()
        .iter()
        .map(|f| hcf_extract(f).as_slice().to_vec())
        .collect()
}

fn run_baseline(
    baseline: Baseline,
    config: &ExperimentConfig,
    seed: u64,
    train_data: &DatasetBundle,
    tests: &[TestSet],
) -> Result<ModelResult> {
    let raw = hcf_features(train_data);
    let stats = standardize_fit(&raw)?;
    let features = stats.apply_all(&raw)?;
    let labels: Vec<usize> = train_data.frames().iter().map(|f| f.activity).collect();
    let test_features = tests
        .iter()
        .map(|t| stats.apply_all(&hcf_features(&t.bundle)))
        .collect::<Result<Vec<_>>>()?;
    match baseline {
        Baseline::HcfKnn => {
            let knn = knn_fit(features, labels, config.knn_k.min(train_data.len()))?;
            let preds = test_features
                .iter()
                .map(|f| knn.predict_all(f))
                .collect::<Result<Vec<_>>>()?;
            baseline_result(baseline.name(), 0, tests, preds)
        }
        Baseline::HcfDnn => {
            let spec = hcf_dnn_spec(config.activities.len());
            let mut dnn =
                DenseClassifier::new(spec, derive_seed(seed, &[INIT_STREAM]), config.train.adam)?;
            dnn.fit(
                &features,
                &labels,
                config.train.epochs,
                config.train.batch_size,
                derive_seed(seed, &[TRAIN_STREAM]),
            )?;
            let preds = test_features
                .iter()
                .map(|f| dnn.predict(f))
                .collect::<Result<Vec<_>>>()?;
            baseline_result(baseline.name(), config.train.epochs, tests, preds)
        }
    }
}

struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    options: &'a RunOptions,
    trial: usize,
    seed: u64,
    tests: &'a [TestSet],
}

impl TrialContext<'_> {
    fn train_network(
        &self,
        name: &str,
        variant: Variant,
        data: &DatasetBundle,
    ) -> Result<ModelResult> {
        let cfg = self.config;
        let mut spec = ModelSpec::new(cfg.arch, cfg.activities.len(), cfg.trained_rates_hz.len());
        spec.head_width = cfg.head_width;
        // Initialization and minibatch seeds are shared by every model in
        // the trial, so variants differ only in what they train on and how.
        let model = ModelBundle::new(spec, derive_seed(self.seed, &[INIT_STREAM]), cfg.train.adam)?;
        let train_cfg = TrainConfig {
            seed: derive_seed(self.seed, &[TRAIN_STREAM]),
            variant,
            ..cfg.train.clone()
        };
        log::info!(
            "trial {} {name}: training on {} frames",
            self.trial,
            data.len()
        );
        let outcome = train(model, data, self.tests, &train_cfg)?;
        if let Some(dir) = &self.options.out_dir {
            outcome
                .history
                .write_jsonl(&history_file(dir, self.trial, name))?;
            if self.options.checkpoints {
                let meta = CheckpointMeta {
                    activities: cfg.activities.clone(),
                    rates: cfg.rate_schema()?,
                    seed: train_cfg.seed,
                };
                save_checkpoint(
                    &dir.join(format!("best-{}-{name}.ckpt", self.trial)),
                    &outcome.best_model,
                    &meta,
                )?;
            }
        }
        network_result(name, &outcome.history)
    }
}

/// One paired trial: a fresh split shared by every model.
pub fn run_trial(
    config: &ExperimentConfig,
    corpus: &[SubjectRecording],
    trial: usize,
    options: &RunOptions,
) -> Result<TrialResult> {
    let seed = trial_seed(config.seed, trial);
    let ids: Vec<String> = corpus.iter().map(|r| r.subject_id.clone()).collect();
    let split = split_subjects(
        &ids,
        config.n_train,
        config.n_test,
        &config.group_sizes,
        derive_seed(seed, &[SPLIT_STREAM]),
    )?;
    let rates = config.rate_schema()?;
    let acts = &config.activities;
    let mixed = build_mixed_training(corpus, &split, acts, &rates, &config.framing)?;
    let tests = build_test_sets(
        corpus,
        &split,
        &config.test_rates_hz(),
        acts,
        &rates,
        &config.framing,
    )?;
    let augmented = if config.variants.iter().any(|v| v.augmented()) {
        Some(augment_downsample(&mixed)?)
    } else {
        None
    };
    let ctx = TrialContext {
        config,
        options,
        trial,
        seed,
        tests: &tests,
    };

    let mut models = Vec::new();
    for &variant in &config.variants {
        let data = if variant.augmented() {
            augmented.as_ref().expect("built when any variant augments")
        } else {
            &mixed
        };
        models.push(ctx.train_network(variant.name(), variant, data)?);
    }
    if let Some(rate) = config.unified_rate_hz {
        let unified = build_unified_training(corpus, &split, rate, acts, &rates, &config.framing)?;
        models.push(ctx.train_network(&unified_model_name(rate), Variant::Org, &unified)?);
    }
    for &baseline in &config.baselines {
        log::info!("trial {trial} {}", baseline.name());
        models.push(run_baseline(
            baseline,
            config,
            derive_seed(seed, &[BASELINE_STREAM]),
            &mixed,
            &tests,
        )?);
    }
    Ok(TrialResult {
        trial,
        seed,
        split,
        frames: FrameCounts {
            mixed: mixed.len(),
            augmented: augmented.as_ref().map(DatasetBundle::len),
            test_per_rate: tests.first().map_or(0, |t| t.bundle.len()),
        },
        models,
    })
}

/// Run every trial, persist per-trial artifacts, and aggregate.
///
/// With an output directory this writes `config.json`, `trial-<t>.json`,
/// `history-<t>-<model>.jsonl`, `report.json`, and `table.csv`.
pub fn run_trials(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentOutcome> {
    config.validate()?;
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir)?;
        write_json(config, &dir.join("config.json"))?;
    }
    let corpus = load_experiment_corpus(config)?;
    if corpus.len() < config.n_train + config.n_test {
        return invalid(format!(
            "corpus has {} subjects, experiment needs {}",
            corpus.len(),
            config.n_train + config.n_test
        ));
    }
    let mut trials = Vec::with_capacity(config.n_trials);
    for t in 0..config.n_trials {
        let result = run_trial(config, &corpus, t, options)?;
        if let Some(dir) = &options.out_dir {
            write_json(&result, &dir.join(trial_file_name(t)))?;
        }
        trials.push(result);
    }
    let report = aggregate(config, &trials)?;
    if let Some(dir) = &options.out_dir {
        write_json(&report, &dir.join("report.json"))?;
        write_table_csv(&report, &dir.join("table.csv"))?;
    }
    Ok(ExperimentOutcome { report, trials })
}
