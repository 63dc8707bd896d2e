use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use srhar_core::adversary::{evaluate, LossBreakdown, Variant};
use srhar_core::data::{
    build_test_sets, load_corpus, synth_corpus, write_corpus, ActivitySchema, FramingOptions,
    SplitSpec,
};
use srhar_core::harness::{
    load_experiment_corpus, rebuild_report, run_trial, run_trials, scenario_preset, write_json,
    CorpusSource, ExperimentConfig, MetricsReport, RunOptions,
};
use srhar_core::models::{load_checkpoint, Arch};

#[derive(Parser)]
#[command(
    name = "srhar",
    version,
    about = "Sampling-rate-robust activity recognition experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus as CSV files plus manifest.json.
    Synth {
        #[arg(long, default_value_t = 40)]
        subjects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the first trial's split.
    Train {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "DA-Adv")]
        variant: Variant,
    },
    /// Run a scenario preset or config file over all trials.
    Experiment {
        #[command(flatten)]
        setup: Setup,
        /// Restrict to these variants (repeatable).
        #[arg(long)]
        variant: Vec<Variant>,
        #[arg(long)]
        trials: Option<usize>,
        /// Save the best-epoch model of every network.
        #[arg(long)]
        checkpoints: bool,
    },
    /// Score a checkpoint on every subject of a corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus manifest; a synthetic corpus is generated when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test rates in Hz; defaults to the checkpoint's schema.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        #[arg(long)]
        max_frames: Option<usize>,
        /// Write the evaluation record here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-aggregate an experiment directory into report.json and table.csv.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Experiment selection plus command-line overrides.
#[derive(Args)]
struct Setup {
    /// Scenario preset name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON file with ExperimentConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Read recordings from this manifest instead of generating them.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_parser = parse_arch)]
    arch: Option<Arch>,
    /// Keep at most this many frames per activity segment.
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_arch(s: &str) -> Result<Arch, String> {
    Arch::parse(s).map_err(|e| e.to_string())
}

impl Setup {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (_, Some(path)) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            (Some(name), None) => scenario_preset(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(path) = &self.manifest {
            cfg.corpus = CorpusSource::Manifest { path: path.clone() };
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        if let Some(arch) = self.arch {
            cfg.arch = arch;
        }
        if self.max_frames.is_some() {
            cfg.framing.max_frames_per_segment = self.max_frames;
        }
        Ok(cfg)
    }
}

fn print_summary(report: &MetricsReport) {
    for m in &report.models {
        let cells: Vec<String> = m
            .rates
            .iter()
            .map(|r| format!("{} Hz {:.1}%", r.rate_hz, 100.0 * r.best_accuracy.mean))
            .collect();
        println!("{:<20} {}", m.model, cells.join("  "));
    }
}

fn synth(subjects: usize, seed: u64, out: &Path) -> Result<()> {
    let schema = ActivitySchema::default();
    let manifest = write_corpus(out, &synth_corpus(subjects, seed, &schema), &schema)?;
    println!("{}", manifest.display());
    Ok(())
}

fn train_one(setup: &Setup, variant: Variant) -> Result<()> {
    let mut cfg = setup.resolve()?;
    cfg.variants = vec![variant];
    cfg.baselines.clear();
    cfg.unified_rate_hz = None;
    cfg.n_trials = 1;
    cfg.validate()?;
    fs::create_dir_all(&setup.out)?;
    write_json(&cfg, &setup.out.join("config.json"))?;
    let corpus = load_experiment_corpus(&cfg)?;
    let options = RunOptions {
        out_dir: Some(setup.out.clone()),
        checkpoints: true,
    };
    let trial = run_trial(&cfg, &corpus, 0, &options)?;
    write_json(&trial, &setup.out.join("trial-0.json"))?;
    let report = rebuild_report(&setup.out)?;
    print_summary(&report);
    Ok(())
}

fn experiment(
    setup: &Setup,
    variants: &[Variant],
    trials: Option<usize>,
    checkpoints: bool,
) -> Result<()> {
    let mut cfg = setup.resolve()?;
    if !variants.is_empty() {
        cfg.variants = variants.to_vec();
    }
    if let Some(n) = trials {
        cfg.n_trials = n;
    }
    let options = RunOptions {
        out_dir: Some(setup.out.clone()),
        checkpoints,
    };
    let outcome = run_trials(&cfg, &options)?;
    print_summary(&outcome.report);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    checkpoint: &Path,
    manifest: Option<&Path>,
    subjects: usize,
    seed: u64,
    rates: &[f64],
    max_frames: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let (bundle, meta) = load_checkpoint(checkpoint)?;
    let corpus = match manifest {
        Some(path) => load_corpus(path, &meta.activities)?,
        None => synth_corpus(subjects, seed, &meta.activities),
    };
    if corpus.is_empty() {
        bail!("corpus has no subjects");
    }
    let split = SplitSpec {
        groups: vec![Vec::new(); meta.rates.len()],
        test: corpus.iter().map(|r| r.subject_id.clone()).collect(),
        seed,
    };
    let rates = if rates.is_empty() {
        meta.rates.rates_hz().to_vec()
    } else {
        rates.to_vec()
    };
    let framing = FramingOptions {
        max_frames_per_segment: max_frames,
        ..FramingOptions::default()
    };
    let tests = build_test_sets(
        &corpus,
        &split,
        &rates,
        &meta.activities,
        &meta.rates,
        &framing,
    )?;
    let record = evaluate(&bundle, 0, LossBreakdown::new(0.0, 0.0, 0.0), None, &tests)?;
    let text = serde_json::to_string_pretty(&record)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth {
            subjects,
            seed,
            out,
        } => synth(subjects, seed, &out),
        Command::Train { setup, variant } => train_one(&setup, variant),
        Command::Experiment {
            setup,
            variant,
            trials,
            checkpoints,
        } => experiment(&setup, &variant, trials, checkpoints),
        Command::Eval {
            checkpoint,
            manifest,
            subjects,
            seed,
            rates,
            max_frames,
            out,
        } => eval(
            &checkpoint,
            manifest.as_deref(),
            subjects,
            seed,
            &rates,
            max_frames,
            out.as_deref(),
        ),
        Command::Report { dir } => {
            let report = rebuild_report(&dir)?;
            print_summary(&report);
            Ok(())
        }
    }
}
