use std::f64::consts::PI;

use rand::Rng;
use srhar_core::adversary::{
    best_epoch, best_epoch_by, export_features, step_disc, step_main, step_plain, train,
    EvalRecord, LossBreakdown, TrainConfig, TrainHistory, Variant,
};
use srhar_core::data::{
    ActivitySchema, Batch, DatasetBundle, LabeledFrame, Provenance, RateSchema, TestSet,
};
use srhar_core::grad::{AdamConfig, Mode};
use srhar_core::models::{knn_fit, Block, EncoderSpec, ModelBundle, ModelSpec};
use srhar_core::seed::rng_for;
use srhar_core::sigproc::FRAME_LEN;

const RATES: [f64; 2] = [100.0, 50.0];

fn tiny_spec(num_rates: usize, dropout: f64) -> ModelSpec {
    ModelSpec {
        encoder: EncoderSpec {
            blocks: vec![Block::Conv(4), Block::Pool, Block::Pool, Block::Pool],
            kernel: 3,
            in_channels: 3,
            in_len: FRAME_LEN,
        },
        head_width: 16,
        dropout,
        num_activities: 2,
        num_rates,
    }
}

/// Activity 0 oscillates at 1 Hz and activity 1 at 6 Hz; rate index 1
/// carries a small offset so the discriminator has something to find.
fn toy_frames(n: usize, seed: u64, rates: &[f64]) -> Vec<LabeledFrame> {
    let mut rng = rng_for(seed, &[]);
    (0..n)
        .map(|i| {
            let activity = i % 2;
            let rate_index = (i / 2) % rates.len();
            let freq = if activity == 0 { 1.0 } else { 6.0 };
            let phase = rng.random_range(0.0..2.0 * PI);
            let data = (0..3 * FRAME_LEN)
                .map(|j| {
                    let t = (j % FRAME_LEN) as f64 / 100.0;
                    (2.0 * PI * freq * t + phase).sin()
                        + 0.3 * rate_index as f64
                        + rng.random_range(-0.2..0.2)
                })
                .collect();
            LabeledFrame {
                data,
                activity,
                rate_index,
                nominal_rate_hz: rates[rate_index],
                grid_rate_hz: 100.0,
                subject_id: format!("t{seed}-{}", i / 8),
            }
        })
        .collect()
}

fn toy_bundle(n: usize, seed: u64, rates: &[f64]) -> DatasetBundle {
    DatasetBundle::new(
        Provenance::Mixed,
        ActivitySchema::new(vec!["low".into(), "high".into()]).unwrap(),
        RateSchema::new(rates.to_vec()).unwrap(),
        toy_frames(n, seed, rates),
    )
    .unwrap()
}

fn all(bundle: &DatasetBundle) -> Batch {
    bundle.batch(&(0..bundle.len()).collect::<Vec<_>>())
}

fn fresh(spec: ModelSpec, lr: f64) -> ModelBundle {
    let adam = AdamConfig {
        lr,
        ..AdamConfig::default()
    };
    ModelBundle::new(spec, 5, adam).unwrap()
}

/// Mean cross-entropy of logits against one-hot rows, straight from the
/// definition.
fn mean_ce(logits: &srhar_core::grad::Tensor, targets: &srhar_core::grad::Tensor) -> f64 {
    let m = logits.dim(1);
    let rows = logits.dim(0);
    let mut total = 0.0;
    for (z, y) in logits.data().chunks(m).zip(targets.data().chunks(m)) {
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total -= z.iter().zip(y).map(|(zi, yi)| yi * (zi - lse)).sum::<f64>();
    }
    total / rows as f64
}

#[test]
fn reported_losses_match_an_independent_forward_pass() {
    let data = toy_bundle(12, 1, &RATES);
    let batch = all(&data);
    let mut model = fresh(tiny_spec(2, 0.0), 1e-3);
    for step in 0..5 {
        // Without dropout the training forward pass equals eval mode.
        let out = model
            .forward(&batch.inputs, Mode::Eval, &mut rng_for(0, &[]))
            .unwrap();
        let l_ce = mean_ce(&out.activity_logits, &batch.activity);
        let l_d = mean_ce(&out.rate_logits, &batch.rate);
        let got = step_main(&mut model, &batch, 0.7, step).unwrap();
        assert!(
            (got.l_ce - l_ce).abs() < 1e-12,
            "step {step}: L_CE {} vs {l_ce}",
            got.l_ce
        );
        assert!(
            (got.l_d - l_d).abs() < 1e-12,
            "step {step}: L_D {} vs {l_d}",
            got.l_d
        );
        assert!((got.total - (l_ce - 0.7 * l_d)).abs() < 1e-12);
        step_disc(&mut model, &batch, step).unwrap();
    }
}

#[test]
fn batch_losses_keep_the_bookkeeping() {
    let data = toy_bundle(16, 2, &RATES);
    let cfg = TrainConfig {
        batch_size: 4,
        lambda: 0.6,
        epochs: 3,
        eval_every: 1,
        variant: Variant::Adv,
        eval_train: false,
        ..TrainConfig::default()
    };
    let out = train(fresh(tiny_spec(2, 0.5), 1e-3), &data, &[], &cfg).unwrap();
    assert_eq!(out.history.batch_losses.len(), 12);
    for l in &out.history.batch_losses {
        assert_eq!(l.lambda, 0.6);
        assert!((l.total - (l.l_ce - l.lambda * l.l_d)).abs() < 1e-12);
    }
}

#[test]
fn each_step_touches_only_its_own_parameters() {
    let data = toy_bundle(12, 3, &RATES);
    let mut model = fresh(tiny_spec(2, 0.5), 1e-3);
    for step in 0..100u64 {
        let idx: Vec<usize> = (0..4)
            .map(|i| (step as usize * 4 + i) % data.len())
            .collect();
        let batch = data.batch(&idx);

        let (disc, opt_disc) = (model.discriminator.clone(), model.opt_discriminator.clone());
        let enc = model.encoder.clone();
        step_main(&mut model, &batch, 1.0, step).unwrap();
        assert_eq!(
            model.discriminator, disc,
            "step {step}: main step moved the discriminator"
        );
        assert_eq!(model.opt_discriminator, opt_disc);
        assert_ne!(model.encoder, enc);

        let (enc, cls) = (model.encoder.clone(), model.classifier.clone());
        let (opt_enc, opt_cls) = (model.opt_encoder.clone(), model.opt_classifier.clone());
        step_disc(&mut model, &batch, step).unwrap();
        assert_eq!(
            model.encoder, enc,
            "step {step}: discriminator step moved the encoder"
        );
        assert_eq!(model.classifier, cls);
        assert_eq!(
            (&model.opt_encoder, &model.opt_classifier),
            (&opt_enc, &opt_cls)
        );
        assert_ne!(model.discriminator, disc);
    }
}

fn max_gap(a: &ModelBundle, b: &ModelBundle) -> f64 {
    let mut gap = 0.0f64;
    for (x, y) in [
        (&a.encoder, &b.encoder),
        (&a.classifier, &b.classifier),
        (&a.discriminator, &b.discriminator),
    ] {
        for (id, t) in x.iter() {
            let u = y.get(id).unwrap();
            for (p, q) in t.data().iter().zip(u.data()) {
                gap = gap.max((p - q).abs());
            }
        }
    }
    gap
}

#[test]
fn zero_lambda_adversarial_matches_conventional() {
    let data = toy_bundle(12, 4, &RATES);
    let mut adv = fresh(tiny_spec(2, 0.5), 1e-3);
    let mut org = adv.clone();
    for step in 0..20u64 {
        let batch = data.batch(&[
            (step as usize) % 12,
            (step as usize + 5) % 12,
            (step as usize + 7) % 12,
        ]);
        let l = step_main(&mut adv, &batch, 0.0, step).unwrap();
        let l_ce = step_plain(&mut org, &batch, step).unwrap();
        assert!((l.l_ce - l_ce).abs() < 1e-12);
        step_disc(&mut adv, &batch, step).unwrap();
        step_disc(&mut org, &batch, step).unwrap();
    }
    assert!(max_gap(&adv, &org) < 1e-12);

    let base = TrainConfig {
        batch_size: 4,
        lambda: 0.0,
        epochs: 4,
        eval_every: 2,
        eval_train: false,
        ..TrainConfig::default()
    };
    let run = |variant| {
        let cfg = TrainConfig {
            variant,
            ..base.clone()
        };
        train(fresh(tiny_spec(2, 0.5), 1e-3), &data, &[], &cfg).unwrap()
    };
    let (a, o) = (run(Variant::Adv), run(Variant::Org));
    assert!(max_gap(&a.final_model, &o.final_model) < 1e-12);
}

#[test]
fn adversarial_weight_reaches_the_encoder() {
    let data = toy_bundle(8, 11, &RATES);
    let batch = all(&data);
    let start = fresh(tiny_spec(2, 0.5), 1e-3);
    let (mut with, mut without) = (start.clone(), start);
    step_main(&mut with, &batch, 1.0, 0).unwrap();
    step_main(&mut without, &batch, 0.0, 0).unwrap();
    assert_ne!(with.encoder, without.encoder);
    // L_D does not reach the classifier, so it moves identically.
    assert_eq!(with.classifier, without.classifier);
}

#[test]
fn single_rate_schema_has_zero_discriminator_loss() {
    let data = toy_bundle(6, 5, &[100.0]);
    let batch = all(&data);
    let mut model = fresh(tiny_spec(1, 0.5), 1e-3);
    let l = step_main(&mut model, &batch, 1.0, 0).unwrap();
    assert!(l.l_d.abs() < 1e-15);
    assert!(step_disc(&mut model, &batch, 0).unwrap().abs() < 1e-15);
}

#[test]
fn discriminator_loss_falls_on_a_fixed_batch() {
    let data = toy_bundle(16, 6, &RATES);
    let batch = all(&data);
    let mut model = fresh(tiny_spec(2, 0.0), 1e-3);
    let losses: Vec<f64> = (0..50)
        .map(|s| step_disc(&mut model, &batch, s).unwrap())
        .collect();
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "L_D rose from {} to {}", w[0], w[1]);
    }
    assert!(losses[49] < losses[0]);
}

fn test_sets(seed: u64) -> Vec<TestSet> {
    vec![TestSet {
        rate_hz: 100.0,
        bundle: toy_bundle(40, seed, &RATES),
    }]
}

#[test]
fn training_is_deterministic_and_evaluates_on_schedule() {
    let data = toy_bundle(8, 7, &RATES);
    let tests = test_sets(70);
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 150,
        eval_every: 10,
        variant: Variant::Adv,
        ..TrainConfig::default()
    };
    let a = train(fresh(tiny_spec(2, 0.5), 1e-4), &data, &tests, &cfg).unwrap();
    let b = train(fresh(tiny_spec(2, 0.5), 1e-4), &data, &tests, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.final_model, b.final_model);
    let epochs: Vec<usize> = a.history.records.iter().map(|r| r.epoch).collect();
    assert_eq!(epochs, (1..=15).map(|i| i * 10).collect::<Vec<_>>());
    assert!(a.history.records.iter().all(|r| r.train.is_some()));
    let (best, _) = best_epoch(&a.history, None).unwrap();
    let best_record = a.history.records.iter().find(|r| r.epoch == best).unwrap();
    let again =
        srhar_core::adversary::evaluate(&a.best_model, best, best_record.loss, Some(&data), &tests)
            .unwrap();
    assert_eq!(&again, best_record);
}

#[test]
fn separable_toy_is_learned_and_features_transfer() {
    let data = toy_bundle(64, 8, &RATES);
    let tests = test_sets(80);
    let cfg = TrainConfig {
        batch_size: 16,
        epochs: 30,
        eval_every: 10,
        variant: Variant::Org,
        eval_train: false,
        ..TrainConfig::default()
    };
    let out = train(fresh(tiny_spec(2, 0.5), 1e-3), &data, &tests, &cfg).unwrap();
    let acc = out.history.final_record().unwrap().tests[0].scores.accuracy;
    assert!(acc >= 0.95, "test accuracy {acc}");

    let (train_x, train_y) = export_features(&out.final_model, &data).unwrap();
    assert_eq!(export_features(&out.final_model, &data).unwrap().0, train_x);
    assert_eq!(train_x[0].len(), 4 * 32);
    let (test_x, test_y) = export_features(&out.final_model, &tests[0].bundle).unwrap();
    let knn = knn_fit(train_x, train_y, 5).unwrap();
    let pred = knn.predict_all(&test_x).unwrap();
    let knn_acc =
        pred.iter().zip(&test_y).filter(|(a, b)| a == b).count() as f64 / test_y.len() as f64;
    assert!(knn_acc > 0.8, "kNN on features {knn_acc}");
}

#[test]
fn mismatched_inputs_are_rejected() {
    let data = toy_bundle(8, 9, &RATES);
    let cfg = TrainConfig {
        variant: Variant::DaOrg,
        epochs: 1,
        ..TrainConfig::default()
    };
    assert!(train(fresh(tiny_spec(2, 0.5), 1e-3), &data, &[], &cfg).is_err());
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    assert!(train(fresh(tiny_spec(3, 0.5), 1e-3), &data, &[], &cfg).is_err());
    let cfg = TrainConfig {
        lambda: -1.0,
        ..cfg
    };
    assert!(train(fresh(tiny_spec(2, 0.5), 1e-3), &data, &[], &cfg).is_err());
}

fn record(epoch: usize, mean: f64) -> EvalRecord {
    EvalRecord {
        epoch,
        loss: LossBreakdown::new(0.0, 0.0, 0.0),
        train: None,
        tests: Vec::new(),
        mean_trained_accuracy: mean,
        pooled_rate_accuracy: 0.0,
        pooled_rate_majority: 0.0,
    }
}

#[test]
fn best_epoch_selection() {
    let history = |values: &[f64]| TrainHistory {
        records: values
            .iter()
            .enumerate()
            .map(|(i, &v)| record(10 * (i + 1), v))
            .collect(),
        ..TrainHistory::default()
    };
    assert_eq!(
        best_epoch(&history(&[0.5, 0.9, 0.7]), None).unwrap(),
        (20, 0.9)
    );
    assert_eq!(
        best_epoch(&history(&[0.8, 0.6, 0.8]), None).unwrap(),
        (10, 0.8)
    );
    assert!(best_epoch(&history(&[0.5]), Some(100.0)).is_err());
    assert!(best_epoch(&TrainHistory::default(), None).is_err());
    let h = history(&[0.1, 0.2, 0.3]);
    assert_eq!(
        best_epoch_by(&h.records, |r| -r.mean_trained_accuracy)
            .unwrap()
            .0,
        10
    );
}
