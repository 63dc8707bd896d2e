//! Fixtures shared by the kernel benchmarks.

use rand::Rng;
use srhar_core::data::{
    ActivitySchema, Batch, DatasetBundle, LabeledFrame, Provenance, RateSchema,
};
use srhar_core::grad::{AdamConfig, Tensor};
use srhar_core::models::{Arch, ModelBundle, ModelSpec};
use srhar_core::seed::rng_for;
use srhar_core::sigproc::{Waveform, FRAME_LEN};

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = rng_for(seed, &[]);
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .expect("shape matches")
}

/// Three-channel noise at `rate_hz`.
pub fn random_waveform(rate_hz: f64, len: usize, seed: u64) -> Waveform {
    let mut rng = rng_for(seed, &[]);
    let channels = (0..3)
        .map(|_| (0..len).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    Waveform::new(rate_hz, channels).expect("three equal channels")
}

/// Mixed-provenance bundle of random frames over the default schemas.
pub fn random_bundle(n: usize, seed: u64) -> DatasetBundle {
    let rates = RateSchema::default();
    let mut rng = rng_for(seed, &[]);
    let frames = (0..n)
        .map(|i| {
            let rate_index = i % rates.len();
            LabeledFrame {
                data: (0..3 * FRAME_LEN)
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect(),
                activity: i % 6,
                rate_index,
                nominal_rate_hz: rates.rate(rate_index),
                grid_rate_hz: 100.0,
                subject_id: format!("b{i}"),
            }
        })
        .collect();
    DatasetBundle::new(Provenance::Mixed, ActivitySchema::default(), rates, frames)
        .expect("consistent labels")
}

pub fn model(arch: Arch) -> ModelBundle {
    ModelBundle::new(ModelSpec::new(arch, 6, 5), 0, AdamConfig::default()).expect("valid spec")
}

pub fn first_batch(bundle: &DatasetBundle, size: usize) -> Batch {
    bundle.batch(&(0..size.min(bundle.len())).collect::<Vec<_>>())
}
