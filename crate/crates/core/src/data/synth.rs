use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{ActivitySchema, Segment, SubjectRecording};
use crate::seed::rng_for;
use crate::sigproc::Waveform;

pub const SYNTH_RATE_HZ: f64 = 100.0;
/// Seconds per activity segment; 60 s remain after trimming 5 s per end.
pub const SYNTH_SECONDS: f64 = 70.0;

/// Sensor noise floor in g before the per-subject scale.
const SENSOR_NOISE: f64 = 0.02;
const IMPACT_DECAY_S: f64 = 0.01;
/// Strikes older than this have decayed below 1e-3 of their peak.
const IMPACT_WINDOW_S: f64 = 0.08;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

/// One sinusoid: axis, multiple of the fundamental, amplitude in g.
type Component = (usize, f64, f64);

/// Foot-strike transient once per cycle: peak in g and ringing frequency.
type Impact = (f64, f64);

struct ClassModel {
    f0: f64,
    vertical_bias: f64,
    components: Vec<Component>,
    impact: Option<Impact>,
    /// Scale in g of the broadband vibration riding on the motion.
    texture: f64,
}

fn class_model(name: &str, index: usize) -> ClassModel {
    let (f0, vertical_bias, components, impact, texture): (
        f64,
        f64,
        Vec<Component>,
        Option<Impact>,
        f64,
    ) = match name {
        "stay" => (0.0, 0.0, vec![], None, 0.0),
        "walk" => (
            2.0,
            0.0,
            vec![
                (Y, 1.0, 0.35),
                (Y, 2.0, 0.15),
                (Y, 3.0, 0.10),
                (X, 1.0, 0.20),
                (X, 2.0, 0.08),
                (Z, 0.5, 0.12),
            ],
            Some((0.8, 16.0)),
            0.12,
        ),
        "jog" => (
            3.0,
            0.0,
            vec![
                (Y, 1.0, 0.80),
                (Y, 2.0, 0.30),
                (X, 1.0, 0.40),
                (X, 2.0, 0.15),
                (Z, 0.5, 0.25),
            ],
            Some((1.5, 20.0)),
            0.25,
        ),
        "skip" => (
            2.5,
            0.0,
            vec![
                (Y, 1.0, 0.55),
                (Y, 2.0, 0.55),
                (X, 1.0, 0.30),
                (X, 2.0, 0.20),
                (Z, 0.5, 0.15),
            ],
            Some((1.2, 18.0)),
            0.22,
        ),
        "stUp" => (
            1.5,
            0.12,
            vec![
                (Y, 1.0, 0.30),
                (Y, 3.0, 0.12),
                (X, 1.0, 0.18),
                (Z, 0.5, 0.10),
            ],
            Some((0.6, 12.0)),
            0.10,
        ),
        "stDown" => (
            1.5,
            -0.12,
            vec![
                (Y, 1.0, 0.40),
                (Y, 2.0, 0.18),
                (Y, 4.0, 0.10),
                (X, 1.0, 0.15),
                (Z, 0.5, 0.10),
            ],
            Some((1.1, 22.0)),
            0.15,
        ),
        _ => (
            1.0 + 0.35 * index as f64,
            0.0,
            vec![(Y, 1.0, 0.40), (Y, 2.0, 0.15), (X, 1.0, 0.20)],
            Some((0.7, 15.0)),
            0.12,
        ),
    };
    ClassModel {
        f0,
        vertical_bias,
        components,
        impact,
        texture,
    }
}

/// Per-subject traits shared by all of that subject's activities.
struct Subject {
    amplitude: f64,
    noise_scale: f64,
    tilt: f64,
}

fn segment<R: Rng>(model: &ClassModel, subject: &Subject, rng: &mut R) -> Waveform {
    let n = (SYNTH_SECONDS * SYNTH_RATE_HZ) as usize;
    let f0 = if model.f0 > 0.0 {
        model.f0 + rng.random_range(-0.15..0.15)
    } else {
        0.0
    };
    let phases: Vec<f64> = model
        .components
        .iter()
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let gains: Vec<f64> = model
        .components
        .iter()
        .map(|_| rng.random_range(0.85..1.15))
        .collect();
    let env_phase = rng.random_range(0.0..2.0 * PI);
    let drift_phase = rng.random_range(0.0..2.0 * PI);
    let noise = Normal::new(0.0, SENSOR_NOISE * subject.noise_scale).expect("positive noise scale");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let gravity = [
        subject.tilt.sin(),
        subject.tilt.cos() + model.vertical_bias,
        0.0,
    ];

    let strikes: Vec<(f64, f64)> = match model.impact {
        Some(_) if f0 > 0.0 => {
            let offset = rng.random_range(0.0..1.0);
            (0..(SYNTH_SECONDS * f0).ceil() as usize)
                .map(|k| {
                    (
                        (k as f64 + offset) / f0 + rng.random_range(-0.01..0.01),
                        rng.random_range(0.8..1.2),
                    )
                })
                .collect()
        }
        _ => Vec::new(),
    };

    let mut channels = vec![vec![0.0; n]; 3];
    let mut prev_white = [0.0; 3];
    for i in 0..n {
        let t = i as f64 / SYNTH_RATE_HZ;
        let envelope = subject.amplitude * (1.0 + 0.1 * (2.0 * PI * 0.05 * t + env_phase).sin());
        let mut sample = gravity;
        sample[Y] += 0.02 * (2.0 * PI * 0.1 * t + drift_phase).sin();
        for (k, &(axis, mult, amp)) in model.components.iter().enumerate() {
            sample[axis] +=
                envelope * gains[k] * amp * (2.0 * PI * mult * f0 * t + phases[k]).sin();
        }
        if let Some((peak, ring_hz)) = model.impact {
            let end = strikes.partition_point(|s| s.0 <= t);
            let start = strikes[..end].partition_point(|s| s.0 < t - IMPACT_WINDOW_S);
            for &(at, gain) in &strikes[start..end] {
                let dt = t - at;
                let shock = envelope
                    * gain
                    * peak
                    * (-dt / IMPACT_DECAY_S).exp()
                    * (2.0 * PI * ring_hz * dt).cos();
                sample[Y] += shock;
                sample[X] += 0.4 * shock;
            }
        }
        for (c, ch) in channels.iter_mut().enumerate() {
            // Broadband vibration: a differenced white sequence (power rising
            // towards Nyquist) plus a flat one.
            let white = unit.sample(rng);
            let vibration =
                model.texture * envelope * ((white - prev_white[c]) / SQRT_2 + unit.sample(rng));
            prev_white[c] = white;
            ch[i] = sample[c] + vibration + noise.sample(rng);
        }
    }
    Waveform::new(SYNTH_RATE_HZ, channels).expect("equal-length channels")
}

/// Seeded stand-in corpus: `n_subjects` recordings at 100 Hz with one
/// segment per activity. Subject `i` depends only on `(seed, i)`.
pub fn synth_corpus(
    n_subjects: usize,
    seed: u64,
    schema: &ActivitySchema,
) -> Vec<SubjectRecording> {
    let models: Vec<ClassModel> = schema
        .names()
        .iter()
        .enumerate()
        .map(|(i, n)| class_model(n, i))
        .collect();
    (0..n_subjects)
        .map(|s| {
            let mut rng = rng_for(seed, &[s as u64]);
            let subject = Subject {
                amplitude: rng.random_range(0.8..1.2),
                noise_scale: rng.random_range(0.7..1.5),
                tilt: rng.random_range(-0.15..0.15),
            };
            let segments = models
                .iter()
                .enumerate()
                .map(|(a, model)| {
                    let mut seg_rng = rng_for(seed, &[s as u64, a as u64 + 1]);
                    Segment {
                        activity: a,
                        wave: segment(model, &subject, &mut seg_rng),
                    }
                })
                .collect();
            SubjectRecording {
                subject_id: format!("s{s:03}"),
                native_rate_hz: SYNTH_RATE_HZ,
                segments,
            }
        })
        .collect()
}
