use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ActivitySchema, RateSchema, SplitSpec, SubjectRecording};
use crate::error::{invalid, shape_err, Error, Result};
use crate::grad::Tensor;
use crate::sigproc::{
    interpolate_to_length, resample, trim_and_frame, Waveform, FRAME_LEN, TRIM_SECONDS,
};

pub const FRAME_CHANNELS: usize = 3;

/// One model input: a 3×256 window with its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    /// Channel-major samples, `FRAME_CHANNELS * FRAME_LEN` values.
    pub data: Vec<f64>,
    pub activity: usize,
    pub rate_index: usize,
    /// Rate the frame simulates.
    pub nominal_rate_hz: f64,
    /// Rate of the 256-sample grid the data is stored on.
    pub grid_rate_hz: f64,
    pub subject_id: String,
}

impl LabeledFrame {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * FRAME_LEN..(c + 1) * FRAME_LEN]
    }

    pub fn to_waveform(&self) -> Waveform {
        let channels = (0..FRAME_CHANNELS)
            .map(|c| self.channel(c).to_vec())
            .collect();
        Waveform::new(self.grid_rate_hz, channels).expect("frame channels have equal length")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Mixed,
    Unified,
    Augmented,
    Test,
}

/// Model-ready frames plus the schemas their labels index into.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    provenance: Provenance,
    activities: ActivitySchema,
    rates: RateSchema,
    frames: Vec<LabeledFrame>,
}

/// Batched tensors for a subset of a bundle.
pub struct Batch {
    /// `[n, 3, 256]`.
    pub inputs: Tensor,
    /// One-hot `[n, M]`.
    pub activity: Tensor,
    /// One-hot `[n, K]`.
    pub rate: Tensor,
}

impl DatasetBundle {
    pub fn new(
        provenance: Provenance,
        activities: ActivitySchema,
        rates: RateSchema,
        frames: Vec<LabeledFrame>,
    ) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            if f.data.len() != FRAME_CHANNELS * FRAME_LEN {
                return shape_err(format!("frame {i} has {} values", f.data.len()));
            }
            if f.activity >= activities.len() {
                return invalid(format!("frame {i}: activity {} out of range", f.activity));
            }
            if f.rate_index != rates.nearest_index(f.nominal_rate_hz) {
                return invalid(format!(
                    "frame {i}: rate label {} does not match nominal {} Hz",
                    f.rate_index, f.nominal_rate_hz
                ));
            }
        }
        Ok(Self {
            provenance,
            activities,
            rates,
            frames,
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn activities(&self) -> &ActivitySchema {
        &self.activities
    }

    pub fn rates(&self) -> &RateSchema {
        &self.rates
    }

    pub fn frames(&self) -> &[LabeledFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames per rate label.
    pub fn rate_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.rates.len()];
        for f in &self.frames {
            counts[f.rate_index] += 1;
        }
        counts
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let n = indices.len();
        let (m, k) = (self.activities.len(), self.rates.len());
        let mut inputs = Vec::with_capacity(n * FRAME_CHANNELS * FRAME_LEN);
        let mut activity = vec![0.0; n * m];
        let mut rate = vec![0.0; n * k];
        for (row, &i) in indices.iter().enumerate() {
            let f = &self.frames[i];
            inputs.extend_from_slice(&f.data);
            activity[row * m + f.activity] = 1.0;
            rate[row * k + f.rate_index] = 1.0;
        }
        Batch {
            inputs: Tensor::new(vec![n, FRAME_CHANNELS, FRAME_LEN], inputs).expect("batch shape"),
            activity: Tensor::new(vec![n, m], activity).expect("batch shape"),
            rate: Tensor::new(vec![n, k], rate).expect("batch shape"),
        }
    }
}

/// Trimming and windowing applied to native-rate recordings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FramingOptions {
    pub trim_s: f64,
    pub frame: usize,
    pub stride: usize,
    /// Keep at most this many evenly spaced frames per segment.
    pub max_frames_per_segment: Option<usize>,
}

impl Default for FramingOptions {
    fn default() -> Self {
        Self {
            trim_s: TRIM_SECONDS,
            frame: FRAME_LEN,
            stride: FRAME_LEN,
            max_frames_per_segment: None,
        }
    }
}

/// Evenly spaced subset of `0..count` of size at most `cap`.
fn spread(count: usize, cap: Option<usize>) -> Vec<usize> {
    match cap {
        Some(cap) if cap < count => (0..cap).map(|i| i * count / cap).collect(),
        _ => (0..count).collect(),
    }
}

/// Native-rate frames of one recording as `(activity, frame)`.
fn native_frames(rec: &SubjectRecording, framing: &FramingOptions) -> Vec<(usize, Waveform)> {
    let mut out = Vec::new();
    for seg in &rec.segments {
        let frames = trim_and_frame(&seg.wave, framing.trim_s, framing.frame, framing.stride);
        for i in spread(frames.len(), framing.max_frames_per_segment) {
            out.push((seg.activity, frames[i].clone()));
        }
    }
    out
}

/// Simulate `rate_hz` on one frame and bring it back to 256 samples.
pub fn frame_at_rate(frame: &Waveform, rate_hz: f64) -> Result<Waveform> {
    interpolate_to_length(&resample(frame, rate_hz)?, FRAME_LEN)
}

fn labeled(
    wave: &Waveform,
    activity: usize,
    nominal: f64,
    rates: &RateSchema,
    subject: &str,
) -> LabeledFrame {
    LabeledFrame {
        data: wave.flatten(),
        activity,
        rate_index: rates.nearest_index(nominal),
        nominal_rate_hz: nominal,
        grid_rate_hz: wave.rate_hz(),
        subject_id: subject.to_string(),
    }
}

fn index(recordings: &[SubjectRecording]) -> HashMap<&str, &SubjectRecording> {
    recordings
        .iter()
        .map(|r| (r.subject_id.as_str(), r))
        .collect()
}

fn lookup<'r>(map: &HashMap<&str, &'r SubjectRecording>, id: &str) -> Result<&'r SubjectRecording> {
    map.get(id)
        .copied()
        .ok_or_else(|| Error::MissingSubject(id.to_string()))
}

fn frames_for<'a>(
    map: &HashMap<&str, &SubjectRecording>,
    ids: impl Iterator<Item = (&'a String, f64)>,
    rates: &RateSchema,
    framing: &FramingOptions,
) -> Result<Vec<LabeledFrame>> {
    let mut out = Vec::new();
    for (id, rate) in ids {
        let rec = lookup(map, id)?;
        for (activity, frame) in native_frames(rec, framing) {
            out.push(labeled(
                &frame_at_rate(&frame, rate)?,
                activity,
                rate,
                rates,
                id,
            ));
        }
    }
    Ok(out)
}

/// Mixed-rate training set: group `g` appears only at schema rate `g`.
pub fn build_mixed_training(
    recordings: &[SubjectRecording],
    split: &SplitSpec,
    activities: &ActivitySchema,
    rates: &RateSchema,
    framing: &FramingOptions,
) -> Result<DatasetBundle> {
    if split.groups.len() != rates.len() {
        return invalid(format!(
            "{} subject groups for {} rates",
            split.groups.len(),
            rates.len()
        ));
    }
    let map = index(recordings);
    let ids = split
        .groups
        .iter()
        .enumerate()
        .flat_map(|(g, ids)| ids.iter().map(move |id| (id, rates.rate(g))));
    let frames = frames_for(&map, ids, rates, framing)?;
    DatasetBundle::new(Provenance::Mixed, activities.clone(), rates.clone(), frames)
}

/// Training set with every group converted to the single rate `rate_hz`.
pub fn build_unified_training(
    recordings: &[SubjectRecording],
    split: &SplitSpec,
    rate_hz: f64,
    activities: &ActivitySchema,
    rates: &RateSchema,
    framing: &FramingOptions,
) -> Result<DatasetBundle> {
    let map = index(recordings);
    let frames = frames_for(
        &map,
        split.train_ids().map(|id| (id, rate_hz)),
        rates,
        framing,
    )?;
    DatasetBundle::new(
        Provenance::Unified,
        activities.clone(),
        rates.clone(),
        frames,
    )
}

/// Test subjects at one evaluation rate.
#[derive(Clone, Debug)]
pub struct TestSet {
    pub rate_hz: f64,
    pub bundle: DatasetBundle,
}

/// The same test subjects converted to each requested rate.
pub fn build_test_sets(
    recordings: &[SubjectRecording],
    split: &SplitSpec,
    test_rates: &[f64],
    activities: &ActivitySchema,
    rates: &RateSchema,
    framing: &FramingOptions,
) -> Result<Vec<TestSet>> {
    let map = index(recordings);
    let mut native = Vec::new();
    for id in &split.test {
        let rec = lookup(&map, id)?;
        native.extend(
            native_frames(rec, framing)
                .into_iter()
                .map(|(a, f)| (id, a, f)),
        );
    }
    test_rates
        .iter()
        .map(|&rate| {
            if !(rate.is_finite() && rate > 0.0) {
                return invalid(format!("test rate must be positive, got {rate}"));
            }
            let frames = native
                .iter()
                .map(|(id, a, f)| Ok(labeled(&frame_at_rate(f, rate)?, *a, rate, rates, id)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TestSet {
                rate_hz: rate,
                bundle: DatasetBundle::new(
                    Provenance::Test,
                    activities.clone(),
                    rates.clone(),
                    frames,
                )?,
            })
        })
        .collect()
}

/// Keep every frame and add a copy at each schema rate strictly below the
/// frame's own, converted from the frame as stored.
pub fn augment_downsample(bundle: &DatasetBundle) -> Result<DatasetBundle> {
    let rates = bundle.rates();
    let mut frames = Vec::new();
    for f in bundle.frames() {
        frames.push(f.clone());
        let wave = f.to_waveform();
        for j in f.rate_index + 1..rates.len() {
            let lower = rates.rate(j);
            frames.push(labeled(
                &frame_at_rate(&wave, lower)?,
                f.activity,
                lower,
                rates,
                &f.subject_id,
            ));
        }
    }
    DatasetBundle::new(
        Provenance::Augmented,
        bundle.activities().clone(),
        rates.clone(),
        frames,
    )
}
