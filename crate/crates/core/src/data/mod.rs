//! Corpus ingestion and synthesis, subject splits, and rate-simulated
//! training/test bundles.

mod bundle;
mod ingest;
mod schema;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

use crate::sigproc::Waveform;

pub use bundle::{
    augment_downsample, build_mixed_training, build_test_sets, build_unified_training,
    frame_at_rate, Batch, DatasetBundle, FramingOptions, LabeledFrame, Provenance, TestSet,
    FRAME_CHANNELS,
};
pub use ingest::{
    inferred_rate_hz, load_corpus, load_recording_csv, read_manifest, read_samples_csv,
    write_corpus, ManifestEntry,
};
pub use schema::{
    ActivitySchema, RateSchema, DEFAULT_ACTIVITIES, DEFAULT_RATES_HZ, UNKNOWN_RATES_HZ,
};
pub use split::{split_subjects, SplitSpec};
pub use synth::{synth_corpus, SYNTH_RATE_HZ, SYNTH_SECONDS};

/// One activity's signal from one subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub activity: usize,
    pub wave: Waveform,
}

/// All segments of one subject, recorded at a single native rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecording {
    pub subject_id: String,
    pub native_rate_hz: f64,
    pub segments: Vec<Segment>,
}

impl SubjectRecording {
    pub fn empty(subject_id: String, native_rate_hz: f64) -> Self {
        Self {
            subject_id,
            native_rate_hz,
            segments: Vec::new(),
        }
    }
}
