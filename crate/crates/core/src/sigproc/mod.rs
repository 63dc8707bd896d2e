//! Anti-aliased rate conversion, length unification, and framing.

mod fir;
mod frame;
mod resample;
mod waveform;

pub use fir::{apply_fir, design_fir_lowpass, FirFilter, DEFAULT_TAPS};
pub use frame::{trim_and_frame, FRAME_LEN, TRIM_SECONDS};
pub use resample::{
    interpolate_to_length, resample, resample_with, resampled_len, taps_for_ratio, AntiAlias,
    CUTOFF_FRACTION,
};
pub use waveform::Waveform;
