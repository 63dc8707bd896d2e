use super::Waveform;

pub const FRAME_LEN: usize = 256;
pub const TRIM_SECONDS: f64 = 5.0;

/// Drop `trim_s` seconds from each end, then cut non-overlapping-by-default
/// windows of `frame` samples every `stride` samples. Too little data gives
/// an empty result.
pub fn trim_and_frame(wave: &Waveform, trim_s: f64, frame: usize, stride: usize) -> Vec<Waveform> {
    assert!(frame > 0 && stride > 0, "frame and stride must be positive");
    let trim = (trim_s * wave.rate_hz()).round().max(0.0) as usize;
    if wave.len() < 2 * trim + frame {
        return Vec::new();
    }
    let usable = wave.len() - 2 * trim;
    let count = (usable - frame) / stride + 1;
    (0..count)
        .map(|i| {
            let start = trim + i * stride;
            wave.slice(start, start + frame)
        })
        .collect()
}
