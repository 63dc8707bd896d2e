use super::fir::{design_fir_lowpass, filter_channel, DEFAULT_TAPS};
use super::Waveform;
use crate::error::{invalid, Result};

/// Cutoff as a fraction of the destination rate.
pub const CUTOFF_FRACTION: f64 = 0.45;

/// Whether downsampling runs the anti-aliasing filter first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AntiAlias {
    Filter,
    /// Thinning by interpolation alone; aliases. Kept for comparisons.
    Bypass,
}

/// Tap count for a `src -> dst` decimation: 63 up to a 2:1 ratio, growing
/// with the ratio so the transition band stays a fixed fraction of `dst`.
pub fn taps_for_ratio(src_hz: f64, dst_hz: f64) -> usize {
    let n = (DEFAULT_TAPS as f64 / 2.0 * src_hz / dst_hz).ceil() as usize;
    (n | 1).max(DEFAULT_TAPS)
}

/// Output length for `len` samples converted from `src_hz` to `dst_hz`.
pub fn resampled_len(len: usize, src_hz: f64, dst_hz: f64) -> usize {
    if len == 0 {
        return 0;
    }
    // Small guard so exact ratios like 255 * 0.5 are not lost to rounding.
    ((len - 1) as f64 * dst_hz / src_hz + 1e-9).floor() as usize + 1
}

fn lerp_at(x: &[f64], pos: f64) -> f64 {
    let last = x.len() - 1;
    if pos <= 0.0 {
        return x[0];
    }
    if pos >= last as f64 {
        return x[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let (a, b) = (x[i], x[i + 1]);
    a + (b - a) * frac
}

/// Convert to `dst_hz`, low-pass filtering first when reducing the rate.
pub fn resample(wave: &Waveform, dst_hz: f64) -> Result<Waveform> {
    resample_with(wave, dst_hz, AntiAlias::Filter)
}

pub fn resample_with(wave: &Waveform, dst_hz: f64, anti_alias: AntiAlias) -> Result<Waveform> {
    if !(dst_hz.is_finite() && dst_hz > 0.0) {
        return invalid(format!("destination rate must be positive, got {dst_hz}"));
    }
    if wave.is_empty() {
        return invalid("cannot resample an empty waveform");
    }
    let src_hz = wave.rate_hz();
    let out_len = resampled_len(wave.len(), src_hz, dst_hz);
    let step = src_hz / dst_hz;
    let taps = if dst_hz < src_hz && anti_alias == AntiAlias::Filter {
        let filter = design_fir_lowpass(
            CUTOFF_FRACTION * dst_hz,
            src_hz,
            taps_for_ratio(src_hz, dst_hz),
        )?;
        Some(filter.taps().to_vec())
    } else {
        None
    };
    Ok(wave.map_channels(dst_hz, |c| {
        let filtered;
        let source = match &taps {
            Some(t) => {
                filtered = filter_channel(c, t);
                &filtered[..]
            }
            None => c,
        };
        (0..out_len)
            .map(|i| lerp_at(source, i as f64 * step))
            .collect()
    }))
}

/// Linear interpolation onto `n` evenly spaced points spanning the original
/// index range; endpoints are kept exactly.
pub fn interpolate_to_length(wave: &Waveform, n: usize) -> Result<Waveform> {
    if wave.len() < 2 {
        return invalid(format!(
            "interpolation needs at least 2 samples, got {}",
            wave.len()
        ));
    }
    if n < 2 {
        return invalid(format!("target length must be at least 2, got {n}"));
    }
    if wave.len() == n {
        return Ok(wave.clone());
    }
    let last = (wave.len() - 1) as f64;
    let denom = (n - 1) as f64;
    // The rate scales with the sample count so the time span is unchanged.
    let rate = wave.rate_hz() * denom / last;
    Ok(wave.map_channels(rate, |c| {
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    c[c.len() - 1]
                } else {
                    lerp_at(c, i as f64 * last / denom)
                }
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_schedule() {
        assert_eq!(taps_for_ratio(100.0, 50.0), 63);
        assert_eq!(taps_for_ratio(100.0, 80.0), 63);
        assert_eq!(taps_for_ratio(100.0, 25.0), 127);
        assert_eq!(taps_for_ratio(100.0, 6.25), 505);
    }

    #[test]
    fn lengths_for_default_rates() {
        for (dst, want) in [(50.0, 128), (25.0, 64), (12.5, 32), (6.25, 16)] {
            assert_eq!(resampled_len(256, 100.0, dst), want);
        }
        assert_eq!(resampled_len(1, 100.0, 3.0), 1);
    }

    #[test]
    fn ramp_interpolation() {
        let w = Waveform::new(1.0, vec![vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let out = interpolate_to_length(&w, 7).unwrap();
        assert_eq!(out.channel(0), &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        assert!(interpolate_to_length(&Waveform::new(1.0, vec![vec![1.0]]).unwrap(), 4).is_err());
    }

    #[test]
    fn upsampling_is_pure_interpolation() {
        let w = Waveform::new(2.0, vec![vec![0.0, 2.0, 4.0]]).unwrap();
        let out = resample(&w, 4.0).unwrap();
        assert_eq!(out.channel(0), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(out.rate_hz(), 4.0);
    }
}
