use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{invalid, Result};

pub const DEFAULT_TAPS: usize = 63;

/// Symmetric low-pass FIR filter with unit DC gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirFilter {
    taps: Vec<f64>,
    cutoff_hz: f64,
    design_rate_hz: f64,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn design_rate_hz(&self) -> f64 {
        self.design_rate_hz
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc low-pass design.
pub fn design_fir_lowpass(cutoff_hz: f64, rate_hz: f64, n_taps: usize) -> Result<FirFilter> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return invalid(format!("design rate must be positive, got {rate_hz}"));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
        return invalid(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            rate_hz / 2.0
        ));
    }
    if n_taps < 3 || n_taps % 2 == 0 {
        return invalid(format!("tap count must be odd and >= 3, got {n_taps}"));
    }
    let fc = cutoff_hz / rate_hz;
    let center = (n_taps - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            // Evaluate on the left half only so the taps are exactly symmetric.
            let i = i.min(n_taps - 1 - i);
            let window = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n_taps - 1) as f64).cos();
            2.0 * fc * sinc(2.0 * fc * (i as f64 - center)) * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(FirFilter {
        taps,
        cutoff_hz,
        design_rate_hz: rate_hz,
    })
}

/// Mirror an out-of-range index back into `[0, len)` without repeating the
/// edge sample.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

pub(crate) fn filter_channel(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    (0..x.len())
        .map(|n| {
            let xn = x[n];
            // Written as deviations from x[n] so a constant input comes out
            // bit-exact regardless of rounding in the tap sum.
            let mut acc = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                let idx = reflect(n as isize + k as isize - half, x.len());
                acc += h * (x[idx] - xn);
            }
            xn + acc
        })
        .collect()
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Zero-phase filtering of every channel with reflect padding at both ends.
pub fn apply_fir(wave: &Waveform, filter: &FirFilter) -> Result<Waveform> {
    if !same_rate(wave.rate_hz(), filter.design_rate_hz) {
        return invalid(format!(
            "filter designed at {} Hz applied to a {} Hz waveform",
            filter.design_rate_hz,
            wave.rate_hz()
        ));
    }
    if wave.is_empty() {
        return invalid("cannot filter an empty waveform");
    }
    Ok(wave.map_channels(wave.rate_hz(), |c| filter_channel(c, &filter.taps)))
}
