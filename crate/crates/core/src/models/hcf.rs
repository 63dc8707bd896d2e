use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::data::LabeledFrame;

pub const HCF_STATS: usize = 12;
pub const HCF_LEN: usize = 4 * HCF_STATS + 3;

/// Second central moments at or below this count as a constant channel.
const CONSTANT_VAR: f64 = 1e-24;

/// 51 hand-crafted features of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HcfVector(pub [f64; HCF_LEN]);

impl HcfVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub const HCF_STAT_NAMES: [&str; HCF_STATS] = [
    "mean",
    "std",
    "min",
    "max",
    "median",
    "rms",
    "iqr",
    "zcr",
    "skewness",
    "kurtosis",
    "spectral_energy",
    "spectral_entropy",
];

/// Feature names in vector order.
pub fn hcf_names() -> Vec<String> {
    let mut names = Vec::with_capacity(HCF_LEN);
    for ch in ["x", "y", "z", "mag"] {
        for s in HCF_STAT_NAMES {
            names.push(format!("{ch}_{s}"));
        }
    }
    names.extend(["corr_xy", "corr_xz", "corr_yz"].map(String::from));
    names
}

/// Mean computed as an offset from the first sample so constant input
/// yields that constant exactly.
fn mean(x: &[f64]) -> f64 {
    let s0 = x[0];
    s0 + x.iter().map(|v| v - s0).sum::<f64>() / x.len() as f64
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + (sorted[i + 1] - sorted[i]) * frac
    } else {
        sorted[i]
    }
}

struct Spectrum {
    planner: FftPlanner<f64>,
}

impl Spectrum {
    /// Power in bins 1..=n/2 of the centered signal.
    fn power(&mut self, centered: &[f64]) -> Vec<f64> {
        let n = centered.len();
        let fft = self.planner.plan_fft_forward(n);
        let mut buf: Vec<Complex<f64>> = centered.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        buf[1..=n / 2].iter().map(|c| c.norm_sqr()).collect()
    }
}

fn channel_stats(x: &[f64], spectrum: &mut Spectrum) -> [f64; HCF_STATS] {
    let n = x.len() as f64;
    let mu = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let m2 = centered.iter().map(|d| d * d).sum::<f64>() / n;
    let constant = m2 <= CONSTANT_VAR;
    let std = m2.sqrt();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let (zcr, skew, kurt) = if constant {
        (0.0, 0.0, 0.0)
    } else {
        let crossings = centered.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        let m3 = centered.iter().map(|d| d.powi(3)).sum::<f64>() / n;
        let m4 = centered.iter().map(|d| d.powi(4)).sum::<f64>() / n;
        (
            crossings as f64 / (x.len() - 1) as f64,
            m3 / m2.powf(1.5),
            m4 / (m2 * m2) - 3.0,
        )
    };
    let power = if constant {
        vec![0.0]
    } else {
        spectrum.power(&centered)
    };
    let total: f64 = power.iter().sum();
    let energy = total / n;
    let entropy = if total > 0.0 {
        -power
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| {
                let q = p / total;
                q * q.ln()
            })
            .sum::<f64>()
    } else {
        0.0
    };
    [
        mu,
        std,
        sorted[0],
        sorted[sorted.len() - 1],
        quantile(&sorted, 0.5),
        rms,
        quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
        zcr,
        skew,
        kurt,
        energy,
        entropy,
    ]
}

/// Pearson correlation; 0 when either side is constant.
fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    let n = a.len() as f64;
    if saa / n <= CONSTANT_VAR || sbb / n <= CONSTANT_VAR {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// Features from three equal-length acceleration channels.
pub fn hcf_from_channels(x: &[f64], y: &[f64], z: &[f64]) -> HcfVector {
    assert!(
        !x.is_empty() && x.len() == y.len() && y.len() == z.len(),
        "channels must be non-empty and equal length"
    );
    let mag: Vec<f64> = (0..x.len())
        .map(|i| (x[i] * x[i] + y[i] * y[i] + z[i] * z[i]).sqrt())
        .collect();
    let mut spectrum = Spectrum {
        planner: FftPlanner::new(),
    };
    let mut out = [0.0; HCF_LEN];
    for (c, ch) in [x, y, z, &mag[..]].into_iter().enumerate() {
        out[c * HCF_STATS..(c + 1) * HCF_STATS].copy_from_slice(&channel_stats(ch, &mut spectrum));
    }
    out[4 * HCF_STATS] = correlation(x, y);
    out[4 * HCF_STATS + 1] = correlation(x, z);
    out[4 * HCF_STATS + 2] = correlation(y, z);
    HcfVector(out)
}

pub fn hcf_extract(frame: &LabeledFrame) -> HcfVector {
    hcf_from_channels(frame.channel(0), frame.channel(1), frame.channel(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checked_stats() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut sp = Spectrum {
            planner: FftPlanner::new(),
        };
        let s = channel_stats(&x, &mut sp);
        assert_eq!(s[0], 2.5);
        assert!((s[1] - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!((s[2], s[3], s[4]), (1.0, 4.0, 2.5));
        assert!((s[5] - 7.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[6], 1.5);
        // one sign change about the mean over 3 steps
        assert!((s[7] - 1.0 / 3.0).abs() < 1e-15);
        assert!(s[8].abs() < 1e-15);
        assert!((s[9] - (-1.36)).abs() < 1e-12);
    }

    #[test]
    fn names_match_length() {
        assert_eq!(hcf_names().len(), HCF_LEN);
    }
}
