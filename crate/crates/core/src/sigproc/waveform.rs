use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

/// Multi-channel time series at a fixed sampling rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    rate_hz: f64,
    channels: Vec<Vec<f64>>,
}

impl Waveform {
    pub fn new(rate_hz: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return invalid(format!("sampling rate must be positive, got {rate_hz}"));
        }
        if channels.is_empty() {
            return shape_err("waveform needs at least one channel");
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().position(|c| c.len() != len) {
            return shape_err(format!(
                "channel {bad} has {} samples, channel 0 has {len}",
                channels[bad].len()
            ));
        }
        Ok(Self { rate_hz, channels })
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.rate_hz
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Waveform {
        Waveform {
            rate_hz: self.rate_hz,
            channels: self
                .channels
                .iter()
                .map(|c| c[start..end].to_vec())
                .collect(),
        }
    }

    /// Channel-major copy of all samples.
    pub fn flatten(&self) -> Vec<f64> {
        self.channels.concat()
    }

    pub(crate) fn map_channels(&self, rate_hz: f64, f: impl Fn(&[f64]) -> Vec<f64>) -> Waveform {
        Waveform {
            rate_hz,
            channels: self.channels.iter().map(|c| f(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels_and_bad_rates() {
        assert!(Waveform::new(100.0, vec![vec![0.0; 3], vec![0.0; 2]]).is_err());
        assert!(Waveform::new(0.0, vec![vec![0.0; 3]]).is_err());
        assert!(Waveform::new(f64::NAN, vec![vec![0.0; 3]]).is_err());
        let w = Waveform::new(50.0, vec![vec![1.0, 2.0]; 3]).unwrap();
        assert_eq!((w.len(), w.num_channels()), (2, 3));
        assert_eq!(w.duration_s(), 0.04);
    }
}
