use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_ACTIVITIES: [&str; 6] = ["stay", "walk", "jog", "skip", "stUp", "stDown"];
pub const DEFAULT_RATES_HZ: [f64; 5] = [100.0, 50.0, 25.0, 12.5, 6.25];
pub const UNKNOWN_RATES_HZ: [f64; 5] = [33.3, 20.0, 10.0, 5.0, 4.0];

/// Ordered activity class names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ActivitySchema {
    names: Vec<String>,
}

impl ActivitySchema {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return invalid(format!(
                "activity schema needs at least 2 classes, got {}",
                names.len()
            ));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return invalid(format!("duplicate activity name `{n}`"));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Class count M.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown activity `{name}`")))
    }
}

impl Default for ActivitySchema {
    fn default() -> Self {
        Self {
            names: DEFAULT_ACTIVITIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TryFrom<Vec<String>> for ActivitySchema {
    type Error = crate::Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActivitySchema> for Vec<String> {
    fn from(s: ActivitySchema) -> Self {
        s.names
    }
}

/// Training sampling rates in strictly decreasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateSchema {
    rates_hz: Vec<f64>,
}

impl RateSchema {
    pub fn new(rates_hz: Vec<f64>) -> Result<Self> {
        if rates_hz.is_empty() {
            return invalid("rate schema is empty");
        }
        if rates_hz.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return invalid(format!("rates must be positive: {rates_hz:?}"));
        }
        if rates_hz.windows(2).any(|w| w[1] >= w[0]) {
            return invalid(format!("rates must be strictly decreasing: {rates_hz:?}"));
        }
        Ok(Self { rates_hz })
    }

    pub fn rates_hz(&self) -> &[f64] {
        &self.rates_hz
    }

    /// Rate count K.
    pub fn len(&self) -> usize {
        self.rates_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates_hz.is_empty()
    }

    pub fn rate(&self, index: usize) -> f64 {
        self.rates_hz[index]
    }

    /// Index of the schema rate closest to `rate_hz`; the higher rate wins
    /// an exact tie.
    pub fn nearest_index(&self, rate_hz: f64) -> usize {
        let mut best = 0;
        for (i, r) in self.rates_hz.iter().enumerate() {
            if (r - rate_hz).abs() < (self.rates_hz[best] - rate_hz).abs() {
                best = i;
            }
        }
        best
    }
}

impl Default for RateSchema {
    fn default() -> Self {
        Self {
            rates_hz: DEFAULT_RATES_HZ.to_vec(),
        }
    }
}

impl TryFrom<Vec<f64>> for RateSchema {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RateSchema> for Vec<f64> {
    fn from(s: RateSchema) -> Self {
        s.rates_hz
    }
}
