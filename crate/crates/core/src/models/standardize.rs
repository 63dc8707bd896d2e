use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score statistics fitted on training vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn standardize_fit(vectors: &[Vec<f64>]) -> Result<Standardizer> {
    if vectors.len() < 2 {
        return invalid(format!(
            "standardization needs at least 2 vectors, got {}",
            vectors.len()
        ));
    }
    let width = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != width) {
        return shape_err(format!("vector width {} differs from {width}", v.len()));
    }
    let n = vectors.len() as f64;
    let mut mean = Vec::with_capacity(width);
    let mut std = Vec::with_capacity(width);
    for j in 0..width {
        // Offset by the first value so a constant column has an exact mean.
        let s0 = vectors[0][j];
        let mu = s0 + vectors.iter().map(|v| v[j] - s0).sum::<f64>() / n;
        let var = vectors.iter().map(|v| (v[j] - mu).powi(2)).sum::<f64>() / n;
        mean.push(mu);
        std.push(var.sqrt().max(STD_FLOOR));
    }
    Ok(Standardizer { mean, std })
}

impl Standardizer {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.width() {
            return shape_err(format!(
                "vector width {} but standardizer fitted on {}",
                v.len(),
                self.width()
            ));
        }
        Ok(v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn apply_all(&self, vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        vectors.iter().map(|v| self.apply(v)).collect()
    }
}

/// Same as [`Standardizer::apply`].
pub fn standardize_apply(v: &[f64], stats: &Standardizer) -> Result<Vec<f64>> {
    stats.apply(v)
}
