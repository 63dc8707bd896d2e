use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_err, Result};

/// Counts with rows = truth, columns = prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            counts: vec![vec![0; m]; m],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }
}

pub fn confusion(
    predictions: &[usize],
    truths: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return shape_err(format!(
            "{} predictions vs {} truths",
            predictions.len(),
            truths.len()
        ));
    }
    let mut cm = ConfusionMatrix::zeros(num_classes);
    for (&p, &t) in predictions.iter().zip(truths) {
        if p >= num_classes || t >= num_classes {
            return invalid(format!(
                "label pair ({t}, {p}) outside {num_classes} classes"
            ));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall, and F; undefined ratios count as 0.
pub fn f_measure(cm: &ConfusionMatrix) -> Vec<ClassScore> {
    let m = cm.num_classes();
    (0..m)
        .map(|c| {
            let tp = cm.counts[c][c];
            let predicted: u64 = (0..m).map(|r| cm.counts[r][c]).sum();
            let actual: u64 = cm.counts[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            let f = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassScore {
                precision,
                recall,
                f_measure: f,
            }
        })
        .collect()
}

/// Share of the most frequent label; 0 for no labels.
pub fn majority_share(labels: &[usize], num_classes: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    *counts.iter().max().expect("num_classes >= 1") as f64 / labels.len() as f64
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                std: 0.0,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let cm = confusion(&[0, 1, 1], &[0, 0, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(confusion(&[], &[], 3).unwrap(), ConfusionMatrix::zeros(3));
        assert!(confusion(&[2], &[0], 2).is_err());

        let diag = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert!(f_measure(&diag).iter().all(|s| s.f_measure == 1.0));

        // class 0: TP 1, FP 1, FN 1
        let cm = confusion(&[0, 0, 1], &[0, 1, 0], 3).unwrap();
        let s = f_measure(&cm)[0];
        assert_eq!((s.precision, s.recall, s.f_measure), (0.5, 0.5, 0.5));
        assert_eq!(f_measure(&cm)[2].f_measure, 0.0);
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std, m.n), (2.0, 2f64.sqrt(), 2));
        assert_eq!(MeanStd::of(&[5.0]).std, 0.0);
    }
}
