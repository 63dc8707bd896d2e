use crate::error::{invalid, shape_err, Result};

pub const DEFAULT_K: usize = 5;

/// Brute-force Euclidean k-nearest-neighbour classifier.
#[derive(Clone, Debug)]
pub struct Knn {
    k: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
}

pub fn knn_fit(vectors: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> Result<Knn> {
    if vectors.is_empty() {
        return invalid("kNN needs at least one training vector");
    }
    if vectors.len() != labels.len() {
        return shape_err(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        ));
    }
    if k == 0 || k > vectors.len() {
        return invalid(format!("k = {k} must be in 1..={}", vectors.len()));
    }
    let width = vectors[0].len();
    if vectors.iter().any(|v| v.len() != width) {
        return shape_err("training vectors differ in width");
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    Ok(Knn {
        k,
        points: vectors,
        labels,
        num_classes,
    })
}

impl Knn {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority label among the k nearest points. Equal distances order by
    /// label; tied votes go to the smaller mean distance, then the lower
    /// label.
    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        if query.len() != self.points[0].len() {
            return shape_err(format!(
                "query width {} vs {}",
                query.len(),
                self.points[0].len()
            ));
        }
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| {
                let d2: f64 = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), l)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0usize; self.num_classes];
        let mut sums = vec![0.0; self.num_classes];
        for &(d, l) in &dist[..self.k] {
            votes[l] += 1;
            sums[l] += d;
        }
        let mut best = None::<usize>;
        for c in 0..self.num_classes {
            if votes[c] == 0 {
                continue;
            }
            best = Some(match best {
                None => c,
                Some(b) => {
                    let (mc, mb) = (sums[c] / votes[c] as f64, sums[b] / votes[b] as f64);
                    if votes[c] > votes[b] || (votes[c] == votes[b] && mc < mb) {
                        c
                    } else {
                        b
                    }
                }
            });
        }
        Ok(best.expect("k >= 1 guarantees a vote"))
    }

    pub fn predict_all(&self, queries: &[Vec<f64>]) -> Result<Vec<usize>> {
        queries.iter().map(|q| self.predict(q)).collect()
    }
}
