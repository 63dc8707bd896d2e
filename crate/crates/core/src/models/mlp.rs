use rand::seq::SliceRandom;

use super::hcf::HCF_LEN;
use super::network::{argmax_rows, build_head, head, HeadSpec, DROPOUT};
use crate::error::{invalid, shape_err, Result};
use crate::grad::{adam_step, backward, AdamConfig, AdamState, Mode, ParamSet, Role, Tape, Tensor};
use crate::seed::rng_for;

pub const HCF_DNN_HIDDEN: usize = 2000;

/// `51 → 2000 → 2000 → M` with ReLU and dropout 0.5 after each hidden layer.
pub fn hcf_dnn_spec(num_activities: usize) -> HeadSpec {
    HeadSpec {
        d_in: HCF_LEN,
        hidden: vec![HCF_DNN_HIDDEN, HCF_DNN_HIDDEN],
        d_out: num_activities,
        dropout: DROPOUT,
    }
}

/// Fully connected classifier over fixed-width feature vectors.
#[derive(Clone, Debug)]
pub struct DenseClassifier {
    pub spec: HeadSpec,
    pub params: ParamSet,
    pub opt: AdamState,
}

fn to_tensor(rows: &[&Vec<f64>], width: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(rows.len() * width);
    for r in rows {
        if r.len() != width {
            return shape_err(format!("feature width {} vs {width}", r.len()));
        }
        data.extend_from_slice(r);
    }
    Tensor::new(vec![rows.len(), width], data)
}

impl DenseClassifier {
    pub fn new(spec: HeadSpec, seed: u64, adam: AdamConfig) -> Result<Self> {
        let params = build_head(&spec, Role::Classifier, &mut rng_for(seed, &[]))?;
        let opt = AdamState::new(adam, &params);
        Ok(Self { spec, params, opt })
    }

    /// One cross-entropy Adam step on a batch; returns the loss.
    pub fn step(&mut self, x: &Tensor, y: &Tensor, seed: u64) -> Result<f64> {
        let grads = {
            let mut tape = Tape::new();
            let xv = tape.constant_ref(x);
            let p = tape.bind(&self.params, true);
            let logits = head(
                &mut tape,
                &self.spec,
                &p,
                xv,
                Mode::Train,
                &mut rng_for(seed, &[]),
            )?;
            let (loss, _) = tape.softmax_cross_entropy(logits, y)?;
            let mut g = backward(&tape, loss)?;
            (g.collect(&tape, &p), tape.value(loss).item()?)
        };
        adam_step(&mut self.params, &grads.0, &mut self.opt)?;
        Ok(grads.1)
    }

    /// Minibatch training for `epochs` passes with seeded shuffling.
    pub fn fit(
        &mut self,
        features: &[Vec<f64>],
        labels: &[usize],
        epochs: usize,
        batch: usize,
        seed: u64,
    ) -> Result<()> {
        if features.is_empty() || features.len() != labels.len() || batch == 0 {
            return invalid(
                "fit needs matching non-empty features/labels and a positive batch size",
            );
        }
        let m = self.spec.d_out;
        let mut order: Vec<usize> = (0..features.len()).collect();
        for epoch in 0..epochs {
            order.shuffle(&mut rng_for(seed, &[epoch as u64]));
            for (b, chunk) in order.chunks(batch).enumerate() {
                let rows: Vec<&Vec<f64>> = chunk.iter().map(|&i| &features[i]).collect();
                let x = to_tensor(&rows, self.spec.d_in)?;
                let mut y = vec![0.0; chunk.len() * m];
                for (r, &i) in chunk.iter().enumerate() {
                    if labels[i] >= m {
                        return invalid(format!(
                            "label {} out of range for {m} classes",
                            labels[i]
                        ));
                    }
                    y[r * m + labels[i]] = 1.0;
                }
                let y = Tensor::new(vec![chunk.len(), m], y)?;
                self.step(
                    &x,
                    &y,
                    crate::seed::derive_seed(seed, &[epoch as u64, b as u64]),
                )?;
            }
        }
        Ok(())
    }

    /// Eval-mode logits.
    pub fn logits(&self, features: &[Vec<f64>]) -> Result<Tensor> {
        let rows: Vec<&Vec<f64>> = features.iter().collect();
        let x = to_tensor(&rows, self.spec.d_in)?;
        let mut tape = Tape::new();
        let xv = tape.constant_ref(&x);
        let p = tape.bind(&self.params, false);
        let out = head(
            &mut tape,
            &self.spec,
            &p,
            xv,
            Mode::Eval,
            &mut rng_for(0, &[]),
        )?;
        Ok(tape.value(out).clone())
    }

    pub fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(features.len());
        for chunk in features.chunks(256) {
            out.extend(argmax_rows(&self.logits(chunk)?));
        }
        Ok(out)
    }
}
