//! Bias-corrected Adam.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ParamGrads, ParamSet, Tensor};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    t: u64,
    first: BTreeMap<String, Tensor>,
    second: BTreeMap<String, Tensor>,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros: BTreeMap<String, Tensor> = params
            .iter()
            .map(|(id, t)| (id.clone(), Tensor::zeros(t.shape())))
            .collect();
        Self {
            config,
            t: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    /// Number of applied steps.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self, id: &str) -> Option<&Tensor> {
        self.first.get(id)
    }

    pub fn second_moment(&self, id: &str) -> Option<&Tensor> {
        self.second.get(id)
    }

    pub(crate) fn restore(
        &mut self,
        t: u64,
        first: BTreeMap<String, Tensor>,
        second: BTreeMap<String, Tensor>,
    ) {
        self.t = t;
        self.first = first;
        self.second = second;
    }
}

/// Apply one Adam update to `params` in place.
pub fn adam_step(params: &mut ParamSet, grads: &ParamGrads, state: &mut AdamState) -> Result<()> {
    if grads.len() != params.len() || !params.ids().all(|id| grads.contains_key(id)) {
        let have: Vec<_> = grads.keys().collect();
        let want: Vec<_> = params.ids().collect();
        return invalid(format!(
            "gradient keys {have:?} do not match parameters {want:?}"
        ));
    }
    for (id, g) in grads {
        let p = params.get(id).expect("checked above");
        if !p.same_shape(g) || state.first.get(id).map(|m| m.shape()) != Some(p.shape()) {
            return invalid(format!("gradient/moment shape mismatch for `{id}`"));
        }
    }

    state.t += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let inv_bc2 = 1.0 / (1.0 - beta2.powi(state.t as i32));
    let step = lr / bc1;
    for (id, g) in grads {
        let p = params.get_mut(id).expect("checked above");
        let m = state.first.get_mut(id).expect("checked above");
        let v = state.second.get_mut(id).expect("checked above");
        for (((p, m), v), &g) in p
            .data_mut()
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g.data())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            // lr·m̂/(√v̂ + ε) with the bias corrections folded into scalars.
            *p -= step * *m / ((*v * inv_bc2).sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::Role;

    fn scalar_set(v: f64) -> ParamSet {
        let mut s = ParamSet::new(Role::Encoder);
        s.insert("theta", Tensor::from_vec(vec![v])).unwrap();
        s
    }

    fn grad(v: f64) -> ParamGrads {
        [("theta".to_string(), Tensor::from_vec(vec![v]))].into()
    }

    #[test]
    fn zero_gradient_leaves_params_and_counts_step() {
        let mut p = scalar_set(0.7);
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut p, &grad(0.0), &mut st).unwrap();
        assert_eq!(p.get("theta").unwrap().data(), &[0.7]);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar_set(0.0);
        let mut st = AdamState::new(AdamConfig::default(), &p);
        adam_step(&mut p, &grad(1.0), &mut st).unwrap();
        let theta = p.get("theta").unwrap().data()[0];
        assert!((theta - (-1e-4 / (1.0 + 1e-8))).abs() < 1e-18);
        assert!((theta + 9.99999999e-5).abs() < 1e-12);
    }

    #[test]
    fn key_mismatch_is_rejected() {
        let mut p = scalar_set(0.0);
        let mut st = AdamState::new(AdamConfig::default(), &p);
        let bad: ParamGrads = [("other".to_string(), Tensor::from_vec(vec![1.0]))].into();
        assert!(adam_step(&mut p, &bad, &mut st).is_err());
        assert_eq!(st.step_count(), 0);
    }
}
