//! Finite-difference gradient checking.

use rand::seq::index::sample;

use super::{backward, Tape, Tensor, Var};
use crate::error::Result;
use crate::seed::rng_for;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub h: f64,
    /// Probe at most this many coordinates per input tensor (all when `None`).
    pub max_coords: Option<usize>,
    /// Seed for coordinate sampling.
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            h: 1e-6,
            max_coords: None,
            seed: 0,
        }
    }
}

/// Per-input comparison of analytic and numeric gradients.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// `‖analytic − numeric‖ / (‖analytic‖ + ‖numeric‖)` over the probed
    /// coordinates of each input; zero when both norms vanish.
    pub relative_errors: Vec<f64>,
    pub probed: usize,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.relative_errors.iter().cloned().fold(0.0, f64::max)
    }
}

fn eval_loss<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t, true)).collect();
    let loss = f(&mut tape, &vars)?;
    tape.value(loss).item()
}

/// Compare gradients of the scalar built by `f` against central
/// differences. `f` receives one trainable tape variable per input and must
/// be deterministic (reseed any dropout inside it).
pub fn grad_check<F>(f: F, inputs: &[Tensor], opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Result<Var>,
{
    let analytic: Vec<Tensor> = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t, true)).collect();
        let loss = f(&mut tape, &vars)?;
        let grads = backward(&tape, loss)?;
        vars.iter().map(|&v| grads.wrt(&tape, v)).collect()
    };

    let mut work = inputs.to_vec();
    let mut relative_errors = Vec::with_capacity(inputs.len());
    let mut probed = 0;
    for (i, grad) in analytic.iter().enumerate() {
        let n = inputs[i].numel();
        let coords: Vec<usize> = match opts.max_coords {
            Some(k) if k < n => {
                let mut rng = rng_for(opts.seed, &[i as u64]);
                let mut c = sample(&mut rng, n, k).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..n).collect(),
        };
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for &c in &coords {
            let orig = work[i].data()[c];
            work[i].data_mut()[c] = orig + opts.h;
            let plus = eval_loss(&f, &work)?;
            work[i].data_mut()[c] = orig - opts.h;
            let minus = eval_loss(&f, &work)?;
            work[i].data_mut()[c] = orig;
            let numeric = (plus - minus) / (2.0 * opts.h);
            let a = grad.data()[c];
            diff += (a - numeric).powi(2);
            na += a * a;
            nn += numeric * numeric;
        }
        probed += coords.len();
        let denom = na.sqrt() + nn.sqrt();
        relative_errors.push(if denom == 0.0 {
            0.0
        } else {
            diff.sqrt() / denom
        });
    }
    Ok(GradCheckReport {
        relative_errors,
        probed,
    })
}
