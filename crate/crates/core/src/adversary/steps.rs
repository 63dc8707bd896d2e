//! Single-minibatch updates. Each step draws its dropout masks from
//! streams derived from `seed`, one stream per head and stage, so a
//! conventional step and an adversarial step with λ = 0 see identical
//! classifier masks.

use super::config::LossBreakdown;
use crate::data::Batch;
use crate::error::{invalid, Result};
use crate::grad::{adam_step, backward, Mode, Tape};
use crate::models::{encode, head, ModelBundle};
use crate::seed::rng_for;

const CLASSIFIER_STREAM: u64 = 0;
const ADVERSARY_STREAM: u64 = 1;
const DISCRIMINATOR_STREAM: u64 = 2;

fn check_batch(batch: &Batch) -> Result<()> {
    if batch.inputs.dim(0) == 0 {
        return invalid("empty minibatch");
    }
    Ok(())
}

/// Update θ_E and θ_C on `L = L_CE − λ·L_D`. The discriminator is applied
/// behind a gradient-reversal node, so its loss pushes the encoder away
/// from rate-identifiable features; θ_D itself is read-only here.
pub fn step_main(
    bundle: &mut ModelBundle,
    batch: &Batch,
    lambda: f64,
    seed: u64,
) -> Result<LossBreakdown> {
    check_batch(batch)?;
    let c_spec = bundle.spec.classifier()?;
    let d_spec = bundle.spec.discriminator()?;
    let (g_enc, g_cls, breakdown) = {
        let mut tape = Tape::new();
        let x = tape.constant_ref(&batch.inputs);
        let e = tape.bind(&bundle.encoder, true);
        let c = tape.bind(&bundle.classifier, true);
        let d = tape.bind(&bundle.discriminator, false);
        let z = encode(&mut tape, &bundle.spec.encoder, &e, x)?;
        let act = head(
            &mut tape,
            &c_spec,
            &c,
            z,
            Mode::Train,
            &mut rng_for(seed, &[CLASSIFIER_STREAM]),
        )?;
        let reversed = tape.grad_reverse(z, lambda);
        let rate = head(
            &mut tape,
            &d_spec,
            &d,
            reversed,
            Mode::Train,
            &mut rng_for(seed, &[ADVERSARY_STREAM]),
        )?;
        let (l_ce, _) = tape.softmax_cross_entropy(act, &batch.activity)?;
        let (l_d, _) = tape.softmax_cross_entropy(rate, &batch.rate)?;
        // The reversal node already carries −λ, so the recorded objective
        // is the plain sum.
        let objective = tape.lincomb(&[(l_ce, 1.0), (l_d, 1.0)])?;
        let mut grads = backward(&tape, objective)?;
        let breakdown =
            LossBreakdown::new(tape.value(l_ce).item()?, tape.value(l_d).item()?, lambda);
        (
            grads.collect(&tape, &e),
            grads.collect(&tape, &c),
            breakdown,
        )
    };
    adam_step(&mut bundle.encoder, &g_enc, &mut bundle.opt_encoder)?;
    adam_step(&mut bundle.classifier, &g_cls, &mut bundle.opt_classifier)?;
    Ok(breakdown)
}

/// Conventional cross-entropy update of θ_E and θ_C; returns `L_CE`.
pub fn step_plain(bundle: &mut ModelBundle, batch: &Batch, seed: u64) -> Result<f64> {
    check_batch(batch)?;
    let c_spec = bundle.spec.classifier()?;
    let (g_enc, g_cls, l_ce) = {
        let mut tape = Tape::new();
        let x = tape.constant_ref(&batch.inputs);
        let e = tape.bind(&bundle.encoder, true);
        let c = tape.bind(&bundle.classifier, true);
        let z = encode(&mut tape, &bundle.spec.encoder, &e, x)?;
        let act = head(
            &mut tape,
            &c_spec,
            &c,
            z,
            Mode::Train,
            &mut rng_for(seed, &[CLASSIFIER_STREAM]),
        )?;
        let (l_ce, _) = tape.softmax_cross_entropy(act, &batch.activity)?;
        let mut grads = backward(&tape, l_ce)?;
        (
            grads.collect(&tape, &e),
            grads.collect(&tape, &c),
            tape.value(l_ce).item()?,
        )
    };
    adam_step(&mut bundle.encoder, &g_enc, &mut bundle.opt_encoder)?;
    adam_step(&mut bundle.classifier, &g_cls, &mut bundle.opt_classifier)?;
    Ok(l_ce)
}

/// Update θ_D on `L_D` with the encoder held fixed; returns `L_D` before
/// the update.
pub fn step_disc(bundle: &mut ModelBundle, batch: &Batch, seed: u64) -> Result<f64> {
    check_batch(batch)?;
    let d_spec = bundle.spec.discriminator()?;
    let (g_disc, l_d) = {
        let mut tape = Tape::new();
        let x = tape.constant_ref(&batch.inputs);
        let e = tape.bind(&bundle.encoder, false);
        let d = tape.bind(&bundle.discriminator, true);
        let z = encode(&mut tape, &bundle.spec.encoder, &e, x)?;
        let rate = head(
            &mut tape,
            &d_spec,
            &d,
            z,
            Mode::Train,
            &mut rng_for(seed, &[DISCRIMINATOR_STREAM]),
        )?;
        let (l_d, _) = tape.softmax_cross_entropy(rate, &batch.rate)?;
        let mut grads = backward(&tape, l_d)?;
        (grads.collect(&tape, &d), tape.value(l_d).item()?)
    };
    adam_step(
        &mut bundle.discriminator,
        &g_disc,
        &mut bundle.opt_discriminator,
    )?;
    Ok(l_d)
}
