//! Finite-difference checks of every tape operation and of the full
//! encoder + classifier + discriminator objective.

mod common;

use common::grad_cases::{all_cases, one_hot, project, random, scaled, tiny_bundle, TOL};
use proptest::prelude::*;
use srhar_core::grad::{backward, grad_check, GradCheckOptions, Mode, Tape, Tensor};
use srhar_core::models::{encode, head};
use srhar_core::seed::rng_for;

#[test]
fn every_operation_and_the_full_objective() {
    for (name, err) in all_cases() {
        assert!(err < TOL, "{name}: max relative error {err:e}");
    }
}

#[test]
fn reversal_produces_the_negated_gradient() {
    // The reversal is not the derivative of its forward pass, so compare
    // against the objective whose true gradient it produces: −factor·f.
    let factor = 0.7;
    let x = random(&[3, 4], 17);
    let mut tape = Tape::new();
    let v = tape.param(&x, true);
    let r = tape.grad_reverse(v, factor);
    let loss = project(&mut tape, r, 18).unwrap();
    let g = backward(&tape, loss).unwrap().wrt(&tape, v);
    // Central differences of −factor·f agree with the same target.
    let numeric = grad_check(
        |t, v| {
            let y = project(t, v[0], 18)?;
            t.lincomb(&[(y, -factor)])
        },
        std::slice::from_ref(&x),
        &GradCheckOptions::default(),
    )
    .unwrap();
    assert!(numeric.max_relative_error() < TOL);
    let w = random(&[3, 4], 18);
    for (gi, wi) in g.data().iter().zip(w.data()) {
        assert_eq!(*gi, -factor * wi);
    }
}

/// Encoder gradient of the adversarial objective equals the analytic
/// gradient of `L_CE − λ·L_D` computed without a reversal node.
#[test]
fn reversal_gives_encoder_the_adversarial_gradient() {
    let bundle = tiny_bundle();
    let x = random(&[4, 3, 8], 31);
    let activity = one_hot(&[0, 1, 2, 1], 3);
    let rate = one_hot(&[0, 1, 1, 0], 2);
    let lambda = 0.8;
    let spec = &bundle.spec;
    let run = |reversed: bool| {
        let mut t = Tape::new();
        let input = t.constant_ref(&x);
        let e = t.bind(&bundle.encoder, true);
        let c = t.bind(&bundle.classifier, false);
        let d = t.bind(&bundle.discriminator, false);
        let z = encode(&mut t, &spec.encoder, &e, input).unwrap();
        let a = head(
            &mut t,
            &spec.classifier().unwrap(),
            &c,
            z,
            Mode::Train,
            &mut rng_for(1, &[]),
        )
        .unwrap();
        let zr = if reversed {
            t.grad_reverse(z, lambda)
        } else {
            z
        };
        let r = head(
            &mut t,
            &spec.discriminator().unwrap(),
            &d,
            zr,
            Mode::Train,
            &mut rng_for(2, &[]),
        )
        .unwrap();
        let (l_ce, _) = t.softmax_cross_entropy(a, activity).unwrap();
        let (l_d, _) = t.softmax_cross_entropy(r, rate).unwrap();
        let loss = if reversed {
            t.lincomb(&[(l_ce, 1.0), (l_d, 1.0)]).unwrap()
        } else {
            t.lincomb(&[(l_ce, 1.0), (l_d, -lambda)]).unwrap()
        };
        let mut g = backward(&t, loss).unwrap();
        g.collect(&t, &e)
    };
    let (with, without) = (run(true), run(false));
    for (id, g) in &with {
        let h = &without[id];
        for (a, b) in g.data().iter().zip(h.data()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{id}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn contract_gradient_is_its_weights(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        let x = random(&[n, m], seed);
        let w = random(&[n, m], seed ^ 1);
        let mut t = Tape::new();
        let v = t.param(&x, true);
        let s = t.contract(v, w.clone()).unwrap();
        let g = backward(&t, s).unwrap().wrt(&t, v);
        prop_assert_eq!(g.data(), w.data());
    }

    #[test]
    fn reversal_is_identity_forward(seed in any::<u64>(), factor in -3.0f64..3.0) {
        let x = random(&[3, 5], seed);
        let mut t = Tape::new();
        let v = t.param(&x, true);
        let r = t.grad_reverse(v, factor);
        prop_assert_eq!(t.value(r).data(), x.data());
    }

    #[test]
    fn conv_is_linear_in_its_input(seed in any::<u64>(), a in -2.0f64..2.0) {
        let x = random(&[1, 2, 6], seed);
        let w = random(&[3, 2, 3], seed ^ 2);
        let zero_bias = Tensor::zeros(&[3]);
        let scaled = scaled(x.clone(), a);
        let y = srhar_core::grad::ops::conv1d(&x, &w, &zero_bias, 1).unwrap();
        let ys = srhar_core::grad::ops::conv1d(&scaled, &w, &zero_bias, 1).unwrap();
        for (p, q) in y.data().iter().zip(ys.data()) {
            prop_assert!((a * p - q).abs() < 1e-12);
        }
    }
}
