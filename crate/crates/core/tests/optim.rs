use proptest::prelude::*;
use srhar_core::grad::{adam_step, AdamConfig, AdamState, ParamGrads, ParamSet, Role, Tensor};

/// Textbook bias-corrected Adam on `f(θ) = a(θ − c)²`, written from the
/// update equations with running products for βᵗ.
fn hand_rolled(cfg: AdamConfig, a: f64, c: f64, theta0: f64, steps: usize) -> Vec<f64> {
    let (mut theta, mut m, mut v) = (theta0, 0.0, 0.0);
    let (mut b1t, mut b2t) = (1.0, 1.0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let g = 2.0 * a * (theta - c);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let m_hat = m / (1.0 - b1t);
        let v_hat = v / (1.0 - b2t);
        theta -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        out.push(theta);
    }
    out
}

fn library(cfg: AdamConfig, a: f64, c: f64, theta0: f64, steps: usize) -> Vec<f64> {
    let mut params = ParamSet::new(Role::Encoder);
    params
        .insert("theta", Tensor::from_vec(vec![theta0]))
        .unwrap();
    let mut state = AdamState::new(cfg, &params);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let theta = params.get("theta").unwrap().data()[0];
        let grads: ParamGrads = [(
            "theta".to_string(),
            Tensor::from_vec(vec![2.0 * a * (theta - c)]),
        )]
        .into();
        adam_step(&mut params, &grads, &mut state).unwrap();
        out.push(params.get("theta").unwrap().data()[0]);
    }
    out
}

#[test]
fn ten_steps_match_the_update_equations() {
    for cfg in [
        AdamConfig::default(),
        AdamConfig {
            lr: 0.05,
            ..AdamConfig::default()
        },
    ] {
        let want = hand_rolled(cfg, 1.5, -0.3, 2.0, 10);
        let got = library(cfg, 1.5, -0.3, 2.0, 10);
        for (t, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!((g - w).abs() < 1e-12, "step {}: {g} vs {w}", t + 1);
        }
    }
}

#[test]
fn default_hyperparameters() {
    let cfg = AdamConfig::default();
    assert_eq!(
        (cfg.lr, cfg.beta1, cfg.beta2, cfg.eps),
        (1e-4, 0.9, 0.999, 1e-8)
    );
}

#[test]
fn moments_are_per_parameter() {
    let mut params = ParamSet::new(Role::Classifier);
    params
        .insert("a", Tensor::from_vec(vec![1.0, 2.0]))
        .unwrap();
    params.insert("b", Tensor::from_vec(vec![3.0])).unwrap();
    let mut state = AdamState::new(AdamConfig::default(), &params);
    let grads: ParamGrads = [
        ("a".to_string(), Tensor::from_vec(vec![1.0, 0.0])),
        ("b".to_string(), Tensor::from_vec(vec![-2.0])),
    ]
    .into();
    adam_step(&mut params, &grads, &mut state).unwrap();
    let close =
        |got: &[f64], want: &[f64]| got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-15);
    assert!(close(state.first_moment("a").unwrap().data(), &[0.1, 0.0]));
    assert!(close(state.first_moment("b").unwrap().data(), &[-0.2]));
    let v = state.second_moment("b").unwrap().data()[0];
    assert!((v - 0.004).abs() < 1e-15);
    // Zero gradient leaves that coordinate alone.
    assert_eq!(params.get("a").unwrap().data()[1], 2.0);
}

proptest! {
    #[test]
    fn matches_oracle_on_random_quadratics(
        a in 0.1f64..10.0,
        c in -5.0f64..5.0,
        theta0 in -5.0f64..5.0,
        lr in 1e-4f64..0.1,
    ) {
        let cfg = AdamConfig { lr, ..AdamConfig::default() };
        let want = hand_rolled(cfg, a, c, theta0, 10);
        let got = library(cfg, a, c, theta0, 10);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn first_step_size_is_the_learning_rate(g in prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3], lr in 1e-5f64..1e-1) {
        // m̂ = g and v̂ = g², so the first move is lr·g/(|g| + ε).
        let cfg = AdamConfig { lr, ..AdamConfig::default() };
        let mut params = ParamSet::new(Role::Discriminator);
        params.insert("w", Tensor::from_vec(vec![0.0])).unwrap();
        let mut state = AdamState::new(cfg, &params);
        let grads: ParamGrads = [("w".to_string(), Tensor::from_vec(vec![g]))].into();
        adam_step(&mut params, &grads, &mut state).unwrap();
        let moved = params.get("w").unwrap().data()[0];
        prop_assert!((moved + lr * g / (g.abs() + cfg.eps)).abs() < 1e-15);
    }
}
