//! Finite-difference cases shared by the gradient suite and the
//! acceptance run: every tape operation plus the full encoder +
//! classifier + discriminator objective.

use rand::Rng;
use srhar_core::grad::{
    grad_check, AdamConfig, BoundParams, GradCheckOptions, Mode, Tape, Tensor, Var,
};
use srhar_core::models::{encode, head, Block, EncoderSpec, ModelBundle, ModelSpec};
use srhar_core::seed::rng_for;

pub const TOL: f64 = 1e-5;

pub fn random(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = rng_for(seed, &[]);
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Values bounded away from zero so ReLU kinks stay outside ±h.
pub fn off_zero(shape: &[usize], seed: u64) -> Tensor {
    let mut t = random(shape, seed);
    for v in t.data_mut() {
        *v = v.signum() * (0.05 + v.abs());
    }
    t
}

pub fn scaled(mut t: Tensor, k: f64) -> Tensor {
    t.data_mut().iter_mut().for_each(|v| *v *= k);
    t
}

pub fn one_hot(labels: &[usize], classes: usize) -> &'static Tensor {
    let mut data = vec![0.0; labels.len() * classes];
    for (i, &l) in labels.iter().enumerate() {
        data[i * classes + l] = 1.0;
    }
    Box::leak(Box::new(
        Tensor::new(vec![labels.len(), classes], data).unwrap(),
    ))
}

/// Reduce any node to a scalar with fixed random weights.
pub fn project(tape: &mut Tape<'_>, v: Var, seed: u64) -> srhar_core::Result<Var> {
    let shape = tape.value(v).shape().to_vec();
    tape.contract(v, random(&shape, seed))
}

fn max_error<F>(f: F, inputs: &[Tensor]) -> f64
where
    F: Fn(&mut Tape<'_>, &[Var]) -> srhar_core::Result<Var>,
{
    grad_check(f, inputs, &GradCheckOptions::default())
        .unwrap()
        .max_relative_error()
}

/// Tiny model with the same structure as the real one.
pub fn tiny_bundle() -> ModelBundle {
    let spec = ModelSpec {
        encoder: EncoderSpec {
            blocks: vec![Block::Conv(3), Block::Pool, Block::Conv(4)],
            kernel: 3,
            in_channels: 3,
            in_len: 8,
        },
        head_width: 5,
        dropout: 0.5,
        num_activities: 3,
        num_rates: 2,
    };
    ModelBundle::new(spec, 5, AdamConfig::default()).unwrap()
}

/// `L_CE − λ·L_D` over every parameter of E, C and D, written without a
/// reversal node so central differences see the same objective.
fn composite_error(lambda: f64) -> f64 {
    let bundle = tiny_bundle();
    let sets = [&bundle.encoder, &bundle.classifier, &bundle.discriminator];
    let ids: Vec<Vec<String>> = sets.iter().map(|s| s.ids().cloned().collect()).collect();
    let inputs: Vec<Tensor> = sets
        .iter()
        .flat_map(|s| s.iter().map(|(_, t)| t.clone()))
        .collect();
    let x = random(&[4, 3, 8], 32);
    let activity = one_hot(&[2, 1, 0, 1], 3);
    let rate = one_hot(&[1, 1, 0, 0], 2);
    let spec = bundle.spec.clone();
    max_error(
        |t, v| {
            let mut offset = 0;
            let mut bound = Vec::new();
            for group in &ids {
                let vars = group
                    .iter()
                    .cloned()
                    .zip(v[offset..offset + group.len()].iter().copied());
                bound.push(BoundParams::from_vars(vars));
                offset += group.len();
            }
            let input = t.constant(x.clone());
            let z = encode(t, &spec.encoder, &bound[0], input)?;
            let a = head(
                t,
                &spec.classifier()?,
                &bound[1],
                z,
                Mode::Train,
                &mut rng_for(3, &[]),
            )?;
            let d = head(
                t,
                &spec.discriminator()?,
                &bound[2],
                z,
                Mode::Train,
                &mut rng_for(4, &[]),
            )?;
            let (l_ce, _) = t.softmax_cross_entropy(a, activity)?;
            let (l_d, _) = t.softmax_cross_entropy(d, rate)?;
            t.lincomb(&[(l_ce, 1.0), (l_d, -lambda)])
        },
        &inputs,
    )
}

/// Maximum relative error of every case, by name.
pub fn all_cases() -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for padding in [0, 1] {
        let err = max_error(
            |t, v| {
                let y = t.conv1d(v[0], v[1], v[2], padding)?;
                project(t, y, 11)
            },
            &[
                random(&[2, 3, 7], 1),
                random(&[4, 3, 3], 2),
                random(&[4], 3),
            ],
        );
        out.push((format!("conv1d padding {padding}"), err));
    }
    // Odd length exercises the dropped tail.
    let err = max_error(
        |t, v| {
            let y = t.maxpool1d(v[0], 2)?;
            project(t, y, 12)
        },
        &[random(&[2, 3, 9], 4)],
    );
    out.push(("maxpool1d".into(), err));
    let err = max_error(
        |t, v| {
            let y = t.dense(v[0], v[1], v[2])?;
            project(t, y, 13)
        },
        &[random(&[3, 5], 5), random(&[4, 5], 6), random(&[4], 7)],
    );
    out.push(("dense".into(), err));
    let err = max_error(
        |t, v| {
            let y = t.relu(v[0]);
            project(t, y, 14)
        },
        &[off_zero(&[4, 6], 8)],
    );
    out.push(("relu".into(), err));
    for mode in [Mode::Train, Mode::Eval] {
        let err = max_error(
            |t, v| {
                let y = t.dropout(v[0], 0.5, mode, &mut rng_for(99, &[]))?;
                project(t, y, 15)
            },
            &[random(&[4, 6], 9)],
        );
        out.push((format!("dropout {mode:?}"), err));
    }
    let err = max_error(
        |t, v| {
            let y = t.flatten(v[0])?;
            project(t, y, 16)
        },
        &[random(&[2, 3, 4], 10)],
    );
    out.push(("flatten".into(), err));
    let targets = one_hot(&[0, 2, 1, 2], 3);
    let err = max_error(
        |t, v| Ok(t.softmax_cross_entropy(v[0], targets)?.0),
        &[scaled(random(&[4, 3], 19), 3.0)],
    );
    out.push(("softmax_cross_entropy".into(), err));
    let err = max_error(
        |t, v| {
            let a = project(t, v[0], 20)?;
            let b = project(t, v[1], 21)?;
            t.lincomb(&[(a, 0.3), (b, -1.7), (a, 2.0)])
        },
        &[random(&[2, 2], 22), random(&[3], 23)],
    );
    out.push(("lincomb".into(), err));
    for lambda in [0.0, 1.0] {
        out.push((
            format!("E+C+D objective, lambda {lambda}"),
            composite_error(lambda),
        ));
    }
    out
}
