use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{build_encoder, encode, init_dense, Arch, EncoderSpec};
use crate::error::{invalid, shape_err, Result};
use crate::grad::{AdamConfig, AdamState, BoundParams, Mode, ParamSet, Role, Tape, Tensor, Var};
use crate::seed::rng_for;

pub const HEAD_WIDTH: usize = 1024;
pub const DROPOUT: f64 = 0.5;

/// Fully connected stack: `[dense → ReLU → dropout]` per hidden width, then
/// a linear output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub d_in: usize,
    pub hidden: Vec<usize>,
    pub d_out: usize,
    pub dropout: f64,
}

impl HeadSpec {
    pub fn num_params(&self) -> usize {
        let mut d = self.d_in;
        let mut total = 0;
        for &h in self.hidden.iter().chain(std::iter::once(&self.d_out)) {
            total += d * h + h;
            d = h;
        }
        total
    }
}

fn hidden_id(i: usize) -> String {
    format!("fc{i}")
}

pub fn build_head<R: Rng + ?Sized>(spec: &HeadSpec, role: Role, rng: &mut R) -> Result<ParamSet> {
    if spec.d_in == 0 || spec.d_out == 0 || spec.hidden.contains(&0) {
        return invalid(format!("head widths must be positive: {spec:?}"));
    }
    let mut set = ParamSet::new(role);
    let mut d = spec.d_in;
    for (i, &h) in spec.hidden.iter().enumerate() {
        init_dense(&mut set, &hidden_id(i), d, h, rng)?;
        d = h;
    }
    init_dense(&mut set, "out", d, spec.d_out, rng)?;
    Ok(set)
}

/// Record a head on `tape`; returns logits `[N, d_out]`.
pub fn head<R: Rng + ?Sized>(
    tape: &mut Tape<'_>,
    spec: &HeadSpec,
    params: &BoundParams,
    input: Var,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    let mut h = input;
    for i in 0..spec.hidden.len() {
        let id = hidden_id(i);
        h = tape.dense(
            h,
            params.var(&format!("{id}.w"))?,
            params.var(&format!("{id}.b"))?,
        )?;
        h = tape.relu(h);
        h = tape.dropout(h, spec.dropout, mode, rng)?;
    }
    tape.dense(h, params.var("out.w")?, params.var("out.b")?)
}

/// Encoder plus the two head layouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub encoder: EncoderSpec,
    pub head_width: usize,
    pub dropout: f64,
    pub num_activities: usize,
    pub num_rates: usize,
}

impl ModelSpec {
    pub fn new(arch: Arch, num_activities: usize, num_rates: usize) -> Self {
        Self {
            encoder: arch.spec(),
            head_width: HEAD_WIDTH,
            dropout: DROPOUT,
            num_activities,
            num_rates,
        }
    }

    fn head(&self, d_out: usize) -> Result<HeadSpec> {
        Ok(HeadSpec {
            d_in: self.encoder.flatten_width()?,
            hidden: vec![self.head_width],
            d_out,
            dropout: self.dropout,
        })
    }

    pub fn classifier(&self) -> Result<HeadSpec> {
        self.head(self.num_activities)
    }

    pub fn discriminator(&self) -> Result<HeadSpec> {
        self.head(self.num_rates)
    }
}

/// Encoder E, activity classifier C, rate discriminator D, and one Adam
/// state per sub-network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub spec: ModelSpec,
    pub encoder: ParamSet,
    pub classifier: ParamSet,
    pub discriminator: ParamSet,
    pub opt_encoder: AdamState,
    pub opt_classifier: AdamState,
    pub opt_discriminator: AdamState,
}

/// Outputs of one shared encoder pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    /// Flattened feature map z, `[N, flatten_width]`.
    pub features: Tensor,
    pub activity_logits: Tensor,
    pub rate_logits: Tensor,
}

impl ModelBundle {
    /// Fresh parameters; each sub-network draws from its own stream of `seed`.
    pub fn new(spec: ModelSpec, seed: u64, adam: AdamConfig) -> Result<Self> {
        let encoder = build_encoder(&spec.encoder, &mut rng_for(seed, &[1]))?;
        let classifier = build_head(
            &spec.classifier()?,
            Role::Classifier,
            &mut rng_for(seed, &[2]),
        )?;
        let discriminator = build_head(
            &spec.discriminator()?,
            Role::Discriminator,
            &mut rng_for(seed, &[3]),
        )?;
        Ok(Self {
            opt_encoder: AdamState::new(adam, &encoder),
            opt_classifier: AdamState::new(adam, &classifier),
            opt_discriminator: AdamState::new(adam, &discriminator),
            spec,
            encoder,
            classifier,
            discriminator,
        })
    }

    fn check_input(&self, inputs: &Tensor) -> Result<()> {
        let e = &self.spec.encoder;
        if inputs.shape().len() != 3 || inputs.dim(1) != e.in_channels || inputs.dim(2) != e.in_len
        {
            return shape_err(format!(
                "model expects [N, {}, {}], got {:?}",
                e.in_channels,
                e.in_len,
                inputs.shape()
            ));
        }
        Ok(())
    }

    /// One encoder pass feeding both heads. `rng` drives dropout in train
    /// mode (classifier masks first, then discriminator).
    pub fn forward<R: Rng + ?Sized>(
        &self,
        inputs: &Tensor,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardOutput> {
        self.check_input(inputs)?;
        let mut tape = Tape::new();
        let x = tape.constant_ref(inputs);
        let e = tape.bind(&self.encoder, false);
        let c = tape.bind(&self.classifier, false);
        let d = tape.bind(&self.discriminator, false);
        let z = encode(&mut tape, &self.spec.encoder, &e, x)?;
        let act = head(&mut tape, &self.spec.classifier()?, &c, z, mode, rng)?;
        let rate = head(&mut tape, &self.spec.discriminator()?, &d, z, mode, rng)?;
        Ok(ForwardOutput {
            features: tape.value(z).clone(),
            activity_logits: tape.value(act).clone(),
            rate_logits: tape.value(rate).clone(),
        })
    }

    /// Eval-mode encoder output.
    pub fn features(&self, inputs: &Tensor) -> Result<Tensor> {
        self.check_input(inputs)?;
        let mut tape = Tape::new();
        let x = tape.constant_ref(inputs);
        let e = tape.bind(&self.encoder, false);
        let z = encode(&mut tape, &self.spec.encoder, &e, x)?;
        Ok(tape.value(z).clone())
    }

    pub fn num_params(&self) -> usize {
        self.encoder.num_values() + self.classifier.num_values() + self.discriminator.num_values()
    }
}

/// Row-wise argmax of `[N, M]` logits; first index wins ties.
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let m = logits.dim(1);
    logits
        .data()
        .chunks(m)
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
