use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::FRAME_CHANNELS;
use crate::error::{invalid, shape_err, Result};
use crate::grad::{BoundParams, ParamSet, Role, Tape, Tensor, Var};
use crate::sigproc::FRAME_LEN;

/// One encoder stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// 1-D convolution with this many output channels, followed by ReLU.
    Conv(usize),
    /// Max pooling with window 2.
    Pool,
}

pub const POOL_WINDOW: usize = 2;

/// Convolutional feature extractor layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub blocks: Vec<Block>,
    pub kernel: usize,
    pub in_channels: usize,
    pub in_len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arch {
    #[serde(rename = "vgg16-1d")]
    Vgg16_1d,
    #[serde(rename = "vgg-mini")]
    VggMini,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Vgg16_1d => "vgg16-1d",
            Arch::VggMini => "vgg-mini",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "vgg16-1d" => Ok(Arch::Vgg16_1d),
            "vgg-mini" => Ok(Arch::VggMini),
            _ => invalid(format!(
                "unknown architecture `{name}` (expected vgg16-1d or vgg-mini)"
            )),
        }
    }

    pub fn spec(self) -> EncoderSpec {
        use Block::{Conv, Pool};
        #[rustfmt::skip]
        let blocks = match self {
            Arch::Vgg16_1d => vec![
                Conv(64), Conv(64), Pool,
                Conv(128), Conv(128), Pool,
                Conv(256), Conv(256), Conv(256), Pool,
                Conv(512), Conv(512), Conv(512), Pool,
                Conv(512), Conv(512), Conv(512), Pool,
            ],
            Arch::VggMini => vec![Conv(16), Conv(16), Pool, Conv(32), Conv(32), Pool],
        };
        EncoderSpec {
            blocks,
            kernel: 3,
            in_channels: FRAME_CHANNELS,
            in_len: FRAME_LEN,
        }
    }
}

impl EncoderSpec {
    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// `(channels, length)` after the last block.
    pub fn output_shape(&self) -> Result<(usize, usize)> {
        if self.blocks.is_empty() {
            return invalid("encoder has no blocks");
        }
        if self.kernel == 0 || self.in_channels == 0 {
            return invalid("kernel size and input channels must be positive");
        }
        let (mut c, mut len) = (self.in_channels, self.in_len);
        for (i, b) in self.blocks.iter().enumerate() {
            match *b {
                Block::Conv(out) => {
                    if out == 0 {
                        return invalid(format!("block {i}: zero output channels"));
                    }
                    let padded = len + 2 * self.padding();
                    if padded < self.kernel {
                        return shape_err(format!(
                            "block {i}: length {len} too short for kernel {}",
                            self.kernel
                        ));
                    }
                    len = padded - self.kernel + 1;
                    c = out;
                }
                Block::Pool => {
                    if len < POOL_WINDOW {
                        return shape_err(format!("block {i}: length {len} cannot be pooled"));
                    }
                    len /= POOL_WINDOW;
                }
            }
        }
        Ok((c, len))
    }

    pub fn flatten_width(&self) -> Result<usize> {
        let (c, len) = self.output_shape()?;
        Ok(c * len)
    }
}

pub(crate) fn conv_ids(i: usize) -> (String, String) {
    (format!("conv{i:02}.w"), format!("conv{i:02}.b"))
}

fn he_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches data")
}

/// Dense layer parameters `{prefix}.w` `[d_out, d_in]` and zero bias.
pub(crate) fn init_dense<R: Rng + ?Sized>(
    set: &mut ParamSet,
    prefix: &str,
    d_in: usize,
    d_out: usize,
    rng: &mut R,
) -> Result<()> {
    set.insert(format!("{prefix}.w"), he_uniform(&[d_out, d_in], d_in, rng))?;
    set.insert(format!("{prefix}.b"), Tensor::zeros(&[d_out]))
}

/// He-uniform encoder weights with zero biases.
pub fn build_encoder<R: Rng + ?Sized>(spec: &EncoderSpec, rng: &mut R) -> Result<ParamSet> {
    spec.flatten_width()?;
    let mut set = ParamSet::new(Role::Encoder);
    let mut c_in = spec.in_channels;
    for (i, b) in spec.blocks.iter().enumerate() {
        if let Block::Conv(c_out) = *b {
            let (w, bias) = conv_ids(i);
            let fan_in = c_in * spec.kernel;
            set.insert(w, he_uniform(&[c_out, c_in, spec.kernel], fan_in, rng))?;
            set.insert(bias, Tensor::zeros(&[c_out]))?;
            c_in = c_out;
        }
    }
    Ok(set)
}

/// Record the encoder on `tape`; returns the flattened feature map `[N, width]`.
pub fn encode(
    tape: &mut Tape<'_>,
    spec: &EncoderSpec,
    params: &BoundParams,
    input: Var,
) -> Result<Var> {
    let shape = tape.value(input).shape().to_vec();
    if shape.len() != 3 || shape[1] != spec.in_channels || shape[2] != spec.in_len {
        return shape_err(format!(
            "encoder expects [N, {}, {}], got {shape:?}",
            spec.in_channels, spec.in_len
        ));
    }
    let mut h = input;
    for (i, b) in spec.blocks.iter().enumerate() {
        h = match b {
            Block::Conv(_) => {
                let (w, bias) = conv_ids(i);
                let c = tape.conv1d(h, params.var(&w)?, params.var(&bias)?, spec.padding())?;
                tape.relu(c)
            }
            Block::Pool => tape.maxpool1d(h, POOL_WINDOW)?,
        };
    }
    tape.flatten(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn preset_widths() {
        assert_eq!(Arch::VggMini.spec().flatten_width().unwrap(), 2048);
        assert_eq!(Arch::Vgg16_1d.spec().flatten_width().unwrap(), 512 * 8);
    }

    #[test]
    fn too_many_pools() {
        let mut spec = Arch::VggMini.spec();
        spec.blocks = vec![Block::Conv(4)];
        spec.blocks.extend(std::iter::repeat_n(Block::Pool, 9));
        assert!(spec.flatten_width().is_err());
        assert!(build_encoder(&spec, &mut rng_for(0, &[])).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let spec = Arch::VggMini.spec();
        let a = build_encoder(&spec, &mut rng_for(3, &[])).unwrap();
        let b = build_encoder(&spec, &mut rng_for(3, &[])).unwrap();
        let c = build_encoder(&spec, &mut rng_for(4, &[])).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn arch_names_round_trip() {
        for a in [Arch::Vgg16_1d, Arch::VggMini] {
            assert_eq!(Arch::parse(a.name()).unwrap(), a);
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                format!("\"{}\"", a.name())
            );
        }
    }
}
