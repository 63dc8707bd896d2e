//! Single-file checkpoints: one JSON header line, then little-endian f64
//! blocks in the order the header lists them.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{ModelBundle, ModelSpec};
use crate::data::{ActivitySchema, RateSchema};
use crate::error::{Error, Result};
use crate::grad::{AdamConfig, AdamState, ParamSet, Role, Tensor};

const FORMAT: &str = "srhar-checkpoint";
const VERSION: u32 = 1;

/// Metadata stored alongside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub activities: ActivitySchema,
    pub rates: RateSchema,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BlockKind {
    Param,
    FirstMoment,
    SecondMoment,
}

#[derive(Debug, Serialize, Deserialize)]
struct BlockInfo {
    role: Role,
    kind: BlockKind,
    id: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    spec: ModelSpec,
    #[serde(flatten)]
    meta: CheckpointMeta,
    adam: AdamConfig,
    adam_steps: BTreeMap<Role, u64>,
    blocks: Vec<BlockInfo>,
}

fn parts(bundle: &ModelBundle) -> [(Role, &ParamSet, &AdamState); 3] {
    [
        (Role::Encoder, &bundle.encoder, &bundle.opt_encoder),
        (Role::Classifier, &bundle.classifier, &bundle.opt_classifier),
        (
            Role::Discriminator,
            &bundle.discriminator,
            &bundle.opt_discriminator,
        ),
    ]
}

pub fn save_checkpoint(path: &Path, bundle: &ModelBundle, meta: &CheckpointMeta) -> Result<()> {
    let mut blocks = Vec::new();
    let mut tensors: Vec<&Tensor> = Vec::new();
    let mut adam_steps = BTreeMap::new();
    for (role, set, opt) in parts(bundle) {
        adam_steps.insert(role, opt.step_count());
        for (id, t) in set.iter() {
            let moments = [
                (BlockKind::Param, Some(t)),
                (BlockKind::FirstMoment, opt.first_moment(id)),
                (BlockKind::SecondMoment, opt.second_moment(id)),
            ];
            for (kind, tensor) in moments {
                let tensor = tensor
                    .ok_or_else(|| Error::Checkpoint(format!("no optimizer state for `{id}`")))?;
                blocks.push(BlockInfo {
                    role,
                    kind,
                    id: id.clone(),
                    shape: tensor.shape().to_vec(),
                });
                tensors.push(tensor);
            }
        }
    }
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
        spec: bundle.spec.clone(),
        meta: meta.clone(),
        adam: bundle.opt_encoder.config,
        adam_steps,
        blocks,
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for t in tensors {
        for v in t.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelBundle, CheckpointMeta)> {
    let mut input = BufReader::new(File::open(path)?);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let mut sets: BTreeMap<Role, ParamSet> = [Role::Encoder, Role::Classifier, Role::Discriminator]
        .into_iter()
        .map(|r| (r, ParamSet::new(r)))
        .collect();
    let mut moments: BTreeMap<(Role, BlockKind), BTreeMap<String, Tensor>> = BTreeMap::new();
    let mut bytes = [0u8; 8];
    for b in &header.blocks {
        let n: usize = b.shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            input
                .read_exact(&mut bytes)
                .map_err(|_| Error::Checkpoint(format!("truncated data in block `{}`", b.id)))?;
            data.push(f64::from_le_bytes(bytes));
        }
        let t = Tensor::new(b.shape.clone(), data)?;
        match b.kind {
            BlockKind::Param => sets
                .get_mut(&b.role)
                .expect("all roles present")
                .insert(b.id.clone(), t)?,
            kind => {
                moments
                    .entry((b.role, kind))
                    .or_default()
                    .insert(b.id.clone(), t);
            }
        }
    }
    if input.read(&mut bytes)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after last block".into()));
    }
    let mut take = |role: Role| -> Result<(ParamSet, AdamState)> {
        let set = sets.remove(&role).expect("all roles present");
        let mut opt = AdamState::new(header.adam, &set);
        let first = moments
            .remove(&(role, BlockKind::FirstMoment))
            .unwrap_or_default();
        let second = moments
            .remove(&(role, BlockKind::SecondMoment))
            .unwrap_or_default();
        if first.len() != set.len() || second.len() != set.len() {
            return Err(Error::Checkpoint(format!(
                "incomplete optimizer state for {role:?}"
            )));
        }
        opt.restore(
            header.adam_steps.get(&role).copied().unwrap_or(0),
            first,
            second,
        );
        Ok((set, opt))
    };
    let (encoder, opt_encoder) = take(Role::Encoder)?;
    let (classifier, opt_classifier) = take(Role::Classifier)?;
    let (discriminator, opt_discriminator) = take(Role::Discriminator)?;
    let bundle = ModelBundle {
        spec: header.spec,
        encoder,
        classifier,
        discriminator,
        opt_encoder,
        opt_classifier,
        opt_discriminator,
    };
    // Reject files whose tensors do not fit the declared architecture.
    let reference = ModelBundle::new(bundle.spec.clone(), 0, header.adam)?;
    for (a, b) in parts(&bundle).iter().zip(parts(&reference).iter()) {
        let shapes = |s: &ParamSet| {
            s.iter()
                .map(|(k, t)| (k.clone(), t.shape().to_vec()))
                .collect::<Vec<_>>()
        };
        if shapes(a.1) != shapes(b.1) {
            return Err(Error::Checkpoint(format!(
                "{:?} parameters do not match the spec",
                a.0
            )));
        }
    }
    Ok((bundle, header.meta))
}
