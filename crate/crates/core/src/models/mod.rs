//! Encoder/classifier/discriminator networks and the hand-crafted-feature
//! baselines.

mod checkpoint;
mod encoder;
mod hcf;
mod knn;
mod mlp;
mod network;
mod standardize;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use encoder::{build_encoder, encode, Arch, Block, EncoderSpec, POOL_WINDOW};
pub use hcf::{
    hcf_extract, hcf_from_channels, hcf_names, HcfVector, HCF_LEN, HCF_STATS, HCF_STAT_NAMES,
};
pub use knn::{knn_fit, Knn, DEFAULT_K};
pub use mlp::{hcf_dnn_spec, DenseClassifier, HCF_DNN_HIDDEN};
pub use network::{
    argmax_rows, build_head, head, ForwardOutput, HeadSpec, ModelBundle, ModelSpec, DROPOUT,
    HEAD_WIDTH,
};
pub use standardize::{standardize_apply, standardize_fit, Standardizer, STD_FLOOR};
