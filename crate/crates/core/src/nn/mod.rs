//! Tensor autograd, the Cls-Fellow / Reg-Fellow encoder models, and training.

pub mod attention;
pub mod checkpoint;
pub mod gcn;
pub mod gradcheck;
pub mod model;
pub mod optim;
pub mod params;
pub mod tape;
pub mod train;

pub use attention::{multi_head_self_attention, AttentionOutput, AttentionParams};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION,
};
pub use gcn::{gcn_branch, GcnIds, GcnParams, GraphInput, GCN_INPUT_DIM, GCN_OUTPUT_DIM};
pub use gradcheck::{check_attention, check_gcn, check_layer_norm_ffn, gradient_check};
pub use model::{
    sinusoidal_table, CareerModel, ExampleView, GcnMode, HeadType, ModelConfig, PositionalEncoding,
    CN_RANGE, FEATURE_DIM,
};
pub use optim::{Adam, AdamConfig};
pub use params::{Gradients, ParamId, ParamStore};
pub use tape::{softmax, Tape, Var};
pub use train::{evaluate, example_gradient, train, EpochRecord, Sample, TrainConfig, TrainReport};
