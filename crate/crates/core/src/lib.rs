//! Career-trajectory modeling for scholarly Fellow elections: corpus
//! ingestion, co-author graphs, the 36-slot factor series, calendar-year
//! datasets, transformer encoder models, classical baselines, statistical
//! analyses and a seeded synthetic corpus generator.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::type_complexity,
    clippy::needless_range_loop
)]

pub mod analysis;
pub mod baselines;
pub mod data;
pub mod datasets;
pub mod error;
pub mod factors;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{CsrMatrix, Tensor};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type CareerModel64 = nn::CareerModel<f64>;
pub type CareerModel32 = nn::CareerModel<f32>;
pub type GraphInput64 = nn::GraphInput<f64>;
