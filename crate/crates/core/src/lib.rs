//! Random-walk SGD over a graph of nodes holding heterogeneous data.
//!
//! A single model token walks the graph; each round the current node applies
//! one importance-weighted projected SGD update and hands the model to a
//! neighbor. The walker that picks the neighbor is pluggable: uniform
//! Metropolis-Hastings, statically weighted MH, a pure-exploitation scheme,
//! or a sleeping-bandit multiplicative-weights walker that adapts to the
//! per-node gradient second moments it observes along the way.
//!
//! Numeric kernels are generic over the scalar type (`f32` or `f64`) via
//! [`Scalar`]; concrete aliases for the common types live at the crate root.

// `!(x > 0)` rejects NaN where `x <= 0` would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod engine;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod walkers;

pub use scalar::Scalar;

pub type LabeledPoint32 = data::LabeledPoint<f32>;
pub type LabeledPoint64 = data::LabeledPoint<f64>;
pub type Partition32 = data::Partition<f32>;
pub type Partition64 = data::Partition<f64>;
pub type ParamVector32 = model::ParamVector<f32>;
pub type ParamVector64 = model::ParamVector<f64>;
pub type Exp3Walker32 = walkers::Exp3Walker<f32>;
pub type Exp3Walker64 = walkers::Exp3Walker<f64>;
