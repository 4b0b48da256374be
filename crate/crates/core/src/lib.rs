//! Multi-level ridge-regression boosting for extreme learning machines.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the numerical core:
//!
//! * [`linalg`]: a dense row-major [`Matrix`], products, Gram matrices and
//!   the Cholesky-based ridge solve.
//! * [`dataset`]: pixel normalization, one-hot targets and pixel dropout.
//! * [`projection`]: seed-derived Gaussian projection matrices, activations
//!   and random-hyperplane sign hashing.
//! * [`boost`]: training and prediction for the level × step ensemble.
//!
//! File formats, dataset loading and the experiment CLI live in the
//! `elmboost` crate. Enabling the `std` feature turns on runtime CPU feature
//! detection in the matrix kernels; results do not change.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boost;
pub mod dataset;
pub mod linalg;
pub mod projection;

pub use boost::{BoostError, BoostedModel, HyperParams, TrainReport};
pub use dataset::{Dataset, DatasetError, RawDataset, TargetMatrix};
pub use linalg::{LinalgError, Matrix};
pub use projection::{Activation, GeneratorId, ProjectionSpec};
