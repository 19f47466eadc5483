//! Generator-based compression of tall matrices and approximate transpose
//! products computed straight from the compressed form.
//!
//! The pipeline: sample k of the b rows of A as generators, assign every row
//! to the generator it is most collinear with, keep the orthogonal projection
//! coefficient onto that generator's line, drop rows whose projection residual
//! exceeds a relative tolerance, and rescale the surviving mass so the
//! approximate product `Cᵀ·B̃` stands in for `AᵀB`. The main consumer is a
//! linear layer that stores the compressed activation instead of its input and
//! reuses it for the weight gradient in the backward pass.
//!
//! The crate is `no_std`-compatible (`alloc` required); file formats, the
//! experiment harness and the CLI live in the companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod accounting;
pub mod approx;
pub mod bounds;
pub mod compress;
pub mod config;
pub mod error;
pub mod layers;
pub mod matrix;
pub mod metrics;
pub mod sample;
pub mod scalar;
pub mod spectral;

pub use accounting::{memory_footprint, speedup_gamma};
pub use approx::{approx_matmul, reconstruct};
pub use bounds::{epsilon_neighborhood_sizes, error_bound_rhs, k_bound};
pub use compress::{
    apply_neighborhood_condition, assign_and_project, compress, compress_with_generators,
    compute_beta, CompressedActivation,
};
pub use config::{GeneratorBudget, PammConfig, DEFAULT_NORM_GUARD};
pub use error::{Error, Result};
pub use layers::fdcheck::{finite_difference_check, ParamSelector};
pub use layers::model::{AttentionBlock, ModelConfig, ToyModel};
pub use layers::optim::Optimizer;
pub use layers::{PammLinearLayer, SavedActivation};
pub use matrix::{cosine_similarity_matrix, DenseMatrix};
pub use metrics::{error_report, relative_error, PammErrorReport};
pub use sample::{derive_seed, splitmix64, SeededSampler};
pub use scalar::Scalar;
pub use spectral::spectral_norm;
