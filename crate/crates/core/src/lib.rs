//! Instrumental-variable Bayesian model averaging.
//!
//! A Gibbs sampler for the two-equation system
//!
//! ```text
//! Y = Xβ + Wγ + ε
//! X = Zδ + Wτ + η,    (ε, η) ~ N₂(0, Σ)
//! ```
//!
//! with `N(0, I)` coefficient priors and an inverse-Wishart prior on `Σ`.
//! Variable selection in both equations is folded into the sweep as MC3
//! moves whose acceptance ratios are conditional Bayes factors, available in
//! closed form given the other block's parameters.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the usual `f64` choice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod format;
pub mod kernels;
pub mod model;
pub mod posterior;
pub mod sampler;
pub mod scalar;
pub mod simulate;
pub mod study;
pub mod summary;

pub use data::{Dataset, VariableNames};
pub use error::{Error, Result};
pub use kernels::{Cov2, Matrix, RngStream, SymMatrix};
pub use model::{FirstStageModel, Indicator, ModelPair, SecondStageModel};
pub use posterior::{GaussianPosterior, ParameterState};
pub use sampler::{run_chain, ChainTrace, Mode, SamplerConfig};
pub use scalar::Scalar;
pub use simulate::{default_truth, SimSpec};
pub use summary::{summarize, PosteriorSummary, Stage};

pub type Dataset64 = Dataset<f64>;
pub type ParameterState64 = ParameterState<f64>;
pub type ChainTrace64 = ChainTrace<f64>;
pub type Matrix64 = Matrix<f64>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type Cov2_64 = Cov2<f64>;
pub type GaussianPosterior64 = GaussianPosterior<f64>;

pub type Dataset32 = Dataset<f32>;
pub type ChainTrace32 = ChainTrace<f32>;
