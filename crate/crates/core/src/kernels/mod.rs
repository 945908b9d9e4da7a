//! Linear-algebra primitives and random variate generators.

mod dist;
mod linalg;
mod rng;

pub use dist::{inv_wishart_sample, mvn_sample, mvn_sample_factored};
pub use linalg::{cholesky, dot, log_det_psd, Cholesky, Cov2, Matrix, SymMatrix};
pub use rng::RngStream;
