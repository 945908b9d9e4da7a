//! Multivariate normal and inverse-Wishart samplers.

use rand::Rng;

use super::linalg::{lower_triangular_inverse, Cholesky, Matrix, SymMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Draws from `N(mean, precision⁻¹)` given a factored precision `L L'`.
///
/// With `z ~ N(0, I)` the draw is `mean + L'⁻¹ z`, whose covariance is
/// `(L L')⁻¹`.
pub fn mvn_sample_factored<T: Scalar, R: Rng + ?Sized>(
    mean: &[T],
    precision: &Cholesky<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    if mean.len() != precision.dim() {
        return Err(Error::DimensionMismatch {
            context: "normal mean vs precision",
            expected: precision.dim(),
            found: mean.len(),
        });
    }
    let z: Vec<T> = (0..mean.len()).map(|_| T::std_normal(rng)).collect();
    let dev = precision.solve_upper(&z);
    Ok(mean.iter().zip(dev).map(|(&m, d)| m + d).collect())
}

/// Draws from `N(mean, precision⁻¹)`.
pub fn mvn_sample<T: Scalar, R: Rng + ?Sized>(
    mean: &[T],
    precision: &SymMatrix<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    if mean.len() != precision.dim() {
        return Err(Error::DimensionMismatch {
            context: "normal mean vs precision",
            expected: precision.dim(),
            found: mean.len(),
        });
    }
    mvn_sample_factored(mean, &Cholesky::new(precision)?, rng)
}

/// Draws `Σ ~ W⁻¹(scale, df)`, parameterised so that `Σ⁻¹ ~ W(scale⁻¹, df)`
/// and `E[Σ⁻¹] = df · scale⁻¹`.
///
/// Bartlett construction: with `scale = C C'` and `A` lower triangular
/// (`A_ii² ~ χ²(df − i)`, `A_ij ~ N(0, 1)` below the diagonal),
/// `Σ = (C A'⁻¹)(C A'⁻¹)'`. Only the triangular `A` is ever inverted.
pub fn inv_wishart_sample<T: Scalar, R: Rng + ?Sized>(
    scale: &SymMatrix<T>,
    df: T,
    rng: &mut R,
) -> Result<SymMatrix<T>> {
    let d = scale.dim();
    if !(df > T::lit(d as f64 - 1.0)) {
        return Err(Error::DegreesOfFreedom {
            df: df.as_f64(),
            dim: d,
        });
    }
    let c = Cholesky::new(scale)?;
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        a[(i, i)] = T::chi_squared(rng, df - T::lit(i as f64)).sqrt();
    }
    for i in 0..d {
        for j in 0..i {
            a[(i, j)] = T::std_normal(rng);
        }
    }
    let a_inv_t = lower_triangular_inverse(&a).transpose();
    let b = c.factor().matmul(&a_inv_t)?;
    SymMatrix::new(b.matmul(&b.transpose())?)
}
