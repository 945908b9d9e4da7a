//! The floating-point abstraction every numeric routine is written against.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Open01, StandardNormal};

/// Real scalar usable by the linear-algebra kernels and the samplers.
///
/// Implemented for `f32` and `f64`. Random variates are drawn natively in the
/// scalar's own precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// One draw from N(0, 1).
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from a chi-squared distribution with `df` degrees of freedom.
    fn chi_squared<R: Rng + ?Sized>(rng: &mut R, df: Self) -> Self;

    /// One draw from the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Relative tolerance used when checking symmetry of stored matrices.
    fn symmetry_tol() -> Self;

    /// Converts an `f64` literal. Every finite `f64` is representable (possibly
    /// rounded) in both implementors, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $sym_tol:expr) => {
        impl Scalar for $t {
            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn chi_squared<R: Rng + ?Sized>(rng: &mut R, df: Self) -> Self {
                ChiSquared::new(df)
                    .expect("chi-squared degrees of freedom must be positive")
                    .sample(rng)
            }

            #[inline]
            fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            #[inline]
            fn symmetry_tol() -> Self {
                $sym_tol
            }
        }
    };
}

impl_scalar!(f64, 1e-12);
impl_scalar!(f32, 1e-5);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn lit_round_trips() {
        assert_eq!(f64::lit(0.4), 0.4);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(2.5f32.as_f64(), 2.5);
    }

    #[test]
    fn draws_are_in_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = f32::open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
            assert!(f64::chi_squared(&mut rng, 3.0) > 0.0);
        }
    }
}
