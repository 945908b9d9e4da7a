//! Synthetic data for the replication study.
//!
//! `W` and `Z` are i.i.d. standard normal, `(ε, η)` i.i.d. bivariate normal
//! with covariance `Σ`, `X = Zδ + Wτ + η` and `Y = Xβ + Wγ + ε`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{cholesky, Cov2, Matrix, RngStream};
use crate::scalar::Scalar;
use crate::summary::CoefficientTruth;

pub const DEFAULT_N: usize = 120;
pub const DEFAULT_P: usize = 15;
pub const DEFAULT_Q: usize = 10;

/// Non-zero outcome coefficients as (1-based covariate index, value); the
/// endogenous coefficient is `DEFAULT_BETA`.
const DEFAULT_BETA: f64 = 1.5;
const DEFAULT_GAMMA: [(usize, f64); 5] = [(1, 2.0), (4, 1.4), (8, 2.7), (9, 1.25), (13, 3.3)];
/// Non-zero instrument coefficients as (1-based instrument index, value).
const DEFAULT_DELTA: [(usize, f64); 4] = [(3, 4.0), (7, 1.2), (8, 3.0), (10, 0.9)];
/// Non-zero first-stage covariate coefficients.
const DEFAULT_TAU: [(usize, f64); 3] = [(2, 2.5), (9, 1.7), (13, 0.8)];

/// Dimensions and generating values of one synthetic design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// `(β, γ)`, length `1 + p`.
    pub rho_true: Vec<f64>,
    /// `(δ, τ)`, length `q + p`.
    pub lambda_true: Vec<f64>,
    /// `[σ11, σ12, σ22]`.
    pub sigma_true: [f64; 3],
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        default_truth()
    }
}

/// The reference design: n = 120, p = 15, q = 10, Σ = [[1, 0.4], [0.4, 1]].
pub fn default_truth() -> SimSpec {
    SimSpec::with_dims(DEFAULT_N, DEFAULT_P, DEFAULT_Q, 0)
}

impl SimSpec {
    /// Reference coefficients truncated (or zero-padded) to `p` covariates
    /// and `q` instruments.
    pub fn with_dims(n: usize, p: usize, q: usize, seed: u64) -> Self {
        let mut rho = vec![0.0; 1 + p];
        rho[0] = DEFAULT_BETA;
        for (k, v) in DEFAULT_GAMMA {
            if k <= p {
                rho[k] = v;
            }
        }
        let mut lambda = vec![0.0; q + p];
        for (j, v) in DEFAULT_DELTA {
            if j <= q {
                lambda[j - 1] = v;
            }
        }
        for (k, v) in DEFAULT_TAU {
            if k <= p {
                lambda[q + k - 1] = v;
            }
        }
        Self {
            n,
            p,
            q,
            rho_true: rho,
            lambda_true: lambda,
            sigma_true: [1.0, 0.4, 1.0],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidConfig("q must be positive".into()));
        }
        if self.rho_true.len() != 1 + self.p || self.lambda_true.len() != self.q + self.p {
            return Err(Error::InvalidConfig(
                "true coefficient lengths do not match p and q".into(),
            ));
        }
        let [a, b, c] = self.sigma_true;
        if !Cov2::new(a, b, c).is_positive_definite() {
            return Err(Error::InvalidConfig(
                "true Sigma is not positive definite".into(),
            ));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> CoefficientTruth {
        CoefficientTruth {
            rho: self.rho_true.clone(),
            lambda: self.lambda_true.clone(),
        }
    }
}

/// Generating values of a dataset, as written alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: SimSpec,
    pub second_names: Vec<String>,
    pub first_names: Vec<String>,
}

/// Draws one dataset. All randomness is drawn in `f64` and then converted,
/// so the values do not depend on `T` beyond rounding.
pub fn generate<T: Scalar, R: Rng + ?Sized>(
    spec: &SimSpec,
    rng: &mut R,
) -> Result<(Dataset<T>, Truth)> {
    spec.validate()?;
    let (n, p, q) = (spec.n, spec.p, spec.q);
    let w = Matrix::<f64>::from_fn(n, p, |_, _| f64::std_normal(rng));
    let z = Matrix::<f64>::from_fn(n, q, |_, _| f64::std_normal(rng));
    let [s11, s12, s22] = spec.sigma_true;
    let chol = cholesky(&Cov2::new(s11, s12, s22).to_sym())?;
    let (beta, gamma) = (spec.rho_true[0], &spec.rho_true[1..]);
    let (delta, tau) = spec.lambda_true.split_at(q);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let a = f64::std_normal(rng);
        let b = f64::std_normal(rng);
        let eps = chol[(0, 0)] * a;
        let eta = chol[(1, 0)] * a + chol[(1, 1)] * b;
        let wi = w.row(i);
        let xi = z.row(i).iter().zip(delta).map(|(z, d)| z * d).sum::<f64>()
            + wi.iter().zip(tau).map(|(w, t)| w * t).sum::<f64>()
            + eta;
        let yi = beta * xi + wi.iter().zip(gamma).map(|(w, g)| w * g).sum::<f64>() + eps;
        x.push(xi);
        y.push(yi);
    }
    let data = Dataset::new(y, x, w, z)?;
    let truth = Truth {
        spec: spec.clone(),
        second_names: data.names().second_stage(),
        first_names: data.names().first_stage(),
    };
    Ok((data.cast(), truth))
}

/// [`generate`] with a fresh stream keyed by `spec.seed`.
pub fn generate_seeded<T: Scalar>(spec: &SimSpec) -> Result<(Dataset<T>, Truth)> {
    generate(spec, &mut RngStream::new(spec.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_design_shape() {
        let s = default_truth();
        assert_eq!((s.n, s.p, s.q), (120, 15, 10));
        assert_eq!(s.rho_true.iter().filter(|&&v| v != 0.0).count(), 6);
        assert_eq!(s.lambda_true[..10].iter().filter(|&&v| v != 0.0).count(), 4);
        assert_eq!(s.lambda_true[10 + 1], 2.5);
        assert_eq!(s.lambda_true[2], 4.0);
        assert_eq!(s.rho_true[13], 3.3);
        assert_eq!(s.sigma_true, [1.0, 0.4, 1.0]);
    }

    #[test]
    fn dimensions_respected() {
        let spec = SimSpec::with_dims(37, 4, 3, 5);
        let (d, t) = generate_seeded::<f64>(&spec).unwrap();
        assert_eq!((d.n(), d.p(), d.q()), (37, 4, 3));
        assert_eq!((d.w().rows(), d.w().cols(), d.z().cols()), (37, 4, 3));
        assert_eq!(t.first_names.len(), 7);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SimSpec::with_dims(20, 3, 2, 11);
        let (a, _) = generate_seeded::<f64>(&spec).unwrap();
        let (b, _) = generate_seeded::<f64>(&spec).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.z(), b.z());
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn uncorrelated_errors_with_identity_sigma() {
        let mut spec = SimSpec::with_dims(20_000, 2, 1, 3);
        spec.sigma_true = [1.0, 0.0, 1.0];
        let (d, _) = generate_seeded::<f64>(&spec).unwrap();
        let s = crate::posterior::ParameterState {
            rho: spec.rho_true.clone(),
            lambda: spec.lambda_true.clone(),
            sigma: Cov2::identity(),
            pair: crate::model::ModelPair::full(2, 1),
        };
        let (eps, eta) = crate::posterior::residuals(&d, &s).unwrap();
        assert!(corr(&eps, &eta).abs() < 3.0 / (20_000f64).sqrt());
    }

    #[test]
    fn zero_coefficients_give_independent_outcomes() {
        let mut spec = SimSpec::with_dims(10_000, 2, 2, 4);
        spec.rho_true = vec![0.0; 3];
        spec.lambda_true = vec![0.0; 4];
        spec.sigma_true = [1.0, 0.0, 1.0];
        let (d, _) = generate_seeded::<f64>(&spec).unwrap();
        assert!(corr(d.y(), d.x()).abs() < 3.0 / 100.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = SimSpec::with_dims(10, 2, 2, 0);
        s.sigma_true = [1.0, 2.0, 1.0];
        assert!(generate_seeded::<f64>(&s).is_err());
        let s = SimSpec::with_dims(10, 2, 0, 0);
        assert!(generate_seeded::<f64>(&s).is_err());
    }
}
