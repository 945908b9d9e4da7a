//! Conditional posteriors of the coefficient blocks and the conditional
//! integrated likelihoods that drive the model moves.
//!
//! Under the `N(0, I)` coefficient priors both stages reduce to the same
//! shape: a precision `P = I + c·G_A` (with `G` a Gram matrix restricted to
//! the active set `A`) and a right-hand side `b_A`, giving the posterior
//! `N(P⁻¹b, P⁻¹)`. Given the other stage's coefficients and `Σ`, the
//! integrated likelihood of a model is
//!
//! ```text
//! log p(D | model, ·) = −½ log|P| + ½ b'P⁻¹b + const
//! ```
//!
//! where the constant does not depend on the model, so differences of these
//! values are exact log conditional Bayes factors.

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{dot, Cholesky, Cov2, Matrix, SymMatrix};
use crate::model::{FirstStageModel, ModelPair, SecondStageModel};
use crate::scalar::Scalar;

/// Magnitude below which an included endogenous coefficient is treated as
/// degenerate when building the doubled system.
pub const ENDOGENOUS_ZERO_TOL: f64 = 1e-12;

/// One Gibbs state `(ρ, L, λ, M, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterState<T> {
    /// `(β, γ)`, length `1 + p`.
    pub rho: Vec<T>,
    /// `(δ, τ)`, length `q + p`.
    pub lambda: Vec<T>,
    pub sigma: Cov2<T>,
    pub pair: ModelPair,
}

impl<T: Scalar> ParameterState<T> {
    /// Full models, zero coefficients, `Σ = I`.
    pub fn initial(p: usize, q: usize) -> Self {
        Self {
            rho: vec![T::zero(); 1 + p],
            lambda: vec![T::zero(); q + p],
            sigma: Cov2::identity(),
            pair: ModelPair::full(p, q),
        }
    }

    pub fn beta(&self) -> T {
        self.rho[0]
    }

    /// Checks structural zeros, pair validity and positive definiteness.
    pub fn check(&self) -> Result<()> {
        let l = &self.pair.second.0;
        let m = &self.pair.first.include;
        if l.len() != self.rho.len() || m.len() != self.lambda.len() {
            return Err(Error::InvalidModel(
                "indicator lengths do not match coefficients".into(),
            ));
        }
        if let Some(j) = (0..l.len()).find(|&j| !l.get(j) && self.rho[j] != T::zero()) {
            return Err(Error::InvalidModel(format!(
                "rho[{j}] is non-zero outside L"
            )));
        }
        if let Some(k) = (0..m.len()).find(|&k| !m.get(k) && self.lambda[k] != T::zero()) {
            return Err(Error::InvalidModel(format!(
                "lambda[{k}] is non-zero outside M"
            )));
        }
        if !self.pair.is_valid() {
            return Err(Error::InvalidModel("pair violates M \\ L ≠ ∅".into()));
        }
        if !self.sigma.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { pivot: 1 });
        }
        Ok(())
    }
}

/// Gaussian conditional posterior over the active coefficients of one stage.
#[derive(Debug, Clone)]
pub struct GaussianPosterior<T> {
    active: Vec<usize>,
    mean: Vec<T>,
    precision: SymMatrix<T>,
    chol: Cholesky<T>,
    /// `L⁻¹ b`, with `L L'` the precision.
    whitened: Vec<T>,
}

impl<T: Scalar> GaussianPosterior<T> {
    fn from_parts(active: Vec<usize>, precision: SymMatrix<T>, rhs: Vec<T>) -> Result<Self> {
        let chol = Cholesky::new(&precision)?;
        let whitened = chol.solve_lower(&rhs);
        let mean = chol.solve_upper(&whitened);
        Ok(Self {
            active,
            mean,
            precision,
            chol,
            whitened,
        })
    }

    /// Builds `N(P⁻¹b, P⁻¹)` with `P = I + scale·gram[A, A]` and `b = rhs[A]`.
    fn restricted(gram: &SymMatrix<T>, scale: T, rhs: &[T], active: Vec<usize>) -> Result<Self> {
        let precision = gram.principal(&active).identity_plus_scaled(scale);
        let b = active.iter().map(|&j| rhs[j]).collect();
        Self::from_parts(active, precision, b)
    }

    /// Active slot indices, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    pub fn mean_hat(&self) -> &[T] {
        &self.mean
    }

    pub fn precision(&self) -> &SymMatrix<T> {
        &self.precision
    }

    /// `−½ log|P| + ½ m'Pm`; zero for the empty model.
    pub fn log_integrated_likelihood(&self) -> T {
        let half = T::lit(0.5);
        half * dot(&self.whitened, &self.whitened) - half * self.chol.log_det()
    }

    /// One draw of the active coefficients.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let z: Vec<T> = (0..self.dim()).map(|_| T::std_normal(rng)).collect();
        let dev = self.chol.solve_upper(&z);
        self.mean.iter().zip(dev).map(|(&m, d)| m + d).collect()
    }

    /// Draws and writes into a full-length vector, zeroing inactive slots.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, full: &mut [T]) {
        let draw = self.sample(rng);
        full.iter_mut().for_each(|v| *v = T::zero());
        for (&j, v) in self.active.iter().zip(draw) {
            full[j] = v;
        }
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// `ε = Y − Vρ`.
pub fn outcome_residual<T: Scalar>(data: &Dataset<T>, rho: &[T]) -> Result<Vec<T>> {
    check_len("rho", 1 + data.p(), rho.len())?;
    let fit = data.outcome_design().matvec(rho)?;
    Ok(data.y().iter().zip(fit).map(|(&y, f)| y - f).collect())
}

/// `η = X − Uλ`.
pub fn instrument_residual<T: Scalar>(data: &Dataset<T>, lambda: &[T]) -> Result<Vec<T>> {
    check_len("lambda", data.q() + data.p(), lambda.len())?;
    let fit = data.instrument_design().matvec(lambda)?;
    Ok(data.x().iter().zip(fit).map(|(&x, f)| x - f).collect())
}

/// Structural residuals `(ε, η)` at a state.
pub fn residuals<T: Scalar>(
    data: &Dataset<T>,
    state: &ParameterState<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    Ok((
        outcome_residual(data, &state.rho)?,
        instrument_residual(data, &state.lambda)?,
    ))
}

/// Everything about the outcome equation that depends on `(λ, Σ)` but not
/// on `L`.
#[derive(Debug, Clone)]
pub struct OutcomeConditional<'a, T> {
    data: &'a Dataset<T>,
    xi: T,
    /// `V'Ỹ / ξ` over all `1 + p` slots.
    rhs: Vec<T>,
}

impl<'a, T: Scalar> OutcomeConditional<'a, T> {
    /// With `ξ = σ11 − σ21²/σ22` and `Ỹ = Y − (σ21/σ22)η`.
    pub fn new(data: &'a Dataset<T>, lambda: &[T], sigma: &Cov2<T>) -> Result<Self> {
        if !(sigma.s22 > T::zero()) {
            return Err(Error::InvalidCovariance {
                which: "sigma22",
                value: sigma.s22.as_f64(),
            });
        }
        let xi = sigma.xi();
        if !(xi > T::zero()) {
            return Err(Error::InvalidCovariance {
                which: "xi",
                value: xi.as_f64(),
            });
        }
        let eta = instrument_residual(data, lambda)?;
        let c = sigma.s12 / sigma.s22;
        let y_tilde: Vec<T> = data
            .y()
            .iter()
            .zip(&eta)
            .map(|(&y, &e)| y - c * e)
            .collect();
        let rhs = data
            .outcome_design()
            .tr_matvec(&y_tilde)?
            .into_iter()
            .map(|v| v / xi)
            .collect();
        Ok(Self { data, xi, rhs })
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    pub fn posterior(&self, model: &SecondStageModel) -> Result<GaussianPosterior<T>> {
        check_len("second-stage model", self.rhs.len(), model.0.len())?;
        GaussianPosterior::restricted(
            self.data.outcome_gram(),
            T::one() / self.xi,
            &self.rhs,
            model.0.active(),
        )
    }

    pub fn log_integrated_likelihood(&self, model: &SecondStageModel) -> Result<T> {
        Ok(self.posterior(model)?.log_integrated_likelihood())
    }
}

/// Everything about the instrument equation that depends on `(ρ, Σ)` but not
/// on `M`.
///
/// Both constructions reduce to `P = I + c·U'U` and `b = U'r` for a scalar
/// `c` and a length-`n` vector `r`:
///
/// * doubled system: whitening each observation pair by `Ψ` gives
///   `T'T = (1'Ψ⁻¹1)·U'U` and `T'S = U'(a·Y* + b·X)` with `(a, b) = Ψ⁻¹1`;
/// * seemingly-unrelated form: `c = 1/ω` and `r = X*/ω`.
#[derive(Debug, Clone)]
pub struct InstrumentConditional<'a, T> {
    data: &'a Dataset<T>,
    gram_scale: T,
    rhs: Vec<T>,
}

impl<'a, T: Scalar> InstrumentConditional<'a, T> {
    /// Chooses the construction by whether the endogenous regressor is in the
    /// outcome model, not by the value of `β`.
    pub fn new(
        data: &'a Dataset<T>,
        rho: &[T],
        sigma: &Cov2<T>,
        endogenous_included: bool,
    ) -> Result<Self> {
        if endogenous_included {
            Self::doubled(data, rho, sigma)
        } else {
            Self::seemingly_unrelated(data, rho, sigma)
        }
    }

    /// Requires `β ≠ 0`.
    pub fn doubled(data: &'a Dataset<T>, rho: &[T], sigma: &Cov2<T>) -> Result<Self> {
        let eps = outcome_residual(data, rho)?;
        let beta = rho[0];
        if !(beta.abs() >= T::lit(ENDOGENOUS_ZERO_TOL)) {
            return Err(Error::DegenerateEndogenous {
                beta: beta.as_f64(),
            });
        }
        let psi = doubled_error_covariance(beta, sigma);
        let chol = Cholesky::new(&psi.to_sym())?;
        let ab = chol.solve(&[T::one(), T::one()]);
        let (a, b) = (ab[0], ab[1]);
        // Y* = (Y − Wγ)/β = X + ε/β
        let target: Vec<T> = data
            .x()
            .iter()
            .zip(&eps)
            .map(|(&x, &e)| (a + b) * x + a * e / beta)
            .collect();
        Ok(Self {
            data,
            gram_scale: a + b,
            rhs: data.instrument_design().tr_matvec(&target)?,
        })
    }

    /// Form used when `β` is structurally zero. With `ρ` fixed, `ε` is known
    /// and `η | ε ~ N((σ21/σ11)ε, ω)`, so the construction is valid for any
    /// `β`; it coincides with [`Self::doubled`] whenever both apply.
    pub fn seemingly_unrelated(data: &'a Dataset<T>, rho: &[T], sigma: &Cov2<T>) -> Result<Self> {
        if !(sigma.s11 > T::zero()) {
            return Err(Error::InvalidCovariance {
                which: "sigma11",
                value: sigma.s11.as_f64(),
            });
        }
        let omega = sigma.omega();
        if !(omega > T::zero()) {
            return Err(Error::InvalidCovariance {
                which: "omega",
                value: omega.as_f64(),
            });
        }
        let eps = outcome_residual(data, rho)?;
        let c = sigma.s12 / sigma.s11;
        let target: Vec<T> = data
            .x()
            .iter()
            .zip(&eps)
            .map(|(&x, &e)| (x - c * e) / omega)
            .collect();
        Ok(Self {
            data,
            gram_scale: T::one() / omega,
            rhs: data.instrument_design().tr_matvec(&target)?,
        })
    }

    pub fn posterior(&self, model: &FirstStageModel) -> Result<GaussianPosterior<T>> {
        check_len("first-stage model", self.rhs.len(), model.include.len())?;
        GaussianPosterior::restricted(
            self.data.instrument_gram(),
            self.gram_scale,
            &self.rhs,
            model.include.active(),
        )
    }

    pub fn log_integrated_likelihood(&self, model: &FirstStageModel) -> Result<T> {
        Ok(self.posterior(model)?.log_integrated_likelihood())
    }
}

/// `Ψ`, the covariance of `(ϑ, η)` with `ϑ = η + ε/β`.
pub fn doubled_error_covariance<T: Scalar>(beta: T, sigma: &Cov2<T>) -> Cov2<T> {
    let two = T::lit(2.0);
    Cov2::new(
        sigma.s22 + sigma.s11 / (beta * beta) + two * sigma.s12 / beta,
        sigma.s22 + sigma.s12 / beta,
        sigma.s22,
    )
}

/// The whitened `2n`-row regression used for the first-stage update when the
/// endogenous regressor is in the outcome model.
#[derive(Debug, Clone)]
pub struct DoubledSystem<T> {
    /// `[Ŷ; X̂]`, length `2n`.
    pub s: Vec<T>,
    /// `2n × m`, columns restricted to `M`.
    pub t: Matrix<T>,
    pub psi: Cov2<T>,
}

/// Builds the doubled system explicitly.
///
/// Each observation pair `[a_i, b_i]` is whitened as `[a_i, b_i]·Φ'⁻¹`
/// where `Φ Φ' = Ψ`, so the whitened errors have identity covariance. The
/// first `n` rows hold the first whitened component, the last `n` the second.
pub fn build_doubled_system<T: Scalar>(
    data: &Dataset<T>,
    rho: &[T],
    sigma: &Cov2<T>,
    model: &FirstStageModel,
) -> Result<DoubledSystem<T>> {
    check_len(
        "first-stage model",
        data.q() + data.p(),
        model.include.len(),
    )?;
    let eps = outcome_residual(data, rho)?;
    let beta = rho[0];
    if !(beta.abs() >= T::lit(ENDOGENOUS_ZERO_TOL)) {
        return Err(Error::DegenerateEndogenous {
            beta: beta.as_f64(),
        });
    }
    let psi = doubled_error_covariance(beta, sigma);
    let chol = Cholesky::new(&psi.to_sym())?;
    let n = data.n();
    let active = model.include.active();
    let u = data.instrument_design();
    let mut s = vec![T::zero(); 2 * n];
    let mut t = Matrix::zeros(2 * n, active.len());
    // Shared column pair [u, u] whitens to u·c with c = Φ⁻¹1.
    let c = chol.solve_lower(&[T::one(), T::one()]);
    for i in 0..n {
        let y_star = data.x()[i] + eps[i] / beta;
        let sy = chol.solve_lower(&[y_star, data.x()[i]]);
        s[i] = sy[0];
        s[n + i] = sy[1];
        for (col, &j) in active.iter().enumerate() {
            let uij = u[(i, j)];
            t[(i, col)] = uij * c[0];
            t[(n + i, col)] = uij * c[1];
        }
    }
    Ok(DoubledSystem { s, t, psi })
}

/// `(ρ̂_L, Ξ_L)` given `(λ, Σ)`.
pub fn rho_posterior<T: Scalar>(
    data: &Dataset<T>,
    lambda: &[T],
    sigma: &Cov2<T>,
    model: &SecondStageModel,
) -> Result<GaussianPosterior<T>> {
    OutcomeConditional::new(data, lambda, sigma)?.posterior(model)
}

/// `(λ̂_M, Ω_M)` through the doubled system; requires `β ≠ 0`.
pub fn lambda_posterior<T: Scalar>(
    data: &Dataset<T>,
    rho: &[T],
    sigma: &Cov2<T>,
    model: &FirstStageModel,
) -> Result<GaussianPosterior<T>> {
    InstrumentConditional::doubled(data, rho, sigma)?.posterior(model)
}

/// `(λ̂_M, Ω_M)` in the seemingly-unrelated form used when `β = 0`.
pub fn sur_lambda_posterior<T: Scalar>(
    data: &Dataset<T>,
    rho: &[T],
    sigma: &Cov2<T>,
    model: &FirstStageModel,
) -> Result<GaussianPosterior<T>> {
    InstrumentConditional::seemingly_unrelated(data, rho, sigma)?.posterior(model)
}

/// Log integrated likelihood of `L` given `(λ, Σ)`, up to an `L`-free constant.
pub fn log_integrated_lik_second<T: Scalar>(
    data: &Dataset<T>,
    lambda: &[T],
    sigma: &Cov2<T>,
    model: &SecondStageModel,
) -> Result<T> {
    Ok(rho_posterior(data, lambda, sigma, model)?.log_integrated_likelihood())
}

/// Log integrated likelihood of `M` given `(ρ, Σ)`, up to an `M`-free
/// constant. Uses the doubled system when `ρ[0] ≠ 0` and the
/// seemingly-unrelated form when `ρ[0] = 0`.
pub fn log_integrated_lik_first<T: Scalar>(
    data: &Dataset<T>,
    rho: &[T],
    sigma: &Cov2<T>,
    model: &FirstStageModel,
) -> Result<T> {
    check_len("rho", 1 + data.p(), rho.len())?;
    let cond = InstrumentConditional::new(data, rho, sigma, rho[0] != T::zero())?;
    cond.log_integrated_likelihood(model)
}
