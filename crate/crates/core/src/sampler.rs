//! MC3-within-Gibbs sweeps and the chain driver.
//!
//! An IVBMA sweep runs, in order: outcome-model move, `ρ` draw,
//! instrument-model move, `λ` draw, `Σ` draw. Each model move proposes a
//! single-flip neighbour and accepts with probability `min{1, CBF·1{(L,M)∈A}}`
//! evaluated in log space. The IV sweep is the same without the model moves.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{inv_wishart_sample, Cov2, RngStream, SymMatrix};
use crate::model::{is_valid_pair, FirstStageModel, Indicator, SecondStageModel};
use crate::posterior::{
    instrument_residual, outcome_residual, InstrumentConditional, OutcomeConditional,
    ParameterState,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Model averaging over both stages.
    Ivbma,
    /// Fixed full models.
    Iv,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ivbma => "ivbma",
            Mode::Iv => "iv",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ivbma" => Ok(Mode::Ivbma),
            "iv" => Ok(Mode::Iv),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

/// How model proposals are resolved. `RejectAll` still draws the proposals
/// but never accepts, freezing the models; it exists for testing the
/// reduction to the IV sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProposalPolicy {
    #[default]
    Mc3,
    RejectAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stream id under `seed`; distinct chains sharing a seed use distinct
    /// streams.
    #[serde(default)]
    pub stream: u64,
    pub mode: Mode,
}

impl SamplerConfig {
    pub fn new(iterations: usize, burn_in: usize, seed: u64, mode: Mode) -> Self {
        Self {
            iterations,
            burn_in,
            thin: 1,
            seed,
            stream: 0,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be positive".into()));
        }
        Ok(())
    }

    /// Number of records a chain keeps.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// What happened during one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOutcome {
    pub second_accepted: bool,
    pub first_accepted: bool,
    /// The doubled system could not be formed; `(M, λ)` were kept.
    pub doubled_system_failed: bool,
}

/// Metropolis decision on a log ratio.
fn accept<T: Scalar, R: Rng + ?Sized>(log_alpha: T, rng: &mut R) -> bool {
    if log_alpha >= T::zero() {
        // Still consume a uniform so the stream layout does not depend on α.
        let _ = T::open01(rng);
        return true;
    }
    T::open01(rng).ln() < log_alpha
}

/// Draws `Σ ~ IW(I₂ + Q, n + 3)` given the current coefficients, where `Q`
/// is the residual cross-product matrix.
pub fn draw_sigma<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
) -> Result<()> {
    let eps = outcome_residual(data, &state.rho)?;
    let eta = instrument_residual(data, &state.lambda)?;
    let mut q = [T::zero(); 3];
    for (&e, &h) in eps.iter().zip(&eta) {
        q[0] = q[0] + e * e;
        q[1] = q[1] + e * h;
        q[2] = q[2] + h * h;
    }
    let scale = Cov2::new(T::one() + q[0], q[1], T::one() + q[2]).to_sym();
    let df = T::lit(data.n() as f64 + 3.0);
    let draw: SymMatrix<T> = inv_wishart_sample(&scale, df, rng)?;
    let sigma = Cov2::from_sym(&draw)?;
    if !sigma.is_positive_definite() {
        return Err(Error::NotPositiveDefinite { pivot: 1 });
    }
    state.sigma = sigma;
    Ok(())
}

/// First-stage move and draw. Returns `(accepted, failed)`.
fn update_first_stage<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
    moves: Option<ProposalPolicy>,
) -> Result<(bool, bool)> {
    let endogenous = state.pair.second.includes_endogenous();
    let proposal = moves.map(|policy| {
        let (ind, _) = state.pair.first.include.propose_neighbor(rng);
        (state.pair.first.with_indicator(ind), policy)
    });
    let cond = match InstrumentConditional::new(data, &state.rho, &state.sigma, endogenous) {
        Ok(c) => c,
        Err(e) if e.is_doubled_system_failure() => return Ok((false, true)),
        Err(e) => return Err(e),
    };
    let mut accepted = false;
    let current = cond.posterior(&state.pair.first)?;
    let chosen = match proposal {
        Some((m_new, ProposalPolicy::Mc3)) if is_valid_pair(&state.pair.second, &m_new) => {
            let cand = cond.posterior(&m_new)?;
            let log_alpha = cand.log_integrated_likelihood() - current.log_integrated_likelihood();
            if accept(log_alpha, rng) {
                state.pair.first = m_new;
                accepted = true;
                cand
            } else {
                current
            }
        }
        _ => current,
    };
    chosen.sample_into(rng, &mut state.lambda);
    Ok((accepted, false))
}

fn sweep_impl<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
    moves: Option<ProposalPolicy>,
) -> Result<SweepOutcome> {
    let mut out = SweepOutcome::default();

    // Outcome-equation model move and ρ draw.
    let proposal = moves.map(|policy| {
        let (ind, _) = state.pair.second.0.propose_neighbor(rng);
        (SecondStageModel(ind), policy)
    });
    let cond = OutcomeConditional::new(data, &state.lambda, &state.sigma)?;
    let current = cond.posterior(&state.pair.second)?;
    let chosen = match proposal {
        Some((l_new, ProposalPolicy::Mc3)) if is_valid_pair(&l_new, &state.pair.first) => {
            let cand = cond.posterior(&l_new)?;
            let log_alpha = cand.log_integrated_likelihood() - current.log_integrated_likelihood();
            if accept(log_alpha, rng) {
                state.pair.second = l_new;
                out.second_accepted = true;
                cand
            } else {
                current
            }
        }
        _ => current,
    };
    chosen.sample_into(rng, &mut state.rho);

    // Instrument-equation model move and λ draw.
    let (accepted, failed) = update_first_stage(data, state, rng, moves)?;
    out.first_accepted = accepted;
    out.doubled_system_failed = failed;

    draw_sigma(data, state, rng)?;
    Ok(out)
}

/// One IVBMA sweep, mutating `state` in place.
pub fn ivbma_sweep<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
) -> Result<SweepOutcome> {
    sweep_impl(data, state, rng, Some(ProposalPolicy::Mc3))
}

/// IVBMA sweep with an explicit proposal policy.
pub fn ivbma_sweep_with<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
    policy: ProposalPolicy,
) -> Result<SweepOutcome> {
    sweep_impl(data, state, rng, Some(policy))
}

/// One sweep of the fixed-model IV Gibbs sampler. `state` must hold the full
/// models.
pub fn iv_sweep<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    state: &mut ParameterState<T>,
    rng: &mut R,
) -> Result<SweepOutcome> {
    if state.pair.second.0.size() != state.pair.second.0.len()
        || state.pair.first.include.size() != state.pair.first.include.len()
    {
        return Err(Error::InvalidModel(
            "IV sweep requires the full models".into(),
        ));
    }
    sweep_impl(data, state, rng, None)
}

/// One kept draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw<T> {
    pub rho: Vec<T>,
    pub lambda: Vec<T>,
    pub sigma: Cov2<T>,
    pub second: Indicator,
    pub first: Indicator,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub proposed: usize,
    pub accepted: usize,
}

impl MoveCounts {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<T> {
    pub config: SamplerConfig,
    pub n_covariates: usize,
    pub n_instruments: usize,
    pub draws: Vec<Draw<T>>,
    pub second_moves: MoveCounts,
    pub first_moves: MoveCounts,
    pub doubled_system_failures: usize,
    /// `(|L|, |M|)` after every sweep, burn-in included.
    pub model_sizes: Vec<(u32, u32)>,
}

impl<T: Scalar> ChainTrace<T> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn second_len(&self) -> usize {
        1 + self.n_covariates
    }

    pub fn first_len(&self) -> usize {
        self.n_instruments + self.n_covariates
    }
}

/// Runs one chain from the default initial state.
pub fn run_chain<T: Scalar>(data: &Dataset<T>, config: &SamplerConfig) -> Result<ChainTrace<T>> {
    run_chain_from(
        data,
        config,
        ParameterState::initial(data.p(), data.q()),
        ProposalPolicy::Mc3,
    )
}

/// Runs one chain from a caller-supplied state.
pub fn run_chain_from<T: Scalar>(
    data: &Dataset<T>,
    config: &SamplerConfig,
    mut state: ParameterState<T>,
    policy: ProposalPolicy,
) -> Result<ChainTrace<T>> {
    config.validate()?;
    if state.rho.len() != 1 + data.p() || state.lambda.len() != data.q() + data.p() {
        return Err(Error::InvalidConfig(
            "initial state does not match the data dimensions".into(),
        ));
    }
    if state.pair.first.n_instruments != data.q() {
        return Err(Error::InvalidConfig(
            "initial first-stage model has the wrong instrument count".into(),
        ));
    }
    state.check()?;

    let mut rng = RngStream::with_stream(config.seed, config.stream);
    let mut trace = ChainTrace {
        config: config.clone(),
        n_covariates: data.p(),
        n_instruments: data.q(),
        draws: Vec::with_capacity(config.kept()),
        second_moves: MoveCounts::default(),
        first_moves: MoveCounts::default(),
        doubled_system_failures: 0,
        model_sizes: Vec::with_capacity(config.iterations),
    };
    let moves = match config.mode {
        Mode::Ivbma => Some(policy),
        Mode::Iv => {
            if state.pair != crate::model::ModelPair::full(data.p(), data.q()) {
                return Err(Error::InvalidConfig(
                    "IV mode requires the full models".into(),
                ));
            }
            None
        }
    };

    for it in 0..config.iterations {
        let out =
            sweep_impl(data, &mut state, &mut rng, moves).map_err(|e| Error::AtIteration {
                iteration: it,
                source: Box::new(e),
            })?;
        if moves.is_some() {
            trace.second_moves.proposed += 1;
            trace.first_moves.proposed += usize::from(!out.doubled_system_failed);
        }
        trace.second_moves.accepted += usize::from(out.second_accepted);
        trace.first_moves.accepted += usize::from(out.first_accepted);
        trace.doubled_system_failures += usize::from(out.doubled_system_failed);
        trace.model_sizes.push((
            state.pair.second.0.size() as u32,
            state.pair.first.include.size() as u32,
        ));
        if it >= config.burn_in && (it - config.burn_in + 1).is_multiple_of(config.thin) {
            trace.draws.push(Draw {
                rho: state.rho.clone(),
                lambda: state.lambda.clone(),
                sigma: state.sigma,
                second: state.pair.second.0.clone(),
                first: state.pair.first.include.clone(),
            });
        }
    }
    Ok(trace)
}

/// Rebuilds the model pair of a recorded draw.
pub fn draw_pair<T>(trace: &ChainTrace<T>, draw: &Draw<T>) -> crate::model::ModelPair {
    crate::model::ModelPair {
        second: SecondStageModel(draw.second.clone()),
        first: FirstStageModel {
            include: draw.first.clone(),
            n_instruments: trace.n_instruments,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Matrix;
    use crate::posterior::rho_posterior;

    fn small_data(seed: u64) -> Dataset<f64> {
        // p = 2, q = 2, instruments strong, W1 active in both stages.
        let mut rng = RngStream::new(seed);
        let n = 60;
        let w = Matrix::from_fn(n, 2, |_, _| f64::std_normal(&mut rng));
        let z = Matrix::from_fn(n, 2, |_, _| f64::std_normal(&mut rng));
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let e = f64::std_normal(&mut rng);
            let h = 0.5 * e + f64::std_normal(&mut rng);
            let xi = 2.0 * z[(i, 0)] + w[(i, 0)] + h;
            x.push(xi);
            y.push(1.0 * xi + 1.5 * w[(i, 0)] + e);
        }
        Dataset::new(y, x, w, z).unwrap()
    }

    #[test]
    fn counts_records() {
        let d = small_data(1);
        let cfg = SamplerConfig::new(10, 0, 3, Mode::Ivbma);
        let t = run_chain(&d, &cfg).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.model_sizes.len(), 10);
        let mut cfg = SamplerConfig::new(100, 20, 3, Mode::Iv);
        cfg.thin = 8;
        assert_eq!(run_chain(&d, &cfg).unwrap().len(), 10);
    }

    #[test]
    fn rejects_bad_config() {
        let d = small_data(1);
        assert!(run_chain(&d, &SamplerConfig::new(10, 10, 0, Mode::Iv)).is_err());
        assert!(run_chain(&d, &SamplerConfig::new(0, 0, 0, Mode::Iv)).is_err());
        let mut c = SamplerConfig::new(10, 0, 0, Mode::Iv);
        c.thin = 0;
        assert!(run_chain(&d, &c).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let d = small_data(2);
        let cfg = SamplerConfig::new(200, 50, 17, Mode::Ivbma);
        assert_eq!(run_chain(&d, &cfg).unwrap(), run_chain(&d, &cfg).unwrap());
        let mut other = cfg.clone();
        other.stream = 1;
        assert_ne!(
            run_chain(&d, &cfg).unwrap().draws,
            run_chain(&d, &other).unwrap().draws
        );
    }

    #[test]
    fn one_sweep_stays_valid() {
        let d = small_data(3);
        let mut s = ParameterState::initial(2, 2);
        let mut rng = RngStream::new(5);
        for _ in 0..50 {
            ivbma_sweep(&d, &mut s, &mut rng).unwrap();
            s.check().unwrap();
        }
    }

    #[test]
    fn iv_sweep_requires_full_models() {
        let d = small_data(3);
        let mut s = ParameterState::initial(2, 2);
        s.pair.second = SecondStageModel(Indicator::parse_bits("101").unwrap());
        assert!(iv_sweep(&d, &mut s, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn reject_all_freezes_models() {
        let d = small_data(4);
        let mut s = ParameterState::initial(2, 2);
        let mut rng = RngStream::new(8);
        for _ in 0..100 {
            let out = ivbma_sweep_with(&d, &mut s, &mut rng, ProposalPolicy::RejectAll).unwrap();
            assert!(!out.second_accepted && !out.first_accepted);
        }
        assert_eq!(s.pair, crate::model::ModelPair::full(2, 2));
    }

    #[test]
    fn invariants_hold_over_trace() {
        let d = small_data(5);
        let t = run_chain(&d, &SamplerConfig::new(2000, 0, 9, Mode::Ivbma)).unwrap();
        for draw in &t.draws {
            let pair = draw_pair(&t, draw);
            assert!(pair.is_valid());
            for (j, &r) in draw.rho.iter().enumerate() {
                assert!(draw.second.get(j) || r == 0.0);
            }
            for (k, &l) in draw.lambda.iter().enumerate() {
                assert!(draw.first.get(k) || l == 0.0);
            }
            assert!(draw.sigma.is_positive_definite());
        }
        assert!(t.second_moves.rate() > 0.0 && t.second_moves.rate() < 1.0);
        assert!(t.first_moves.rate() > 0.0 && t.first_moves.rate() < 1.0);
    }

    #[test]
    fn sigma_draw_moment() {
        // Fixed (ρ, λ): E[Σ⁻¹] = (n + 3)(I + Q)⁻¹.
        let d = small_data(6);
        let mut s = ParameterState::initial(2, 2);
        s.rho = vec![1.0, 1.5, 0.0];
        s.lambda = vec![2.0, 0.0, 1.0, 0.0];
        let eps = outcome_residual(&d, &s.rho).unwrap();
        let eta = instrument_residual(&d, &s.lambda).unwrap();
        let q = Cov2::new(
            1.0 + eps.iter().map(|e| e * e).sum::<f64>(),
            eps.iter().zip(&eta).map(|(e, h)| e * h).sum::<f64>(),
            1.0 + eta.iter().map(|h| h * h).sum::<f64>(),
        );
        let want = q.inverse();
        let nu = d.n() as f64 + 3.0;
        let mut rng = RngStream::new(10);
        let reps = 10_000;
        let mut acc = [0.0; 3];
        for _ in 0..reps {
            draw_sigma(&d, &mut s, &mut rng).unwrap();
            let p = s.sigma.inverse();
            acc[0] += p.s11 / reps as f64;
            acc[1] += p.s12 / reps as f64;
            acc[2] += p.s22 / reps as f64;
        }
        let err = ((acc[0] - nu * want.s11).powi(2)
            + 2.0 * (acc[1] - nu * want.s12).powi(2)
            + (acc[2] - nu * want.s22).powi(2))
        .sqrt();
        let norm = nu * (want.s11.powi(2) + 2.0 * want.s12.powi(2) + want.s22.powi(2)).sqrt();
        assert!(err / norm < 0.05);
    }

    #[test]
    fn rho_draws_match_conditional() {
        let d = small_data(7);
        let lambda = [2.0, 0.0, 1.0, 0.0];
        let sigma = Cov2::new(1.0, 0.5, 1.25);
        let l = SecondStageModel::full(2);
        let post = rho_posterior(&d, &lambda, &sigma, &l).unwrap();
        let mut rng = RngStream::new(3);
        let reps = 20_000;
        let mut mean = [0.0; 3];
        for _ in 0..reps {
            let x = post.sample(&mut rng);
            for k in 0..3 {
                mean[k] += x[k] / reps as f64;
            }
        }
        let cov = crate::kernels::Cholesky::new(post.precision())
            .unwrap()
            .inverse();
        for k in 0..3 {
            let se = (cov[(k, k)] / reps as f64).sqrt();
            assert!((mean[k] - post.mean_hat()[k]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn f32_chain_runs() {
        let d: Dataset<f32> = small_data(8).cast();
        let t = run_chain(&d, &SamplerConfig::new(300, 100, 1, Mode::Ivbma)).unwrap();
        assert_eq!(t.len(), 200);
        assert!(t.draws.iter().all(|dr| dr.sigma.is_positive_definite()));
    }
}
