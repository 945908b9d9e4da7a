//! Replicated simulation study comparing IVBMA against the fixed-model IV
//! sampler.
//!
//! Replicate `r` draws its dataset from stream `3r` of the master seed and
//! runs the IVBMA and IV chains on streams `3r + 1` and `3r + 2`, so results
//! are independent of thread count and completion order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::RngStream;
use crate::sampler::{run_chain, Mode, SamplerConfig};
use crate::simulate::{generate, SimSpec, Truth};
use crate::summary::{quantile_sorted, replicate_mse, summarize, MseReport, PosteriorSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reps: usize,
    /// Design; `spec.seed` is the master seed.
    pub spec: SimSpec,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub modes: Vec<Mode>,
}

impl StudyConfig {
    /// Reference design at the reference chain length (50,000 / 10,000).
    pub fn full_scale(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            spec: SimSpec {
                seed,
                ..SimSpec::default()
            },
            iterations: 50_000,
            burn_in: 10_000,
            thin: 1,
            modes: vec![Mode::Ivbma, Mode::Iv],
        }
    }

    /// Reference design with shorter chains (10,000 / 2,000).
    pub fn desk_scale(reps: usize, seed: u64) -> Self {
        Self {
            iterations: 10_000,
            burn_in: 2_000,
            ..Self::full_scale(reps, seed)
        }
    }

    /// Chain settings for `mode` on replicate `replicate`.
    pub fn chain_config(&self, mode: Mode, replicate: usize) -> SamplerConfig {
        let offset = match mode {
            Mode::Ivbma => 1,
            Mode::Iv => 2,
        };
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.spec.seed,
            stream: 3 * replicate as u64 + offset,
            mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub mode: Mode,
    pub summary: PosteriorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub methods: Vec<MethodResult>,
}

impl ReplicateResult {
    pub fn summary(&self, mode: Mode) -> Option<&PosteriorSummary> {
        self.methods
            .iter()
            .find(|m| m.mode == mode)
            .map(|m| &m.summary)
    }
}

/// Median and interquartile range across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            median: quantile_sorted(&v, 0.5),
            q25: quantile_sorted(&v, 0.25),
            q75: quantile_sorted(&v, 0.75),
        }
    }
}

/// Per-variable aggregate for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableAggregate {
    pub name: String,
    pub truth: f64,
    /// Median across replicates of the posterior mean.
    pub median_estimate: f64,
    pub inclusion: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub mode: Mode,
    pub second: Vec<VariableAggregate>,
    pub first: Vec<VariableAggregate>,
    pub mse: MseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub replicates: Vec<ReplicateResult>,
    pub aggregates: Vec<MethodAggregate>,
}

impl StudyReport {
    pub fn aggregate(&self, mode: Mode) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.mode == mode)
    }
}

/// Dataset of replicate `index`.
pub fn replicate_dataset(config: &StudyConfig, index: usize) -> Result<(Dataset<f64>, Truth)> {
    let mut rng = RngStream::with_stream(config.spec.seed, 3 * index as u64);
    generate::<f64, _>(&config.spec, &mut rng)
}

fn run_replicate(config: &StudyConfig, index: usize) -> Result<ReplicateResult> {
    let (data, truth) = replicate_dataset(config, index)?;
    let methods = config
        .modes
        .iter()
        .map(|&mode| {
            let trace = run_chain(&data, &config.chain_config(mode, index))?;
            let summary = summarize(&trace, &truth.second_names, &truth.first_names)?;
            Ok(MethodResult { mode, summary })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateResult { index, methods })
}

fn aggregate_stage(
    summaries: &[&PosteriorSummary],
    truth: &[f64],
    pick: impl Fn(&PosteriorSummary) -> &[crate::summary::VariableSummary],
) -> Vec<VariableAggregate> {
    (0..truth.len())
        .map(|j| {
            let means: Vec<f64> = summaries.iter().map(|s| pick(s)[j].mean).collect();
            let probs: Vec<f64> = summaries
                .iter()
                .map(|s| pick(s)[j].inclusion_prob)
                .collect();
            VariableAggregate {
                name: pick(summaries[0])[j].name.clone(),
                truth: truth[j],
                median_estimate: Spread::of(&means).median,
                inclusion: Spread::of(&probs),
            }
        })
        .collect()
}

/// Runs the study on `threads` workers (`None` uses rayon's default).
pub fn run_study(config: &StudyConfig, threads: Option<usize>) -> Result<StudyReport> {
    if config.reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    if config.modes.is_empty() {
        return Err(Error::InvalidConfig("no sampler modes requested".into()));
    }
    config.spec.validate()?;
    config.chain_config(Mode::Iv, 0).validate()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let replicates = pool.install(|| {
        (0..config.reps)
            .into_par_iter()
            .map(|r| run_replicate(config, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let truth = config.spec.coefficients();
    let aggregates = config
        .modes
        .iter()
        .map(|&mode| {
            let sums: Vec<&PosteriorSummary> = replicates
                .iter()
                .map(|r| r.summary(mode).expect("every replicate runs every mode"))
                .collect();
            let owned: Vec<PosteriorSummary> = sums.iter().map(|&s| s.clone()).collect();
            let mse = replicate_mse(&owned, &vec![truth.clone(); owned.len()])?;
            Ok(MethodAggregate {
                mode,
                second: aggregate_stage(&sums, &truth.rho, |s| &s.second),
                first: aggregate_stage(&sums, &truth.lambda, |s| &s.first),
                mse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        config: config.clone(),
        replicates,
        aggregates,
    })
}
