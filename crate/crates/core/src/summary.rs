//! Posterior summaries of chain traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::sampler::ChainTrace;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Instrument equation, slots `Z1..Zq, W1..Wp`.
    First,
    /// Outcome equation, slots `X, W1..Wp`.
    Second,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::First => "first",
            Stage::Second => "second",
        }
    }
}

/// Marginal posterior of one coefficient.
///
/// `mean`, `sd` and the quantiles run over all kept draws, structural zeros
/// included. The `conditional_*` fields run over draws where the variable is
/// in the model and are `None` when it never is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub name: String,
    pub inclusion_prob: f64,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub conditional_mean: Option<f64>,
    pub conditional_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub second: Vec<VariableSummary>,
    pub first: Vec<VariableSummary>,
    pub avg_size_second: f64,
    pub avg_size_first: f64,
    pub acceptance_second: f64,
    pub acceptance_first: f64,
    pub doubled_system_failures: usize,
}

impl PosteriorSummary {
    pub fn stage(&self, stage: Stage) -> &[VariableSummary] {
        match stage {
            Stage::First => &self.first,
            Stage::Second => &self.second,
        }
    }

    /// Posterior means of `(ρ, λ)`.
    pub fn means(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.second.iter().map(|v| v.mean).collect(),
            self.first.iter().map(|v| v.mean).collect(),
        )
    }

    /// `stage,name,prob,mean,sd,q025,q50,q975`, second stage first, numbers
    /// to six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,name,prob,mean,sd,q025,q50,q975\n");
        for (stage, vars) in [(Stage::Second, &self.second), (Stage::First, &self.first)] {
            for v in vars {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    stage.as_str(),
                    v.name,
                    sig6(v.inclusion_prob),
                    sig6(v.mean),
                    sig6(v.sd),
                    sig6(v.q025),
                    sig6(v.q50),
                    sig6(v.q975),
                ));
            }
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize_variable(name: String, values: Vec<f64>, included: &[bool]) -> VariableSummary {
    let draws = values.len();
    let hits = included.iter().filter(|&&b| b).count();
    let cond: Vec<f64> = values
        .iter()
        .zip(included)
        .filter_map(|(&v, &b)| b.then_some(v))
        .collect();
    let (mean, sd) = mean_sd(&values);
    let mut sorted = values;
    sorted.sort_by(f64::total_cmp);
    let (cm, csd) = if cond.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&cond);
        (Some(m), Some(s))
    };
    VariableSummary {
        name,
        inclusion_prob: hits as f64 / draws as f64,
        mean,
        sd,
        q025: quantile_sorted(&sorted, 0.025),
        q50: quantile_sorted(&sorted, 0.5),
        q975: quantile_sorted(&sorted, 0.975),
        conditional_mean: cm,
        conditional_sd: csd,
    }
}

/// Summarises a trace, labelling slots with `second_names` (`X, W…`) and
/// `first_names` (`Z…, W…`).
pub fn summarize<T: Scalar>(
    trace: &ChainTrace<T>,
    second_names: &[String],
    first_names: &[String],
) -> Result<PosteriorSummary> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    for (names, len) in [
        (second_names, trace.second_len()),
        (first_names, trace.first_len()),
    ] {
        if names.len() != len {
            return Err(Error::DimensionMismatch {
                context: "variable names",
                expected: len,
                found: names.len(),
            });
        }
    }
    let second = (0..trace.second_len())
        .map(|j| {
            let vals = trace.draws.iter().map(|d| d.rho[j].as_f64()).collect();
            let inc: Vec<bool> = trace.draws.iter().map(|d| d.second.get(j)).collect();
            summarize_variable(second_names[j].clone(), vals, &inc)
        })
        .collect();
    let first = (0..trace.first_len())
        .map(|k| {
            let vals = trace.draws.iter().map(|d| d.lambda[k].as_f64()).collect();
            let inc: Vec<bool> = trace.draws.iter().map(|d| d.first.get(k)).collect();
            summarize_variable(first_names[k].clone(), vals, &inc)
        })
        .collect();
    let n = trace.len() as f64;
    Ok(PosteriorSummary {
        draws: trace.len(),
        second,
        first,
        avg_size_second: trace
            .draws
            .iter()
            .map(|d| d.second.size() as f64)
            .sum::<f64>()
            / n,
        avg_size_first: trace
            .draws
            .iter()
            .map(|d| d.first.size() as f64)
            .sum::<f64>()
            / n,
        acceptance_second: trace.second_moves.rate(),
        acceptance_first: trace.first_moves.rate(),
        doubled_system_failures: trace.doubled_system_failures,
    })
}

/// Draws of one coefficient restricted to iterations where it is included.
pub fn conditional_density<T: Scalar>(
    trace: &ChainTrace<T>,
    variable: usize,
    stage: Stage,
) -> Result<Vec<f64>> {
    let len = match stage {
        Stage::First => trace.first_len(),
        Stage::Second => trace.second_len(),
    };
    if variable >= len {
        return Err(Error::DimensionMismatch {
            context: "variable index",
            expected: len,
            found: variable,
        });
    }
    let out: Vec<f64> = trace
        .draws
        .iter()
        .filter_map(|d| match stage {
            Stage::First => d.first.get(variable).then(|| d.lambda[variable].as_f64()),
            Stage::Second => d.second.get(variable).then(|| d.rho[variable].as_f64()),
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NeverIncluded {
            stage: stage.as_str(),
            index: variable,
        });
    }
    Ok(out)
}

/// Running averages of model size for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeTrajectory {
    pub second: Vec<f64>,
    pub first: Vec<f64>,
}

impl SizeTrajectory {
    /// Values at 1-based iterations `1, 2, 4, …` plus the final one.
    pub fn log_spaced(&self) -> Vec<(usize, f64, f64)> {
        let n = self.second.len();
        let mut out = Vec::new();
        let mut it = 1usize;
        while it <= n {
            out.push((it, self.second[it - 1], self.first[it - 1]));
            it *= 2;
        }
        if n > 0 && out.last().map(|o| o.0) != Some(n) {
            out.push((n, self.second[n - 1], self.first[n - 1]));
        }
        out
    }
}

fn running_mean(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    xs.enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Cumulative mean of `|L|` and `|M|` over every sweep of each chain.
pub fn model_size_trajectory<T: Scalar>(traces: &[ChainTrace<T>]) -> Vec<SizeTrajectory> {
    traces
        .iter()
        .map(|t| SizeTrajectory {
            second: running_mean(t.model_sizes.iter().map(|s| f64::from(s.0))),
            first: running_mean(t.model_sizes.iter().map(|s| f64::from(s.1))),
        })
        .collect()
}

/// True coefficients of a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTruth {
    pub rho: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Replicate-averaged sums of squared errors of posterior means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub first: f64,
    pub second: f64,
    pub total: f64,
}

pub fn replicate_mse(
    summaries: &[PosteriorSummary],
    truths: &[CoefficientTruth],
) -> Result<MseReport> {
    if summaries.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            context: "summaries vs truths",
            expected: summaries.len(),
            found: truths.len(),
        });
    }
    if summaries.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let sq = |est: &[f64], truth: &[f64], context| -> Result<f64> {
        if est.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                context,
                expected: truth.len(),
                found: est.len(),
            });
        }
        Ok(est.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum())
    };
    let mut first = 0.0;
    let mut second = 0.0;
    for (s, t) in summaries.iter().zip(truths) {
        let (rho, lambda) = s.means();
        second += sq(&rho, &t.rho, "second-stage truth")?;
        first += sq(&lambda, &t.lambda, "first-stage truth")?;
    }
    let r = summaries.len() as f64;
    Ok(MseReport {
        first: first / r,
        second: second / r,
        total: (first + second) / r,
    })
}
