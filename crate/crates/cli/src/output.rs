//! Output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use ivbma_core::format::sig17;
use ivbma_core::summary::model_size_trajectory;
use ivbma_core::{ChainTrace64, Dataset64, PosteriorSummary, SamplerConfig};

use crate::error::{CliError, Result};

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(dir, name, &s)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Serialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub average_size_second: f64,
    pub average_size_first: f64,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics<'a, M: Serialize> {
    pub manifest: &'a M,
    pub sampler: &'a SamplerConfig,
    pub draws: usize,
    pub acceptance_second: f64,
    pub acceptance_first: f64,
    pub average_size_second: f64,
    pub average_size_first: f64,
    pub doubled_system_failures: usize,
    /// Running mean model sizes over all sweeps, burn-in included.
    pub trajectory: Vec<TrajectoryPoint>,
}

impl<'a, M: Serialize> Diagnostics<'a, M> {
    pub fn new(manifest: &'a M, trace: &'a ChainTrace64, summary: &PosteriorSummary) -> Self {
        let traj = model_size_trajectory(std::slice::from_ref(trace));
        let trajectory = traj[0]
            .log_spaced()
            .into_iter()
            .map(|(iteration, s, f)| TrajectoryPoint {
                iteration,
                average_size_second: s,
                average_size_first: f,
            })
            .collect();
        Self {
            manifest,
            sampler: &trace.config,
            draws: summary.draws,
            acceptance_second: summary.acceptance_second,
            acceptance_first: summary.acceptance_first,
            average_size_second: summary.avg_size_second,
            average_size_first: summary.avg_size_first,
            doubled_system_failures: summary.doubled_system_failures,
            trajectory,
        }
    }
}

/// One row per kept draw: coefficients, `Σ`, then the model indicators.
pub fn trace_csv(trace: &ChainTrace64, second: &[String], first: &[String]) -> String {
    let mut header = vec!["draw".to_string()];
    header.extend(second.iter().map(|n| format!("rho[{n}]")));
    header.extend(first.iter().map(|n| format!("lambda[{n}]")));
    header.extend(["sigma11", "sigma12", "sigma22"].map(String::from));
    header.extend(second.iter().map(|n| format!("L[{n}]")));
    header.extend(first.iter().map(|n| format!("M[{n}]")));
    let mut out = csv_row(&header);
    for (i, d) in trace.draws.iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(d.rho.iter().map(|&v| sig17(v)));
        row.extend(d.lambda.iter().map(|&v| sig17(v)));
        row.extend([d.sigma.s11, d.sigma.s12, d.sigma.s22].map(sig17));
        row.extend(d.second.as_slice().iter().map(|&b| u8::from(b).to_string()));
        row.extend(d.first.as_slice().iter().map(|&b| u8::from(b).to_string()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `Y, X, W…, Z…` at 17 significant digits.
pub fn dataset_csv(data: &Dataset64) -> String {
    let names = data.names();
    let mut header = vec!["Y".to_string(), names.endogenous.clone()];
    header.extend(names.covariates.iter().cloned());
    header.extend(names.instruments.iter().cloned());
    let mut out = csv_row(&header);
    for i in 0..data.n() {
        let mut line = format!("{},{}", sig17(data.y()[i]), sig17(data.x()[i]));
        for v in data.w().row(i).iter().chain(data.z().row(i)) {
            let _ = write!(line, ",{}", sig17(*v));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn csv_row(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    let mut s = quoted.join(",");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ivbma_core::simulate::{generate_seeded, SimSpec};
    use ivbma_core::{run_chain, Mode};

    #[test]
    fn trace_layout() {
        let (data, truth) = generate_seeded::<f64>(&SimSpec::with_dims(30, 2, 1, 1)).unwrap();
        let trace = run_chain(&data, &SamplerConfig::new(12, 2, 1, Mode::Ivbma)).unwrap();
        let csv = trace_csv(&trace, &truth.second_names, &truth.first_names);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(
            lines[0],
            "draw,rho[X],rho[W1],rho[W2],lambda[Z1],lambda[W1],lambda[W2],sigma11,sigma12,sigma22,L[X],L[W1],L[W2],M[Z1],M[W1],M[W2]"
        );
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 16);
        let s11: f64 = fields[7].parse().unwrap();
        assert_eq!(s11, trace.draws[0].sigma.s11);
    }

    #[test]
    fn dataset_round_trips() {
        let (data, _) = generate_seeded::<f64>(&SimSpec::with_dims(5, 2, 1, 2)).unwrap();
        let csv = dataset_csv(&data);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "Y,X,W1,W2,Z1");
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first[0], data.y()[0]);
        assert_eq!(first[4], data.z()[(0, 0)]);
    }

    #[test]
    fn quotes_awkward_headers() {
        assert_eq!(csv_row(&["a,b".into(), "c".into()]), "\"a,b\",c\n");
    }
}
