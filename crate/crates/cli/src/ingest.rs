//! CSV ingestion and column-role mapping.

use std::collections::HashMap;
use std::path::Path;

use ivbma_core::{Dataset, Matrix, VariableNames};

use crate::error::{CliError, Result};

pub const INTERCEPT: &str = "(Intercept)";

/// Numeric table read from a headed CSV file, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|j| self.columns[j].as_slice())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let at = e
        .position()
        .map(|p| format!(" (line {})", p.line()))
        .unwrap_or_default();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        kind => CliError::Input(format!("{}{at}: malformed CSV: {kind:?}", path.display())),
    }
}

/// Reads a CSV file whose first row holds column names. Every field must
/// parse as a finite number; decimal points are always `.`.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashMap::new();
    for (j, h) in headers.iter().enumerate() {
        if h.is_empty() {
            return Err(CliError::Input(format!(
                "{}: column {} has an empty header",
                path.display(),
                j + 1
            )));
        }
        if seen.insert(h.as_str(), j).is_some() {
            return Err(CliError::Input(format!(
                "{}: duplicate column {h:?}",
                path.display()
            )));
        }
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}, column {:?}: cannot parse {field:?} as a number",
                    path.display(),
                    headers[j]
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}, column {:?}: non-finite value {field:?}",
                    path.display(),
                    headers[j]
                )));
            }
            columns[j].push(value);
        }
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(Table { headers, columns })
}

/// Which column plays which part in the model.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Roles {
    pub response: String,
    pub endogenous: String,
    pub instruments: Vec<String>,
    pub covariates: Vec<String>,
}

/// Optional transformations; all off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Preprocess {
    /// Prepend a column of ones to the covariates.
    pub add_intercept: bool,
    /// Subtract the mean from each covariate and instrument.
    pub center: bool,
    /// Divide each covariate and instrument by its standard deviation.
    pub scale: bool,
}

fn standardize(name: &str, col: &mut [f64], pre: Preprocess) -> Result<()> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    if pre.scale {
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        if var <= 0.0 {
            return Err(CliError::Input(format!(
                "column {name:?} is constant and cannot be scaled"
            )));
        }
        let sd = var.sqrt();
        let shift = if pre.center { mean } else { 0.0 };
        col.iter_mut().for_each(|v| *v = (*v - shift) / sd);
    } else if pre.center {
        col.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(())
}

/// Assembles the dataset described by `roles` from `table`.
pub fn build_dataset(table: &Table, roles: &Roles, pre: Preprocess) -> Result<Dataset<f64>> {
    if roles.instruments.is_empty() {
        return Err(CliError::Input(
            "at least one instrument is required".into(),
        ));
    }
    let mut used = HashMap::new();
    let all = [
        ("response", &roles.response),
        ("endogenous", &roles.endogenous),
    ]
    .into_iter()
    .chain(roles.instruments.iter().map(|c| ("instrument", c)))
    .chain(roles.covariates.iter().map(|c| ("covariate", c)));
    for (role, name) in all {
        if table.column(name).is_none() {
            return Err(CliError::Input(format!(
                "{role} column {name:?} not found; available columns: {}",
                table.headers.join(", ")
            )));
        }
        if let Some(prev) = used.insert(name.as_str(), role) {
            return Err(CliError::Input(format!(
                "column {name:?} is used as both {prev} and {role}"
            )));
        }
    }
    let fetch = |name: &String| -> Result<Vec<f64>> {
        let mut col = table.column(name).expect("checked above").to_vec();
        standardize(name, &mut col, pre)?;
        Ok(col)
    };
    let n = table.rows();
    let mut cov_names = Vec::new();
    let mut cov_cols = Vec::new();
    if pre.add_intercept {
        if table.column(INTERCEPT).is_some() {
            return Err(CliError::Input(format!(
                "--add-intercept clashes with an existing column {INTERCEPT:?}"
            )));
        }
        cov_names.push(INTERCEPT.to_string());
        cov_cols.push(vec![1.0; n]);
    }
    for c in &roles.covariates {
        cov_names.push(c.clone());
        cov_cols.push(fetch(c)?);
    }
    let inst_cols = roles
        .instruments
        .iter()
        .map(fetch)
        .collect::<Result<Vec<_>>>()?;
    let names = VariableNames {
        endogenous: roles.endogenous.clone(),
        covariates: cov_names,
        instruments: roles.instruments.clone(),
    };
    let w = Matrix::from_columns(n, &cov_cols)?;
    let z = Matrix::from_columns(n, &inst_cols)?;
    let y = table
        .column(&roles.response)
        .expect("checked above")
        .to_vec();
    let x = table
        .column(&roles.endogenous)
        .expect("checked above")
        .to_vec();
    Ok(Dataset::with_names(y, x, w, z, names)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn roles() -> Roles {
        Roles {
            response: "y".into(),
            endogenous: "x".into(),
            instruments: vec!["z".into()],
            covariates: vec!["w".into()],
        }
    }

    #[test]
    fn reads_columns_by_header() {
        let f = write_tmp("y,x,w,z\n1,2,3,4\n5,6,7,8.5\n");
        let t = read_table(f.path()).unwrap();
        assert_eq!(t.rows(), 2);
        assert_eq!(t.column("z").unwrap(), &[4.0, 8.5]);
        let d = build_dataset(&t, &roles(), Preprocess::default()).unwrap();
        assert_eq!(d.y(), &[1.0, 5.0]);
        assert_eq!(d.w()[(1, 0)], 7.0);
        assert_eq!(d.names().first_stage(), vec!["z", "w"]);
    }

    #[test]
    fn rejects_non_finite_with_location() {
        let f = write_tmp("y,x\n1,2\n3,NaN\n");
        let e = read_table(f.path()).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("\"x\""), "{e}");
        let f = write_tmp("y,x\n1,inf\n");
        assert!(read_table(f.path()).is_err());
        let f = write_tmp("y,x\n1,1,5\n");
        assert_eq!(read_table(f.path()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn rejects_comma_decimals() {
        let f = write_tmp("y;x\n1,5;2\n");
        assert!(read_table(f.path()).is_err());
    }

    #[test]
    fn missing_column_is_named() {
        let f = write_tmp("y,x,w\n1,2,3\n");
        let t = read_table(f.path()).unwrap();
        let e = build_dataset(&t, &roles(), Preprocess::default()).unwrap_err();
        assert!(e.to_string().contains("\"z\""));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn intercept_center_and_scale() {
        let f = write_tmp("y,x,w,z\n1,2,1,4\n5,6,3,8\n2,1,5,0\n");
        let t = read_table(f.path()).unwrap();
        let pre = Preprocess {
            add_intercept: true,
            center: true,
            scale: true,
        };
        let d = build_dataset(&t, &roles(), pre).unwrap();
        assert_eq!(d.p(), 2);
        assert_eq!(d.names().covariates[0], INTERCEPT);
        assert_eq!(d.w().column(0), vec![1.0; 3]);
        assert_eq!(d.w().column(1), vec![-1.0, 0.0, 1.0]);
        assert_eq!(d.z().column(0), vec![0.0, 1.0, -1.0]);
        assert_eq!(d.y(), &[1.0, 5.0, 2.0]);
    }

    #[test]
    fn duplicate_roles_rejected() {
        let f = write_tmp("y,x,z\n1,2,3\n");
        let t = read_table(f.path()).unwrap();
        let mut r = roles();
        r.covariates = vec!["z".into()];
        assert!(build_dataset(&t, &r, Preprocess::default()).is_err());
    }
}
