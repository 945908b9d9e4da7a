use crate::error::{Error, Result};
use crate::kernels::{Matrix, SymMatrix};
use crate::scalar::Scalar;

/// Column labels used when reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableNames {
    pub endogenous: String,
    pub covariates: Vec<String>,
    pub instruments: Vec<String>,
}

impl VariableNames {
    /// `X`, `W1..Wp`, `Z1..Zq`.
    pub fn generic(p: usize, q: usize) -> Self {
        Self {
            endogenous: "X".into(),
            covariates: (1..=p).map(|k| format!("W{k}")).collect(),
            instruments: (1..=q).map(|j| format!("Z{j}")).collect(),
        }
    }

    /// Labels of the outcome-equation slots, in slot order.
    pub fn second_stage(&self) -> Vec<String> {
        std::iter::once(self.endogenous.clone())
            .chain(self.covariates.iter().cloned())
            .collect()
    }

    /// Labels of the instrument-equation slots, in slot order.
    pub fn first_stage(&self) -> Vec<String> {
        self.instruments
            .iter()
            .chain(self.covariates.iter())
            .cloned()
            .collect()
    }
}

/// Observed data `(Y, X, W, Z)`.
///
/// Immutable once built; also caches the two design matrices `V = [X W]`
/// and `U = [Z W]` together with their Gram matrices, which every sweep
/// reuses.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    y: Vec<T>,
    x: Vec<T>,
    w: Matrix<T>,
    z: Matrix<T>,
    names: VariableNames,
    v: Matrix<T>,
    u: Matrix<T>,
    vtv: SymMatrix<T>,
    utu: SymMatrix<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<T>, x: Vec<T>, w: Matrix<T>, z: Matrix<T>) -> Result<Self> {
        let names = VariableNames::generic(w.cols(), z.cols());
        Self::with_names(y, x, w, z, names)
    }

    pub fn with_names(
        y: Vec<T>,
        x: Vec<T>,
        w: Matrix<T>,
        z: Matrix<T>,
        names: VariableNames,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidData("no observations".into()));
        }
        for (what, rows) in [("X", x.len()), ("W", w.rows()), ("Z", z.rows())] {
            if rows != n {
                return Err(Error::InvalidData(format!(
                    "{what} has {rows} rows but Y has {n}"
                )));
            }
        }
        if z.cols() == 0 {
            return Err(Error::InvalidData(
                "at least one instrument is required".into(),
            ));
        }
        if names.covariates.len() != w.cols() || names.instruments.len() != z.cols() {
            return Err(Error::InvalidData(
                "variable names do not match matrix widths".into(),
            ));
        }
        if !y.iter().chain(&x).all(|v| v.is_finite()) || !w.all_finite() || !z.all_finite() {
            return Err(Error::InvalidData("non-finite value in data".into()));
        }
        let p = w.cols();
        let q = z.cols();
        let v = Matrix::from_fn(n, 1 + p, |i, j| if j == 0 { x[i] } else { w[(i, j - 1)] });
        let u = Matrix::from_fn(
            n,
            q + p,
            |i, j| {
                if j < q {
                    z[(i, j)]
                } else {
                    w[(i, j - q)]
                }
            },
        );
        let vtv = v.gram();
        let utu = u.gram();
        Ok(Self {
            y,
            x,
            w,
            z,
            names,
            v,
            u,
            vtv,
            utu,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.w.cols()
    }

    /// Number of candidate instruments.
    pub fn q(&self) -> usize {
        self.z.cols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn w(&self) -> &Matrix<T> {
        &self.w
    }

    pub fn z(&self) -> &Matrix<T> {
        &self.z
    }

    pub fn names(&self) -> &VariableNames {
        &self.names
    }

    /// `V = [X W]`, the outcome-equation design.
    pub fn outcome_design(&self) -> &Matrix<T> {
        &self.v
    }

    /// `U = [Z W]`, the instrument-equation design.
    pub fn instrument_design(&self) -> &Matrix<T> {
        &self.u
    }

    pub(crate) fn outcome_gram(&self) -> &SymMatrix<T> {
        &self.vtv
    }

    pub(crate) fn instrument_gram(&self) -> &SymMatrix<T> {
        &self.utu
    }

    /// Same data in another scalar type.
    pub fn cast<S: Scalar>(&self) -> Dataset<S> {
        let c = |v: &[T]| v.iter().map(|&a| S::lit(a.as_f64())).collect::<Vec<S>>();
        let m = |a: &Matrix<T>| {
            Matrix::from_vec(a.rows(), a.cols(), c(a.as_slice())).expect("same shape")
        };
        Dataset::with_names(
            c(&self.y),
            c(&self.x),
            m(&self.w),
            m(&self.z),
            self.names.clone(),
        )
        .expect("cast of a valid dataset is valid")
    }
}
