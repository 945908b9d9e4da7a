use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input data or arguments.
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] ivbma_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for a numerical abort, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use ivbma_core::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(
                E::InvalidData(_)
                | E::InvalidConfig(_)
                | E::InvalidModel(_)
                | E::DimensionMismatch { .. },
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let numerical = ivbma_core::Error::AtIteration {
            iteration: 7,
            source: Box::new(ivbma_core::Error::DegenerateEndogenous { beta: 0.0 }),
        };
        assert_eq!(CliError::from(numerical).exit_code(), 3);
        assert_eq!(CliError::Input("bad".into()).exit_code(), 2);
        assert_eq!(
            CliError::from(ivbma_core::Error::InvalidConfig("x".into())).exit_code(),
            2
        );
        let io = std::io::Error::other("disk");
        assert_eq!(CliError::io("/tmp/x", io).exit_code(), 1);
    }
}
