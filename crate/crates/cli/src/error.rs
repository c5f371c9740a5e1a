use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input.
    #[error("{0}")]
    Input(String),
    /// Outputs were written but the solver stopped before converging.
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::NotConverged(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<plp_core::Error> for CliError {
    fn from(e: plp_core::Error) -> Self {
        use plp_core::Error as E;
        let numerical = {
            let mut inner = &e;
            while let E::Window { source, .. } = inner {
                inner = source;
            }
            matches!(
                inner,
                E::Domain { .. } | E::NotPositiveDefinite(_) | E::Numerical(_) | E::Generation(_)
            )
        };
        if numerical {
            Self::Numerical(e.to_string())
        } else {
            Self::Input(e.to_string())
        }
    }
}
