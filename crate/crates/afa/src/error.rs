use std::path::PathBuf;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed schema file or invalid run parameters.
    #[error("schema error: {0}")]
    Schema(String),

    /// Invalid configuration values (ranges, missing fields, incompatible flags).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Problems with dataset contents (labels, dimensions, class balance).
    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    /// A linear system could not be factorized (e.g. ridge = 0 with duplicate rows).
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// The logistic optimizer hit its iteration cap.
    #[error("optimizer did not converge after {iters} iterations (gradient norm {grad_norm:.3e})")]
    NonConvergence { iters: usize, grad_norm: f64 },

    /// Structural violations of the policy graph (missing node, broken root-connectivity).
    #[error("policy graph error: {0}")]
    Policy(String),

    #[error("artifact error: {0}")]
    Artifact(String),
}

impl Error {
    /// Rough classification used by the CLI to pick exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Schema(_) | Error::Config(_))
    }

    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Data(_) | Error::Dimensions(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
