use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("singular input at scan row {index} (delta = {delta_mhz} MHz): {source}")]
    SingularRow {
        index: usize,
        delta_mhz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no transparency window: {0}")]
    NoTransparencyWindow(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("stiffness failure at t = {t}: step size {h} underflowed (fastest local eigenvalue estimate {eig_estimate:.3e})")]
    Stiffness { t: f64, h: f64, eig_estimate: f64 },

    #[error("cross-check failure: {0}")]
    CrossCheck(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code per the CLI contract: 2 config, 3 numeric, 4 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::NotConverged(_) | Error::Stiffness { .. } => 4,
            _ => 3,
        }
    }
}
