use thiserror::Error;

#[derive(Debug, Error)]
pub enum AfemError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("mesh file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("solver is not contractive: measured energy-error ratio {ratio:.6} >= 1")]
    NonContractive { ratio: f64 },

    #[error("inner iteration did not terminate within {cap} steps (level {ell})")]
    IterationCap { ell: usize, cap: usize },

    #[error("sequence hypothesis violated: {0}")]
    Hypothesis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AfemError> = std::result::Result<T, E>;
