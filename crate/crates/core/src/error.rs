use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("generator b{index} out of range for a group of rank {rank}")]
    GeneratorIndex { index: usize, rank: usize },

    #[error("exponent of `a` does not fit in 64 bits")]
    ShiftOverflow,

    #[error("translation is not in the abelian kernel: {0}")]
    NotInGroup(String),

    #[error("matrix is not hyperbolic ({verdict}); eigenvalue moduli {moduli:?}")]
    NotHyperbolic { verdict: String, moduli: Vec<f64> },

    #[error("eigen-solver failure: {0}")]
    Numerical(String),

    #[error("no k <= {cap} gives expansion and contraction: {diagnostics}")]
    IterateCap { cap: u32, diagnostics: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constant `{0}` has neither an override nor an estimator")]
    MissingConstant(&'static str),

    #[error("chart escape in {composition}: step {step} produced {point}, outside {domain}")]
    ChartEscape {
        composition: String,
        step: usize,
        point: f64,
        domain: String,
    },

    #[error("not a diffeomorphism: {0}")]
    NotDiffeomorphism(String),

    #[error("point {point} is off the manifold {domain}")]
    OffManifold { point: f64, domain: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised by a map or orbit leaving its domain of definition.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::ChartEscape { .. } | Error::OffManifold { .. } | Error::NotDiffeomorphism(_)
        )
    }
}
