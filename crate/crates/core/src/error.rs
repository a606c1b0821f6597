use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("length mismatch: geometry expects {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different tori")]
    GeometryMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{} mode(s) lie outside the covered dyadic range [0, {limit}]: {}", modes.len(), format_modes(modes))]
    UncoveredSpectrum { limit: f64, modes: Vec<(i64, i64)> },

    #[error("mode ({}, {}) carries mass outside the working subspace", mode.0, mode.1)]
    OutsideSubspace { mode: (i64, i64) },

    #[error(
        "eigensolver did not converge after {iterations} iterations; \
         smallest eigenvalue bracketed in [{lower:.6e}, {upper:.6e}]"
    )]
    NoConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error(
        "conjugate gradient stagnated after {iterations} iterations at relative residual \
         {residual:.3e}; the control Gramian is numerically singular on this subspace \
         (try a larger horizon T or a smaller frequency cutoff)"
    )]
    CgStagnation { iterations: usize, residual: f64 },

    #[error("no lattice modes with eigenvalue {0}")]
    EmptyEigenspace(f64),

    #[error("field is identically zero")]
    ZeroField,

    #[error("frequencies must be strictly increasing (offending value {0})")]
    DuplicateFrequency(f64),

    #[error("negative damping coefficient {value:.3e} at grid index {index}")]
    NegativeDamping { index: usize, value: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors that stem from user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter(_) | Error::Geometry(_)
        )
    }
}

fn format_modes(modes: &[(i64, i64)]) -> String {
    const SHOWN: usize = 8;
    let mut s: Vec<String> = modes
        .iter()
        .take(SHOWN)
        .map(|(m, n)| format!("({m}, {n})"))
        .collect();
    if modes.len() > SHOWN {
        s.push("...".to_string());
    }
    s.join(", ")
}
