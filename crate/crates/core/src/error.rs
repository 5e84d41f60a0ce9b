use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: |a(i,j) - a(j,i)| = {asymmetry:e} at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize, asymmetry: f64 },

    #[error("matrix dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("symbol too short: need {required} terms, have {available}")]
    SymbolTooShort { required: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank-one transfer condition fails: max residual {residual:e} exceeds tolerance {tol:e}")]
    RankOneResidual { residual: f64, tol: f64 },

    #[error("C not negative semidefinite of rank one (eigenvalues {eigenvalues:?})")]
    NotRankOneNegative { eigenvalues: [f64; 2] },

    #[error("diagonal rule from-factorization requires a rank-one certificate and symbol")]
    MissingCertificate,

    #[error("no sign makes the remainder Toeplitz: residuals {plus:e} (s=+1), {minus:e} (s=-1)")]
    SignUnresolved { plus: f64, minus: f64 },

    #[error("not in localized regime (lambda = {lambda}); localized eigenvectors need lambda > 2")]
    NotLocalized { lambda: f64 },

    #[error("too few points for a decay fit: {found} above floor, need {required}")]
    TooFewPoints { found: usize, required: usize },

    #[error("spectrum outside [0, 1]: offending eigenvalues {0:?}")]
    SpectrumOutOfBand(Vec<f64>),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("tail mass {mass:e} beyond the gap window is not negligible")]
    TailNotNegligible { mass: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
