use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NonHermitian { residual: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid subsystem selection: {0}")]
    BadSubsystem(String),
    #[error("projection weight {weight:.3e} is below the post-selection threshold")]
    ZeroWeight { weight: f64 },
    #[error("noise probability {0} is outside [0, 1]")]
    BadEpsilon(f64),
    #[error("support basis is empty after orthonormalization")]
    EmptySupport,
    #[error("rank deficient input: {0}")]
    RankDeficient(String),
    #[error("invalid latent split: {0}")]
    BadSplit(String),
    #[error("parameter layout mismatch: expected {expected} values, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("generator index out of range: {0}")]
    BadIndex(String),
    #[error("cost became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
    #[error("every outcome landed in the junk subspace (keep probability {keep:.3e})")]
    AllDiscarded { keep: f64 },
    #[error("state is not inside the encoded support (junk weight {junk:.3e})")]
    NotInSupport { junk: f64 },
    #[error("operator is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unsupported kind: {0}")]
    BadKind(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
