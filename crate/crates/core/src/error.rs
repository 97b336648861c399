use crate::minnorm::MinNormSolution;

/// Errors shared by every module of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum MolError {
    #[error("index out of bounds: {index} for dataset of size {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("sample shape mismatch: expected dimension {expected}, got {got}")]
    SampleShapeMismatch { expected: usize, got: usize },

    #[error("non-finite input")]
    NonFiniteInput,

    #[error("non-finite evaluation")]
    NonFiniteEvaluation,

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    /// Min-norm solver exhausted its iteration budget. Carries the best
    /// iterate so callers can inspect how close it got.
    #[error(
        "no convergence: kkt residual {resid:.3e} > tol {tol:.3e} after {iters} iterations",
        resid = best.kkt_residual,
        iters = best.iterations
    )]
    NoConvergence { best: Box<MinNormSolution>, tol: f64 },

    #[error("divergence at step {step}: |x| = {x_norm:.6e}, |lambda| = {lambda_norm:.6e}")]
    Divergence {
        step: usize,
        x_norm: f64,
        lambda_norm: f64,
    },

    #[error("min-norm subproblem failed at step {step}: {source}")]
    SubproblemAtStep {
        step: usize,
        #[source]
        source: Box<MolError>,
    },

    #[error("A not positive definite: smallest eigenvalue {min_eig:.3e}")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("no population oracle: problem has no analytic population gradient and no test set was given")]
    NoPopulationOracle,

    #[error("bound undefined at gamma=0")]
    BoundUndefinedAtGammaZero,

    #[error("step size too large for bound: alpha {alpha:.3e} > 1/(2 l_f1) = {cap:.3e}")]
    StepSizeTooLarge { alpha: f64, cap: f64 },

    #[error("strongly convex bound needs mu > 0")]
    NeedsStrongConvexity,

    #[error("not neighboring: dataset sizes {n_left} and {n_right} differ")]
    NotNeighboring { n_left: usize, n_right: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, MolError>;
