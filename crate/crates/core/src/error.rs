use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// Variants are deliberately fine-grained: callers (in particular the CLI)
/// map them to distinct exit codes, and tests assert on specific variants
/// rather than on message text.
#[derive(Debug, Error)]
pub enum FormError {
    #[error("unknown edge id `{id}`")]
    UnknownEdge { id: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    /// The two representations do not share the same graph or dimension
    /// vector; this is distinct from a verification returning `ok = false`.
    #[error("structural mismatch: {reason}")]
    StructuralMismatch { reason: String },

    #[error(
        "matrix in {context} is numerically singular \
         (smallest singular value {sigma_min:.3e}, threshold {threshold:.3e})"
    )]
    SingularMatrix {
        context: String,
        sigma_min: f64,
        threshold: f64,
    },

    #[error("non-finite entry at ({row}, {col}) in {context}")]
    NonFinite {
        context: String,
        row: usize,
        col: usize,
    },

    /// A rank or eigenvalue decision fell inside the ambiguity band around
    /// the tolerance, or eigenvalue clustering could not be stabilised.
    /// The input is too close to a more degenerate stratum to classify.
    #[error("ill-conditioned input: {reason}")]
    IllConditioned { reason: String },

    #[error(
        "oracle round-trip check failed: max error {max_error:.3e} exceeds tolerance {tol:.3e}"
    )]
    OracleRoundTrip { max_error: f64, tol: f64 },

    /// The perturbation search of the basis-extraction algorithm ran out of
    /// candidates. This signals a numerically pathological oracle; the best
    /// singular value seen is reported for diagnosis.
    #[error(
        "basis extraction exhausted its candidate schedule at step {step}: \
         best relative singular value {best_sigma:.3e} below threshold {threshold:.3e}"
    )]
    BasisExtractionExhausted {
        step: usize,
        best_sigma: f64,
        threshold: f64,
    },

    #[error("eigenvalue pairing failed: {reason}")]
    PairingFailure { reason: String },

    #[error("invalid canonical block: {reason}")]
    InvalidBlock { reason: String },

    #[error("invalid oracle spec `{spec}`: {reason}")]
    InvalidOracleSpec { spec: String, reason: String },

    /// A nonlinear witness was requested but every vertex has a trivial
    /// joint kernel, so only linear witnesses exist.
    #[error("no vertex admits a nonlinear witness: every joint kernel is trivial")]
    NoNonlinearWitness,

    #[error("witness self-check failed on edge `{edge}`: residual {residual:.3e}")]
    WitnessSelfCheck { edge: String, residual: f64 },

    #[error("invalid input: {reason}")]
    InvalidInput { reason: String },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, FormError>;
