use thiserror::Error;

/// Errors shared across the crate.
///
/// Structural infeasibility ([`Error::InfeasibleN`]) is always reported
/// before numerical rank problems ([`Error::SingularGram`]) so callers can
/// tell "the surface is too small" apart from "this channel draw is
/// degenerate".
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix dimensions do not match the operation's contract.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A Gram matrix (A·Aᴴ or Aᴴ·A) is numerically singular; the underlying
    /// matrix is rank deficient.
    #[error("gram matrix numerically singular (rcond {rcond:.3e} < {threshold:.0e})")]
    SingularGram { rcond: f64, threshold: f64 },

    /// Condition number of the zero matrix is undefined.
    #[error("condition number undefined for a zero matrix")]
    ZeroMatrix,

    /// Input to the matrix exponential is not skew-Hermitian.
    #[error("matrix not skew-Hermitian (‖Gᴴ+G‖ = {0:.3e})")]
    NotSkewHermitian(f64),

    /// System dimensions violate a construction precondition (e.g. M ≤ K).
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    /// The surface has too few elements for perfect orthogonalization.
    #[error("surface infeasible: N = {n} < {required} elements required")]
    InfeasibleN { n: usize, required: usize },

    /// The requested quantity is undefined for this surface kind.
    #[error("not applicable for {0}")]
    NotApplicable(String),

    /// A square sub-block of the estimated surface-to-base-station channel is
    /// too ill-conditioned to invert during the block-wise protocol.
    #[error("estimation block {block} ill-conditioned (rcond {rcond:.3e})")]
    IllConditionedBlock { block: usize, rcond: f64 },

    /// A cached Gram operator failed its positive-definiteness check.
    #[error("operator not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Malformed input while deserializing one of the structured text formats.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable short name of the variant, for log and CLI prefixes.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularGram { .. } => "SingularGram",
            Error::ZeroMatrix => "ZeroMatrix",
            Error::NotSkewHermitian(_) => "NotSkewHermitian",
            Error::InvalidDims(_) => "InvalidDims",
            Error::InfeasibleN { .. } => "InfeasibleN",
            Error::NotApplicable(_) => "NotApplicable",
            Error::IllConditionedBlock { .. } => "IllConditionedBlock",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::Parse(_) => "Parse",
        }
    }
}
