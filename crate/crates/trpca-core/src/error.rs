//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by tensor algebra, factorizations, the solver and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A Fourier-domain tensor is not conjugate-symmetric along mode 3, so it
    /// cannot be the transform of a real tensor.
    #[error("Hermitian symmetry violated at slice pair ({k}, {mirror}): residual {residual:.3e} exceeds {tol:.3e} * slice norm")]
    SymmetryViolation {
        k: usize,
        mirror: usize,
        residual: f64,
        tol: f64,
    },

    /// A slice SVD did not meet its backward-error contract.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Truncation index exceeds min(n1, n2).
    #[error("truncation {k_trunc} exceeds min(n1, n2) = {max}")]
    BadTruncation { k_trunc: usize, max: usize },

    /// Weight entries must be nonnegative and nondecreasing down each column
    /// for the closed-form weighted shrinkage to be the exact minimizer.
    #[error("invalid weight matrix: {0}")]
    NonMonotoneWeights(String),

    /// Nonpositive precision passed to a scalar posterior routine.
    #[error("precision must be positive, got alpha = {alpha}, beta = {beta}")]
    BadPrecision { alpha: f64, beta: f64 },

    /// A Gamma scale parameter collapsed to zero or became non-finite,
    /// typically because the input is an exact low-rank fit with no noise.
    #[error("degenerate scale parameter b_theta{index} = {value}")]
    DegenerateScale { index: usize, value: f64 },

    /// Solver configuration rejected.
    #[error("bad solver config: {0}")]
    BadConfig(String),

    /// Synthetic instance specification rejected.
    #[error("bad synthetic spec: {0}")]
    BadSpec(String),

    /// Relative error is undefined against a zero ground-truth tensor.
    #[error("ground-truth tensor {0} has zero Frobenius norm")]
    ZeroGroundTruth(&'static str),

    /// Not a TNS3 file.
    #[error("bad magic: expected \"TNS3\", found {0:?}")]
    BadMagic([u8; 4]),

    /// TNS3 payload shorter than the header promises.
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    /// TNS3 version not understood.
    #[error("unsupported TNS3 version {0}")]
    UnsupportedVersion(u16),

    /// Image format not understood.
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    /// Image header malformed.
    #[error("corrupt image header: {0}")]
    CorruptHeader(String),

    /// Underlying I/O failure.
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),

    /// Image plane smaller than the SSIM window.
    #[error("plane {h}x{w} too small for an 11x11 SSIM window")]
    TooSmall { h: usize, w: usize },

    /// External data contained NaN or infinity.
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
}
