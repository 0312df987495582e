use thiserror::Error;

pub type Result<T> = std::result::Result<T, ConcordiaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcordiaError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid subsystem shape: {0}")]
    InvalidShape(String),

    #[error("subsystem index {index} out of range for {len} subsystems")]
    SubsystemOutOfRange { index: usize, len: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("permutation map is not a bijection on 0..{dim}")]
    NonBijective { dim: usize },

    #[error("state is not diagonal in the supplied basis (off-diagonal norm {off_diagonal:.3e})")]
    NotDiagonalInBasis { off_diagonal: f64 },

    #[error("subsystem {subsystem} has dimension {dim}; only qubits are supported here")]
    UnsupportedDimension { subsystem: usize, dim: usize },

    #[error("problem too large: {qubits} qubits exceeds the limit of {limit}")]
    TooLarge { qubits: usize, limit: usize },

    #[error("transcript mismatch at step {step}: {reason}")]
    TranscriptMismatch { step: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl ConcordiaError {
    /// Stable machine-readable code, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Self::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Self::InvalidShape(_) => "INVALID_SHAPE",
            Self::SubsystemOutOfRange { .. } => "SUBSYSTEM_OUT_OF_RANGE",
            Self::NotHermitian { .. } => "NOT_HERMITIAN",
            Self::NotUnitary { .. } => "NOT_UNITARY",
            Self::NonFinite => "NON_FINITE",
            Self::InvalidDensity(_) => "INVALID_DENSITY",
            Self::InvalidDistribution(_) => "INVALID_DISTRIBUTION",
            Self::NonBijective { .. } => "NON_BIJECTIVE",
            Self::NotDiagonalInBasis { .. } => "NOT_DIAGONAL_IN_BASIS",
            Self::UnsupportedDimension { .. } => "UNSUPPORTED_DIMENSION",
            Self::TooLarge { .. } => "TOO_LARGE",
            Self::TranscriptMismatch { .. } => "TRANSCRIPT_MISMATCH",
            Self::InvalidInput(_) => "INVALID_INPUT",
        }
    }

    /// Domain errors are well-formed requests the mathematics refuses;
    /// everything else is a malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Self::NotDiagonalInBasis { .. }
                | Self::TranscriptMismatch { .. }
                | Self::TooLarge { .. }
                | Self::UnsupportedDimension { .. }
        )
    }
}
