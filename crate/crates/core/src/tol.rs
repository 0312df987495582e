//! Numerical tolerances shared by every module.
//!
//! All values assume double precision and Hilbert-space dimensions up to 4096.

/// Hermiticity check, Frobenius norm of `h - h†` relative to `max(1, ‖h‖)`.
pub const HERMITIAN: f64 = 1e-9;
/// Unitarity check, Frobenius norm of `u u† - I` relative to `sqrt(dim)`.
pub const UNITARY: f64 = 1e-9;
/// Eigen-residual and orthonormality tolerance.
pub const EIGEN: f64 = 1e-8;
/// Relative gap below which eigenvalues form one degenerate block.
pub const DEGENERACY_REL: f64 = 1e-7;
/// Trace-one check for density matrices and probability tables.
pub const TRACE: f64 = 1e-9;
/// Smallest eigenvalue tolerated in a density matrix.
pub const POSITIVITY: f64 = 1e-9;
/// Frobenius norm of the off-diagonal part accepted as "diagonal".
pub const DIAGONALITY: f64 = 1e-8;
/// Eigenvalues below this contribute nothing to an entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;
/// Singular values above this count toward a Schmidt rank.
pub const SCHMIDT_CUTOFF: f64 = 1e-10;
/// Singular-value cut deciding the null-space dimension of a commutator system.
pub const NULLSPACE: f64 = 1e-9;
/// Maximum angle (radians) between Bloch axes treated as the same basis.
pub const BASIS_ANGLE: f64 = 1e-6;
/// Gate comparison: `|Tr(a† b)| / dim >= 1 - PHASE_OVERLAP`.
pub const PHASE_OVERLAP: f64 = 1e-8;
/// Commutator norm accepted as zero by the permutation-degeneracy test.
pub const COMMUTATOR: f64 = 1e-9;
/// Default grouping threshold for conditional operators.
pub const FRASE_DEFAULT: f64 = 1e-7;
/// Off-block Frobenius mass allowed in a block-diagonal unitary.
pub const BLOCK_OFFDIAG: f64 = 1e-9;

/// Gram eigenvalue (squared commutator norm) counted as zero when solving
/// for local operators that commute with a given operator.
pub const COMMUTANT_GRAM: f64 = 1e-12;
