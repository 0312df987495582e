//! Dense complex linear algebra over multi-qudit Hilbert spaces.

pub mod gates_std;
pub mod haar;
mod matrix;
mod permutation;
mod shape;

pub use haar::haar_local_unitary;
pub use matrix::{
    degenerate_groups, eigh, eigvalsh, kron, kron_all, partial_trace, ComplexMatrix, Eigh, C64,
    ONE, ZERO,
};
pub use permutation::{permutation_matrix, random_permutation, Permutation};
pub use shape::SubsystemShape;
