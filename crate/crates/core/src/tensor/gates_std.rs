//! A handful of fixed one- and two-qubit matrices.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{ComplexMatrix, C64};

fn real(rows: [[f64; 2]; 2]) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |r, c| C64::new(rows[r][c], 0.0))
}

pub fn hadamard() -> ComplexMatrix {
    real([[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]])
}

pub fn pauli_x() -> ComplexMatrix {
    real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |r, c| match (r, c) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => C64::new(0.0, 0.0),
    })
}

pub fn pauli_z() -> ComplexMatrix {
    real([[1.0, 0.0], [0.0, -1.0]])
}

/// `diag(e^{-iφ/2}, e^{iφ/2})`.
pub fn rz(phi: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, |r, c| match (r, c) {
        (0, 0) => C64::from_polar(1.0, -phi / 2.0),
        (1, 1) => C64::from_polar(1.0, phi / 2.0),
        _ => C64::new(0.0, 0.0),
    })
}

/// Control on qubit 0 (most significant), target on qubit 1.
pub fn cnot() -> ComplexMatrix {
    let map = [0, 1, 3, 2];
    ComplexMatrix::from_fn(4, |r, c| if map[c] == r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}
