//! Which single-qubit observables `I ⊗ n·σ ⊗ I` commute with a set of operators.
//!
//! For every qubit `j` the solutions form a real subspace of Bloch vectors.
//! Because the commutant intersected with the local algebra is itself an
//! algebra, the subspace is `{0}`, one axis, or all of `R³`.

use nalgebra::Matrix3;

use crate::error::Result;
use crate::tensor::{gates_std, ComplexMatrix, SubsystemShape, C64, ZERO};
use crate::tol;

/// `[x, I ⊗ s ⊗ I]` with `s` acting on subsystem `j`, in O(d² d_j).
pub(crate) fn local_commutator(x: &ComplexMatrix, shape: &SubsystemShape, j: usize, s: &ComplexMatrix) -> ComplexMatrix {
    let dj = shape.dim(j);
    let stride = shape.strides()[j];
    let d = x.dim();
    let digit = |i: usize| (i / stride) % dj;
    ComplexMatrix::from_fn(d, |r, c| {
        let (br, bc) = (digit(r), digit(c));
        let (r0, c0) = (r - br * stride, c - bc * stride);
        let mut acc = ZERO;
        for k in 0..dj {
            // x·S term minus S·x term
            acc += x.get(r, c0 + k * stride) * s.get(k, bc);
            acc -= s.get(br, k) * x.get(r0 + k * stride, c);
        }
        acc
    })
}

/// Null-space basis (orthonormal, real) of Bloch vectors `n` with
/// `[op, n·σ_j] = 0` for every `op`. Empty means only the identity commutes.
pub(crate) fn qubit_commutant(ops: &[&ComplexMatrix], shape: &SubsystemShape, j: usize) -> Result<Vec<[f64; 3]>> {
    shape.check_subsystem(j)?;
    let paulis = [gates_std::pauli_x(), gates_std::pauli_y(), gates_std::pauli_z()];
    let mut gram = Matrix3::<f64>::zeros();
    for op in ops {
        let cs: Vec<ComplexMatrix> = paulis.iter().map(|p| local_commutator(op, shape, j, p)).collect();
        for a in 0..3 {
            for b in a..3 {
                let g = cs[a].inner(&cs[b]).re;
                gram[(a, b)] += g;
                gram[(b, a)] = gram[(a, b)];
            }
        }
    }
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut null: Vec<[f64; 3]> = (0..3)
        .filter(|&k| eig.eigenvalues[k] <= tol::COMMUTANT_GRAM * scale)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            canonical_axis([v[0], v[1], v[2]])
        })
        .collect();
    null.sort_by(|a, b| b[2].abs().total_cmp(&a[2].abs()));
    Ok(null)
}

/// Normalises `n` and flips its sign so the first clearly nonzero component
/// in (z, x, y) order is positive; `n` and `−n` define the same basis.
pub fn canonical_axis(n: [f64; 3]) -> [f64; 3] {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let mut v = n.map(|c| c / norm);
    let lead = [v[2], v[0], v[1]].into_iter().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
    if lead < 0.0 {
        v = v.map(|c| -c);
    }
    v
}

/// Unitary whose columns are the `+1` and `−1` eigenvectors of `n·σ`, each
/// phased so its first nonzero entry is real positive. `z ↦ I`, `x ↦ H`.
pub fn axis_unitary(n: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = canonical_axis(n);
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::from_polar(1.0, phi);
    let cols = [[C64::new(c, 0.0), e * s], [C64::new(s, 0.0), -e * c]];
    let cols = cols.map(|col| {
        let lead = col.iter().copied().find(|v| v.norm() > 1e-9).unwrap_or(C64::new(1.0, 0.0));
        let ph = lead.conj() / lead.norm();
        col.map(|v| v * ph)
    });
    ComplexMatrix::from_fn(2, |r, c| cols[c][r])
}

/// Bloch axis of the projector onto the first column of a 2×2 unitary.
pub fn unitary_axis(u: &ComplexMatrix) -> [f64; 3] {
    let (a, b) = (u.get(0, 0), u.get(1, 0));
    let ab = a.conj() * b;
    canonical_axis([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()])
}
