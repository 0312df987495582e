//! Haar-distributed unitaries via complex Ginibre matrices and QR with the
//! diagonal phase of `R` removed.

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{kron_all, ComplexMatrix, SubsystemShape, C64};
use crate::rng::{self, Rng};

/// `dim × dim` matrix of i.i.d. standard complex normals (`E|z|² = 1`).
pub fn ginibre(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    ComplexMatrix::wrap(m)
}

pub fn haar_unitary(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ginibre(dim, rng).into_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    ComplexMatrix::wrap(q)
}

/// One Haar unitary per subsystem, drawn in subsystem order.
pub fn haar_local_factors(shape: &SubsystemShape, rng: &mut Rng) -> Vec<ComplexMatrix> {
    shape.dims().iter().map(|&d| haar_unitary(d, rng)).collect()
}

/// `⊗_j u_j` with each `u_j` Haar on `U(d_j)`; deterministic in `seed`.
pub fn haar_local_unitary(shape: &SubsystemShape, seed: u64) -> ComplexMatrix {
    let factors = haar_local_factors(shape, &mut rng::seeded(seed));
    kron_all(&factors)
}

/// Haar-random unit vector.
pub fn haar_vector(dim: usize, rng: &mut Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}
