use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SubsystemShape;
use crate::error::{ConcordiaError, Result};
use crate::tol;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense square complex matrix: the carrier for states, gates and projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Wraps a nalgebra matrix after checking it is square and finite.
    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(ConcordiaError::InvalidInput(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ConcordiaError::NonFinite);
        }
        Ok(Self(m))
    }

    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ConcordiaError::InvalidInput("ragged or non-square rows".into()));
        }
        Self::from_nalgebra(DMatrix::from_fn(dim, dim, |r, c| rows[r][c]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(diag[r], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self(DMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj()))
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        Self(DMatrix::from_fn(dim, dim, |r, c| {
            if r == k && c == k {
                ONE
            } else {
                ZERO
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.0[(r, c)] = v;
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        self.0.column(c).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `Tr(self† other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    /// Real parts of the diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn off_diagonal_norm(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for c in 0..n {
            for r in 0..n {
                if r != c {
                    acc += self.0[(r, c)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.frobenius_distance(&self.adjoint());
        d / self.frobenius_norm().max(1.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitary_deviation(&self) -> f64 {
        let prod = Self(&self.0 * self.0.adjoint());
        prod.frobenius_distance(&Self::identity(self.dim())) / (self.dim() as f64).sqrt()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitary_deviation();
        if deviation <= tol::UNITARY {
            Ok(())
        } else {
            Err(ConcordiaError::NotUnitary { deviation })
        }
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(ConcordiaError::DimensionMismatch { expected, found: self.dim() })
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|c| self.0[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Reorders tensor factors. `order[p]` names the subsystem (of `shape`)
    /// that sits at position `p` of the current factor order; the result is
    /// in natural (ascending subsystem) order.
    pub fn reorder_subsystems(&self, shape: &SubsystemShape, order: &[usize]) -> Result<Self> {
        self.check_dim(shape.total_dim())?;
        shape.check_subset(order)?;
        if order.len() != shape.len() {
            return Err(ConcordiaError::InvalidInput("order must list every subsystem".into()));
        }
        // offsets(order)[current index] = natural index of the same basis state
        let natural = shape.offsets(order);
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (ci, &ni) in natural.iter().enumerate() {
            for (cj, &nj) in natural.iter().enumerate() {
                out[(ni, nj)] = self.0[(ci, cj)];
            }
        }
        Ok(Self(out))
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Tensor product; `a` is the more significant factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Reduced operator on `keep` (result factors in ascending subsystem order).
pub fn partial_trace(
    rho: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    rho.check_dim(shape.total_dim())?;
    shape.check_subset(keep)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    let traced = shape.complement(&keep);
    let ko = shape.offsets(&keep);
    let to = shape.offsets(&traced);
    let n = ko.len();
    let mut out = DMatrix::zeros(n, n);
    for (i, &oi) in ko.iter().enumerate() {
        for (j, &oj) in ko.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &to {
                acc += rho.0[(oi + t, oj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(ComplexMatrix(out))
}

/// Hermitian eigendecomposition, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

pub fn eigh(h: &ComplexMatrix) -> Result<Eigh> {
    let deviation = h.hermitian_deviation();
    if deviation > tol::HERMITIAN {
        return Err(ConcordiaError::NotHermitian { deviation });
    }
    // symmetrise so round-off in the input cannot leak into the solver
    let sym = (&h.0 + h.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigh { values, vectors: ComplexMatrix(vectors) })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let deviation = h.hermitian_deviation();
    if deviation > tol::HERMITIAN {
        return Err(ConcordiaError::NotHermitian { deviation });
    }
    let mut v: Vec<f64> = if h.dim() == 2 {
        let a = h.0[(0, 0)].re;
        let d = h.0[(1, 1)].re;
        let b = h.0[(0, 1)];
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        vec![mean - rad, mean + rad]
    } else {
        let sym = (&h.0 + h.0.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Groups ascending eigenvalues into runs whose consecutive gaps are within
/// `rel` of the spectral scale. Returns index ranges into `values`.
pub fn degenerate_groups(values: &[f64], rel: f64) -> Vec<std::ops::Range<usize>> {
    let scale = values.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > rel * scale {
            groups.push(start..k);
            start = k;
        }
    }
    groups
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let row = |f: fn(&C64) -> f64, r: usize| (0..n).map(|c| f(&self.0[(r, c)])).collect();
        MatrixJson {
            dim: n,
            re: (0..n).map(|r| row(|z| z.re, r)).collect(),
            im: (0..n).map(|r| row(|z| z.im, r)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let m = MatrixJson::deserialize(d)?;
        let n = m.dim;
        let ok = n >= 1
            && m.re.len() == n
            && m.im.len() == n
            && m.re.iter().chain(&m.im).all(|r| r.len() == n);
        if !ok {
            return Err(D::Error::custom(format!("matrix rows do not match dim {n}")));
        }
        let mat = DMatrix::from_fn(n, n, |r, c| C64::new(m.re[r][c], m.im[r][c]));
        ComplexMatrix::from_nalgebra(mat).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gates_std::{hadamard, pauli_x};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_identity_and_projectors() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let p = kron(
            &ComplexMatrix::from_diagonal(&[1.0, 0.0]),
            &ComplexMatrix::from_diagonal(&[0.0, 1.0]),
        );
        assert_eq!(p, ComplexMatrix::from_diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_hadamards_give_uniform_amplitudes() {
        let hh = kron(&hadamard(), &hadamard());
        let out = hh.apply(&[c(1.0), c(0.0), c(0.0), c(0.0)]);
        for z in out {
            assert!((z - c(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn partial_trace_examples() {
        let shape = SubsystemShape::qubits(2);
        let p00 = ComplexMatrix::basis_projector(4, 0);
        let r = partial_trace(&p00, &shape, &[0]).unwrap();
        assert_eq!(r, ComplexMatrix::basis_projector(2, 0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexMatrix::outer(&[c(s), c(0.0), c(0.0), c(s)]);
        let r = partial_trace(&bell, &shape, &[0]).unwrap();
        assert!(r.frobenius_distance(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        let a = ComplexMatrix::from_diagonal(&[0.25, 0.75]);
        let b = ComplexMatrix::from_real_rows(&[
            vec![0.5, 0.1, 0.0],
            vec![0.1, 0.3, 0.05],
            vec![0.0, 0.05, 0.2],
        ])
        .unwrap();
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        let r = partial_trace(&kron(&a, &b), &shape, &[1]).unwrap();
        assert!(r.frobenius_distance(&b) < 1e-15);
        assert!(partial_trace(&kron(&a, &b), &shape, &[2]).is_err());
    }

    #[test]
    fn eigh_examples() {
        let e = eigh(&ComplexMatrix::from_diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        assert!((e.vectors.get(1, 0).norm() - 1.0).abs() < 1e-15);

        let e = eigh(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let minus = e.vectors.column(0);
        assert!((minus[0] + minus[1]).norm() < 1e-14);

        let e = eigh(&ComplexMatrix::identity(4).scale(0.25)).unwrap();
        assert!(e.values.iter().all(|v| (v - 0.25).abs() < 1e-15));

        let bad = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eigh(&bad), Err(ConcordiaError::NotHermitian { .. })));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = ComplexMatrix::from_fn(3, |r, c| C64::new(0.1 * r as f64 + 1.0 / 3.0, -(c as f64) / 7.0));
        let s = serde_json::to_string(&m).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"dim":2,"re":[[1]],"im":[[0]]}"#).is_err());
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            ComplexMatrix::from_fn(dim, |r, c| C64::new(v[r * dim + c].0, v[r * dim + c].1))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(3), c in arb_matrix(2)) {
            let left = kron(&kron(&a, &b), &c);
            let right = kron(&a, &kron(&b, &c));
            prop_assert!(left.frobenius_distance(&right) <= 1e-12);
        }

        #[test]
        fn eigh_reconstructs(a in arb_matrix(6)) {
            let h = &a + &a.adjoint();
            let e = eigh(&h).unwrap();
            let d = ComplexMatrix::from_diagonal(&e.values);
            let back = d.conjugate_by(&e.vectors);
            prop_assert!(back.frobenius_distance(&h) <= 1e-9);
            prop_assert!(e.vectors.is_unitary(tol::EIGEN));
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn partial_trace_of_product_recovers_factors(a in arb_matrix(2), b in arb_matrix(3)) {
            // make both factors unit-trace so the complementary traces are 1
            let a = a.scale_complex(ONE / a.trace());
            let b = b.scale_complex(ONE / b.trace());
            let shape = SubsystemShape::new(vec![2, 3]).unwrap();
            let ab = kron(&a, &b);
            prop_assert!(partial_trace(&ab, &shape, &[0]).unwrap().frobenius_distance(&a) <= 1e-9);
            prop_assert!(partial_trace(&ab, &shape, &[1]).unwrap().frobenius_distance(&b) <= 1e-9);
        }
    }

    #[test]
    fn eigh_reconstructs_dim_64() {
        let mut rng = crate::rng::seeded(5);
        let g = crate::tensor::haar::ginibre(64, &mut rng);
        let h = &g + &g.adjoint();
        let e = eigh(&h).unwrap();
        let back = ComplexMatrix::from_diagonal(&e.values).conjugate_by(&e.vectors);
        assert!(back.frobenius_distance(&h) <= 1e-9);
    }

    #[test]
    fn reorder_swaps_factors() {
        let a = ComplexMatrix::from_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_diagonal(&[3.0, 5.0, 7.0]);
        let shape = SubsystemShape::new(vec![2, 3]).unwrap();
        // kron(b, a) lists subsystem 1 first
        let r = kron(&b, &a).reorder_subsystems(&shape, &[1, 0]).unwrap();
        assert_eq!(r, kron(&a, &b));
    }
}
