//! Density matrices, local product bases, concordant states and
//! spectrum-broadcast (SBS) system–environment states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};
use crate::rng::{self, Rng};
use crate::tensor::{
    eigvalsh, haar, kron, kron_all, partial_trace, ComplexMatrix, SubsystemShape, C64,
};
use crate::tol;

/// Hermitian, unit-trace, positive semidefinite operator on a shaped space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    shape: SubsystemShape,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, shape: SubsystemShape) -> Result<Self> {
        mat.check_dim(shape.total_dim())?;
        let herm = mat.hermitian_deviation();
        if herm > tol::HERMITIAN {
            return Err(ConcordiaError::NotHermitian { deviation: herm });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(ConcordiaError::InvalidDensity(format!("trace is {tr}")));
        }
        let min = eigvalsh(&mat)?[0];
        if min < -tol::POSITIVITY {
            return Err(ConcordiaError::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { mat, shape })
    }

    /// Skips validation; for operators valid by construction.
    pub(crate) fn trusted(mat: ComplexMatrix, shape: SubsystemShape) -> Self {
        debug_assert_eq!(mat.dim(), shape.total_dim());
        Self { mat, shape }
    }

    pub fn pure(amplitudes: &[C64], shape: SubsystemShape) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(ConcordiaError::InvalidDensity(format!("state vector norm {norm}")));
        }
        if amplitudes.len() != shape.total_dim() {
            return Err(ConcordiaError::DimensionMismatch { expected: shape.total_dim(), found: amplitudes.len() });
        }
        // a normalised outer product is a valid density matrix by construction
        Ok(Self::trusted(ComplexMatrix::outer(amplitudes), shape))
    }

    pub fn maximally_mixed(shape: SubsystemShape) -> Self {
        let d = shape.total_dim();
        Self { mat: ComplexMatrix::identity(d).scale(1.0 / d as f64), shape }
    }

    /// `diag(table)` in the computational basis.
    pub fn diagonal(table: &[f64], shape: SubsystemShape) -> Result<Self> {
        check_distribution(table, shape.total_dim())?;
        Ok(Self { mat: ComplexMatrix::from_diagonal(table), shape })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn purity(&self) -> f64 {
        self.mat.inner(&self.mat).re
    }

    pub fn spectrum(&self) -> Vec<f64> {
        eigvalsh(&self.mat).expect("density matrices are Hermitian")
    }

    /// Reduced state on `keep` (ascending subsystem order).
    pub fn reduce(&self, keep: &[usize]) -> Result<Self> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let sub = self.shape.sub_shape(&keep)?;
        let mat = partial_trace(&self.mat, &self.shape, &keep)?;
        Ok(Self { mat, shape: sub })
    }

    /// `u ρ u†`; `u` must be unitary.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        u.check_dim(self.dim())?;
        u.check_unitary()?;
        Ok(Self { mat: self.mat.conjugate_by(u), shape: self.shape.clone() })
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        let diff = &self.mat - &other.mat;
        0.5 * eigvalsh(&diff)
            .expect("difference of Hermitian matrices")
            .iter()
            .map(|v| v.abs())
            .sum::<f64>()
    }
}

pub(crate) fn check_distribution(table: &[f64], dim: usize) -> Result<()> {
    if table.len() != dim {
        return Err(ConcordiaError::DimensionMismatch { expected: dim, found: table.len() });
    }
    if let Some(p) = table.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(ConcordiaError::InvalidDistribution(format!("entry {p}")));
    }
    let total: f64 = table.iter().sum();
    if (total - 1.0).abs() > tol::TRACE {
        return Err(ConcordiaError::InvalidDistribution(format!("sums to {total}")));
    }
    Ok(())
}

/// A product of per-subsystem unitaries `U = u_0 ⊗ u_1 ⊗ ...`; column `k`
/// of `u_j` is the `k`-th basis vector of subsystem `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalBasis {
    shape: SubsystemShape,
    units: Vec<ComplexMatrix>,
}

impl LocalBasis {
    pub fn new(shape: SubsystemShape, units: Vec<ComplexMatrix>) -> Result<Self> {
        if units.len() != shape.len() {
            return Err(ConcordiaError::DimensionMismatch {
                expected: shape.len(),
                found: units.len(),
            });
        }
        for (u, &d) in units.iter().zip(shape.dims()) {
            u.check_dim(d)?;
            u.check_unitary()?;
        }
        Ok(Self { shape, units })
    }

    pub fn identity(shape: SubsystemShape) -> Self {
        let units = shape.dims().iter().map(|&d| ComplexMatrix::identity(d)).collect();
        Self { shape, units }
    }

    pub fn haar(shape: SubsystemShape, seed: u64) -> Self {
        Self::haar_with(shape, &mut rng::seeded(seed))
    }

    pub fn haar_with(shape: SubsystemShape, rng: &mut Rng) -> Self {
        let units = haar::haar_local_factors(&shape, rng);
        Self { shape, units }
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn units(&self) -> &[ComplexMatrix] {
        &self.units
    }

    pub fn unit(&self, j: usize) -> &ComplexMatrix {
        &self.units[j]
    }

    /// The full product unitary.
    pub fn matrix(&self) -> ComplexMatrix {
        kron_all(&self.units)
    }

    /// Product unitary over `subset`, factors in the listed order.
    pub fn sub_matrix(&self, subset: &[usize]) -> ComplexMatrix {
        kron_all(subset.iter().map(|&j| &self.units[j]))
    }

    pub fn with_unit(&self, j: usize, u: ComplexMatrix) -> Result<Self> {
        let mut units = self.units.clone();
        units[j] = u;
        Self::new(self.shape.clone(), units)
    }
}

/// `ρ = U · diag(p) · U†` with `U` a local product unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcordantState {
    basis: LocalBasis,
    probs: Vec<f64>,
}

impl ConcordantState {
    pub fn new(basis: LocalBasis, probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs, basis.shape().total_dim())?;
        Ok(Self { basis, probs })
    }

    /// Haar local basis with a uniformly random (flat Dirichlet) table.
    pub fn random(shape: SubsystemShape, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let basis = LocalBasis::haar_with(shape, &mut rng);
        let probs = random_table(basis.shape().total_dim(), &mut rng);
        Self { basis, probs }
    }

    pub fn basis(&self) -> &LocalBasis {
        &self.basis
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> &SubsystemShape {
        self.basis.shape()
    }
}

/// Flat-Dirichlet random distribution over `dim` outcomes.
pub fn random_table(dim: usize, rng: &mut Rng) -> Vec<f64> {
    use rand::Rng as _;
    let raw: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Mixed state drawn from the induced measure: trace out a `ancilla_dim`
/// environment from a Haar-random pure state.
pub fn random_mixed_state(shape: SubsystemShape, ancilla_dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = rng::seeded(seed);
    let d = shape.total_dim();
    let psi = haar::haar_vector(d * ancilla_dim, &mut rng);
    let mat = ComplexMatrix::from_fn(d, |r, c| {
        (0..ancilla_dim)
            .map(|a| psi[r * ancilla_dim + a] * psi[c * ancilla_dim + a].conj())
            .sum()
    });
    DensityMatrix::trusted(mat, shape)
}

pub fn to_density(c: &ConcordantState) -> DensityMatrix {
    let u = c.basis.matrix();
    let mat = ComplexMatrix::from_diagonal(&c.probs).conjugate_by(&u);
    DensityMatrix::trusted(mat, c.shape().clone())
}

/// Recovers the probability table of `rho` in a known local basis.
pub fn from_density(rho: &DensityMatrix, basis: &LocalBasis) -> Result<ConcordantState> {
    if rho.shape() != basis.shape() {
        return Err(ConcordiaError::InvalidShape(format!(
            "state shape {:?} vs basis shape {:?}",
            rho.shape().dims(),
            basis.shape().dims()
        )));
    }
    let u = basis.matrix();
    let d = rho.matrix().conjugate_by(&u.adjoint());
    let off = d.off_diagonal_norm();
    if off > tol::DIAGONALITY {
        return Err(ConcordiaError::NotDiagonalInBasis { off_diagonal: off });
    }
    // clip round-off negatives, renormalise
    let mut probs: Vec<f64> = d.diagonal_real().into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    ConcordantState::new(basis.clone(), probs)
}

/// `Σ_i p_i |i⟩⟨i|_S ⊗ ρ^{(i)}_{E_1} ⊗ ... ⊗ ρ^{(i)}_{E_n}`.
#[derive(Clone, Debug)]
pub struct SbsSpec {
    pub pointer_probs: Vec<f64>,
    pub system_dim: usize,
    /// `fragment_states[i][k]` is the record of pointer state `i` in fragment `k`.
    pub fragment_states: Vec<Vec<DensityMatrix>>,
}

impl SbsSpec {
    /// Every fragment is one qudit of dimension `system_dim` holding `|i⟩⟨i|`.
    pub fn orthogonal_records(pointer_probs: Vec<f64>, fragments: usize) -> Result<Self> {
        let d = pointer_probs.len();
        let shape = SubsystemShape::new(vec![d])?;
        let fragment_states = (0..d)
            .map(|i| {
                let rec = DensityMatrix::trusted(ComplexMatrix::basis_projector(d, i), shape.clone());
                vec![rec; fragments]
            })
            .collect();
        Ok(Self { pointer_probs, system_dim: d, fragment_states })
    }
}

pub fn build_sbs(spec: &SbsSpec) -> Result<DensityMatrix> {
    check_distribution(&spec.pointer_probs, spec.system_dim)?;
    if spec.fragment_states.len() != spec.system_dim {
        return Err(ConcordiaError::DimensionMismatch {
            expected: spec.system_dim,
            found: spec.fragment_states.len(),
        });
    }
    let fragments = spec.fragment_states[0].len();
    let frag_shapes: Vec<&SubsystemShape> =
        spec.fragment_states[0].iter().map(|f| f.shape()).collect();
    for records in &spec.fragment_states {
        if records.len() != fragments {
            return Err(ConcordiaError::DimensionMismatch { expected: fragments, found: records.len() });
        }
        for (rec, sh) in records.iter().zip(&frag_shapes) {
            if rec.shape() != *sh {
                return Err(ConcordiaError::InvalidShape("fragment shapes differ across pointer states".into()));
            }
        }
    }
    let mut dims = vec![spec.system_dim];
    for sh in &frag_shapes {
        dims.extend_from_slice(sh.dims());
    }
    let shape = SubsystemShape::new(dims)?;
    let mut total = ComplexMatrix::zeros(shape.total_dim());
    for (i, records) in spec.fragment_states.iter().enumerate() {
        let p = spec.pointer_probs[i];
        if p == 0.0 {
            continue;
        }
        let pointer = ComplexMatrix::basis_projector(spec.system_dim, i).scale(p);
        let term = records.iter().fold(pointer, |acc, r| kron(&acc, r.matrix()));
        total = &total + &term;
    }
    Ok(DensityMatrix::trusted(total, shape))
}

// ---- JSON forms ----

#[derive(Serialize, Deserialize)]
pub(crate) struct DensityJson {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson { dims: self.shape.dims().to_vec(), matrix: self.mat.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = DensityJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        DensityMatrix::new(j.matrix, shape).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    dims: Vec<usize>,
    units: Vec<ComplexMatrix>,
}

impl Serialize for LocalBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BasisJson { dims: self.shape.dims().to_vec(), units: self.units.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalBasis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = BasisJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        LocalBasis::new(shape, j.units).map_err(D::Error::custom)
    }
}

/// Probability table keyed by basis-state label (`"010"`); absent keys are 0.
pub fn table_to_labels(shape: &SubsystemShape, table: &[f64]) -> BTreeMap<String, f64> {
    table
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != 0.0)
        .map(|(i, &p)| (shape.label(i), p))
        .collect()
}

pub fn table_from_labels(shape: &SubsystemShape, labels: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut table = vec![0.0; shape.total_dim()];
    for (label, &p) in labels {
        table[shape.parse_label(label)?] = p;
    }
    Ok(table)
}

#[derive(Serialize, Deserialize)]
struct ConcordantJson {
    dims: Vec<usize>,
    basis: Vec<ComplexMatrix>,
    probs: BTreeMap<String, f64>,
}

impl Serialize for ConcordantState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConcordantJson {
            dims: self.shape().dims().to_vec(),
            basis: self.basis.units.clone(),
            probs: table_to_labels(self.shape(), &self.probs),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConcordantState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = ConcordantJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        let probs = table_from_labels(&shape, &j.probs).map_err(D::Error::custom)?;
        let basis = LocalBasis::new(shape, j.basis).map_err(D::Error::custom)?;
        ConcordantState::new(basis, probs).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gates_std::hadamard;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn to_density_examples() {
        let shape = SubsystemShape::qubits(2);
        let delta = ConcordantState::new(LocalBasis::identity(shape.clone()), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(to_density(&delta).matrix(), &ComplexMatrix::basis_projector(4, 0));

        let basis = LocalBasis::new(shape.clone(), vec![hadamard(), ComplexMatrix::identity(2)]).unwrap();
        let st = ConcordantState::new(basis, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |+0⟩ and |−1⟩ by hand
        let plus0 = ComplexMatrix::outer(&[c(s), c(0.0), c(s), c(0.0)]);
        let minus1 = ComplexMatrix::outer(&[c(0.0), c(s), c(0.0), c(-s)]);
        let expected = (&plus0 + &minus1).scale(0.5);
        assert!(to_density(&st).matrix().frobenius_distance(&expected) < 1e-15);
    }

    #[test]
    fn from_density_examples() {
        let shape = SubsystemShape::qubits(2);
        let mixed = DensityMatrix::maximally_mixed(shape.clone());
        let st = from_density(&mixed, &LocalBasis::haar(shape.clone(), 3)).unwrap();
        assert!(st.probs().iter().all(|p| (p - 0.25).abs() < 1e-12));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)], shape.clone()).unwrap();
        assert!(matches!(
            from_density(&bell, &LocalBasis::identity(shape)),
            Err(ConcordiaError::NotDiagonalInBasis { .. })
        ));
    }

    #[test]
    fn round_trip_recovers_tables() {
        for seed in 0..100 {
            let n = 2 + (seed % 3) as usize;
            let st = ConcordantState::random(SubsystemShape::qubits(n), seed);
            let back = from_density(&to_density(&st), st.basis()).unwrap();
            let err = back.probs().iter().zip(st.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-9, "seed {seed}: {err}");
        }
    }

    #[test]
    fn sbs_examples() {
        // one fragment with |i⟩⟨i| records
        let spec = SbsSpec::orthogonal_records(vec![0.3, 0.7], 1).unwrap();
        let rho = build_sbs(&spec).unwrap();
        assert_eq!(rho.matrix(), &ComplexMatrix::from_diagonal(&[0.3, 0.0, 0.0, 0.7]));

        // three orthogonal fragments: dephased GHZ on four qubits
        let spec = SbsSpec::orthogonal_records(vec![0.5, 0.5], 3).unwrap();
        let rho = build_sbs(&spec).unwrap();
        let mut diag = vec![0.0; 16];
        diag[0] = 0.5;
        diag[15] = 0.5;
        assert_eq!(rho.matrix(), &ComplexMatrix::from_diagonal(&diag));
        let sys = rho.reduce(&[0]).unwrap();
        assert!(sys.matrix().frobenius_distance(&ComplexMatrix::from_diagonal(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn sbs_fragment_identifies_pointer() {
        let spec = SbsSpec::orthogonal_records(vec![0.2, 0.5, 0.3], 2).unwrap();
        let rho = build_sbs(&spec).unwrap();
        // joint distribution of (system, fragment k) in the record basis
        for k in 1..=2 {
            let joint = rho.reduce(&[0, k]).unwrap();
            let diag = joint.matrix().diagonal_real();
            for i in 0..3 {
                for r in 0..3 {
                    let p = diag[i * 3 + r];
                    if i != r {
                        assert_eq!(p, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sbs_dimension_mismatch() {
        let mut spec = SbsSpec::orthogonal_records(vec![0.5, 0.5], 2).unwrap();
        spec.fragment_states[1].pop();
        assert!(build_sbs(&spec).is_err());
    }

    #[test]
    fn density_validation() {
        let shape = SubsystemShape::qubits(1);
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[0.7, 0.7]), shape.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[1.5, -0.5]), shape.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_diagonal(&[0.5, 0.5]), shape).is_ok());
    }

    #[test]
    fn json_forms_round_trip() {
        let st = ConcordantState::random(SubsystemShape::qubits(2), 4);
        let json = serde_json::to_string(&st).unwrap();
        let back: ConcordantState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, st);
        let rho = to_density(&st);
        let back: DensityMatrix = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
        assert_eq!(back, rho);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn to_density_is_valid_and_preserves_spectrum(seed in 0u64..10_000, n in 1usize..4) {
            let st = ConcordantState::random(SubsystemShape::qubits(n), seed);
            let rho = to_density(&st);
            prop_assert!(DensityMatrix::new(rho.matrix().clone(), rho.shape().clone()).is_ok());
            let mut p = st.probs().to_vec();
            p.sort_by(f64::total_cmp);
            let spec = rho.spectrum();
            for (a, b) in p.iter().zip(&spec) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
