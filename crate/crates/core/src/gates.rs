//! Gates of the form `G = U_out · P · B · U_in†` with local unitaries
//! `U_out`, `U_in`, a basis permutation `P` and a unitary `B` that only mixes
//! states inside declared blocks.

use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};
use crate::rng;
use crate::states::{DensityMatrix, LocalBasis};
use crate::tensor::{haar, kron, ComplexMatrix, Permutation, SubsystemShape};
use crate::tol;

/// A partition of `0..dim` into blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct BlockStructure {
    partition: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl BlockStructure {
    pub fn new(partition: Vec<Vec<usize>>) -> Result<Self> {
        let dim: usize = partition.iter().map(Vec::len).sum();
        let mut owner = vec![usize::MAX; dim];
        for (b, block) in partition.iter().enumerate() {
            if block.is_empty() {
                return Err(ConcordiaError::InvalidInput("empty block".into()));
            }
            for &i in block {
                if i >= dim || owner[i] != usize::MAX {
                    return Err(ConcordiaError::InvalidInput(format!(
                        "blocks do not partition 0..{dim}"
                    )));
                }
                owner[i] = b;
            }
        }
        if dim == 0 {
            return Err(ConcordiaError::InvalidInput("empty partition".into()));
        }
        Ok(Self { partition, owner })
    }

    pub fn singletons(dim: usize) -> Self {
        Self { partition: (0..dim).map(|i| vec![i]).collect(), owner: (0..dim).collect() }
    }

    pub fn whole(dim: usize) -> Self {
        Self { partition: vec![(0..dim).collect()], owner: vec![0; dim] }
    }

    /// Groups indices whose table entries agree within `tol`, closing
    /// transitively along the sorted values.
    pub fn from_table(table: &[f64], tol: f64) -> Self {
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&a, &b| table[a].total_cmp(&table[b]).then(a.cmp(&b)));
        let mut partition: Vec<Vec<usize>> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            if pos > 0 && (table[i] - table[order[pos - 1]]).abs() <= tol {
                partition.last_mut().expect("nonempty").push(i);
            } else {
                partition.push(vec![i]);
            }
        }
        for block in &mut partition {
            block.sort_unstable();
        }
        partition.sort_by_key(|b| b[0]);
        Self::new(partition).expect("sorting yields a partition")
    }

    pub fn dim(&self) -> usize {
        self.owner.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn is_trivial(&self) -> bool {
        self.partition.iter().all(|b| b.len() == 1)
    }

    /// Frobenius norm of the entries of `m` that couple different blocks.
    pub fn off_block_norm(&self, m: &ComplexMatrix) -> f64 {
        let d = m.dim();
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                if self.owner[r] != self.owner[c] {
                    acc += m.get(r, c).norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Image of the partition under a permutation of indices.
    pub fn permuted(&self, p: &Permutation) -> Self {
        let mut partition: Vec<Vec<usize>> = self
            .partition
            .iter()
            .map(|b| {
                let mut nb: Vec<usize> = b.iter().map(|&i| p.apply(i)).collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        partition.sort_by_key(|b| b[0]);
        Self::new(partition).expect("permutation preserves a partition")
    }
}

impl TryFrom<Vec<Vec<usize>>> for BlockStructure {
    type Error = ConcordiaError;
    fn try_from(p: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<BlockStructure> for Vec<Vec<usize>> {
    fn from(b: BlockStructure) -> Self {
        b.partition
    }
}

/// Haar unitary on each block, no coupling between blocks.
pub fn random_block_unitary(bs: &BlockStructure, seed: u64) -> ComplexMatrix {
    let mut rng = rng::seeded(seed);
    let mut out = ComplexMatrix::zeros(bs.dim());
    for block in bs.blocks() {
        let u = haar::haar_unitary(block.len(), &mut rng);
        for (a, &r) in block.iter().enumerate() {
            for (b, &c) in block.iter().enumerate() {
                out.set(r, c, u.get(a, b));
            }
        }
    }
    out
}

/// `op` acting on the listed subsystems of `shape`, identity elsewhere.
/// The factor order of `op` follows `support`.
pub fn embed_operator(op: &ComplexMatrix, shape: &SubsystemShape, support: &[usize]) -> Result<ComplexMatrix> {
    shape.check_subset(support)?;
    let sub = shape.sub_shape(support)?;
    op.check_dim(sub.total_dim())?;
    let rest = shape.complement(support);
    let rest_dim: usize = rest.iter().map(|&j| shape.dim(j)).product();
    let full = kron(op, &ComplexMatrix::identity(rest_dim));
    let order: Vec<usize> = support.iter().chain(&rest).copied().collect();
    full.reorder_subsystems(shape, &order)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcordantGate {
    support: Vec<usize>,
    u_out: LocalBasis,
    perm: Permutation,
    block: ComplexMatrix,
    u_in: LocalBasis,
    structure: BlockStructure,
}

impl ConcordantGate {
    /// `structure` is the partition `block` must respect.
    pub fn new(
        support: Vec<usize>,
        u_out: LocalBasis,
        perm: Permutation,
        block: ComplexMatrix,
        u_in: LocalBasis,
        structure: BlockStructure,
    ) -> Result<Self> {
        if u_out.shape() != u_in.shape() {
            return Err(ConcordiaError::InvalidShape("u_out and u_in shapes differ".into()));
        }
        if support.len() != u_in.shape().len() {
            return Err(ConcordiaError::DimensionMismatch {
                expected: u_in.shape().len(),
                found: support.len(),
            });
        }
        let d = u_in.shape().total_dim();
        for found in [perm.dim(), block.dim(), structure.dim()] {
            if found != d {
                return Err(ConcordiaError::DimensionMismatch { expected: d, found });
            }
        }
        block.check_unitary()?;
        let off = structure.off_block_norm(&block);
        if off > tol::BLOCK_OFFDIAG {
            return Err(ConcordiaError::InvalidInput(format!(
                "block unitary couples different blocks (off-block norm {off:.3e})"
            )));
        }
        Ok(Self { support, u_out, perm, block, u_in, structure })
    }

    /// `U_out · P · U_in†` on every subsystem of `u_in`'s shape.
    pub fn unblocked(u_out: LocalBasis, perm: Permutation, u_in: LocalBasis) -> Result<Self> {
        let n = u_in.shape().len();
        let d = u_in.shape().total_dim();
        Self::new((0..n).collect(), u_out, perm, ComplexMatrix::identity(d), u_in, BlockStructure::whole(d))
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn u_out(&self) -> &LocalBasis {
        &self.u_out
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn block(&self) -> &ComplexMatrix {
        &self.block
    }

    pub fn u_in(&self) -> &LocalBasis {
        &self.u_in
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    /// The same gate with `B = I`.
    pub fn without_block(&self) -> Self {
        let d = self.block.dim();
        Self { block: ComplexMatrix::identity(d), ..self.clone() }
    }

    /// The gate matrix embedded into a larger register.
    pub fn embedded(&self, shape: &SubsystemShape) -> Result<ComplexMatrix> {
        embed_operator(&compose(self), shape, &self.support)
    }
}

/// `U_out · P · B · U_in†` on the support space.
pub fn compose(g: &ConcordantGate) -> ComplexMatrix {
    let pb = &g.perm.matrix() * &g.block;
    &(&g.u_out.matrix() * &pb) * &g.u_in.matrix().adjoint()
}

/// `G ρ G†`.
pub fn apply(rho: &DensityMatrix, g: &ComplexMatrix) -> Result<DensityMatrix> {
    rho.conjugate(g)
}

/// `|Tr(A†B)| / dim`, equal to 1 iff `A` and `B` are unitaries differing
/// by a global phase.
pub fn phase_insensitive_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.inner(b).norm() / a.dim() as f64
}

pub fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
    a.dim() == b.dim() && phase_insensitive_overlap(a, b) >= 1.0 - tol::DIAGONALITY
}

/// Whether `g_matrix` equals `compose(g)` up to a global phase, or failing
/// that, acts identically by conjugation on every projector `U_in |k⟩⟨k| U_in†`.
pub fn verify_decomposition(g_matrix: &ComplexMatrix, g: &ConcordantGate) -> bool {
    let composed = compose(g);
    if g_matrix.dim() != composed.dim() {
        return false;
    }
    if equal_up_to_phase(g_matrix, &composed) {
        return true;
    }
    let u_in = g.u_in.matrix();
    (0..composed.dim()).all(|k| {
        let col = u_in.column(k);
        let (a, b) = (g_matrix.apply(&col), composed.apply(&col));
        ComplexMatrix::outer(&a).frobenius_distance(&ComplexMatrix::outer(&b)) <= tol::DIAGONALITY
    })
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    support: Vec<usize>,
    u_out: Vec<ComplexMatrix>,
    perm: Permutation,
    block: ComplexMatrix,
    u_in: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocks: Option<BlockStructure>,
}

impl Serialize for ConcordantGate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GateJson {
            support: self.support.clone(),
            u_out: self.u_out.units().to_vec(),
            perm: self.perm.clone(),
            block: self.block.clone(),
            u_in: self.u_in.units().to_vec(),
            blocks: Some(self.structure.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConcordantGate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = GateJson::deserialize(d)?;
        let dims: Vec<usize> = j.u_in.iter().map(ComplexMatrix::dim).collect();
        let shape = SubsystemShape::new(dims).map_err(D::Error::custom)?;
        let u_out = LocalBasis::new(shape.clone(), j.u_out).map_err(D::Error::custom)?;
        let u_in = LocalBasis::new(shape.clone(), j.u_in).map_err(D::Error::custom)?;
        let structure = j.blocks.unwrap_or_else(|| BlockStructure::whole(shape.total_dim()));
        ConcordantGate::new(j.support, u_out, j.perm, j.block, u_in, structure).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::verify_concordant;
    use crate::states::{from_density, to_density, ConcordantState};
    use crate::tensor::gates_std::{cnot, hadamard, rz};
    use crate::tensor::{C64, ZERO};
    use proptest::prelude::*;

    fn q2() -> SubsystemShape {
        SubsystemShape::qubits(2)
    }

    #[test]
    fn compose_examples() {
        let id = LocalBasis::identity(q2());
        let g = ConcordantGate::unblocked(id.clone(), Permutation::identity(4), id.clone()).unwrap();
        assert_eq!(compose(&g), ComplexMatrix::identity(4));

        let g = ConcordantGate::unblocked(id.clone(), Permutation::transposition(4, 2, 3).unwrap(), id.clone()).unwrap();
        assert_eq!(compose(&g), cnot());
    }

    #[test]
    fn compose_two_qubit_rotated_swap_gate() {
        // V·P·B(π/4) from its factors, checked entry by entry against a hand expansion
        let theta = std::f64::consts::FRAC_PI_4;
        let (c, s) = (theta.cos(), theta.sin());
        let b = ComplexMatrix::from_real_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, c, -s],
            vec![0.0, 0.0, s, c],
        ])
        .unwrap();
        let v = LocalBasis::new(q2(), vec![rz(std::f64::consts::FRAC_PI_4), hadamard()]).unwrap();
        let structure = BlockStructure::new(vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let g = ConcordantGate::new(
            vec![0, 1],
            v,
            Permutation::transposition(4, 2, 3).unwrap(),
            b,
            LocalBasis::identity(q2()),
            structure,
        )
        .unwrap();
        let m = compose(&g);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e0 = C64::from_polar(1.0, -std::f64::consts::PI / 8.0);
        let e1 = C64::from_polar(1.0, std::f64::consts::PI / 8.0);
        // columns |00⟩,|01⟩ map to e0|0⟩|±⟩; |10⟩ ↦ e1|1⟩|0⟩, |11⟩ ↦ e1|1⟩|1⟩
        let expected = ComplexMatrix::from_rows(&[
            vec![e0 * h, e0 * h, ZERO, ZERO],
            vec![e0 * h, -e0 * h, ZERO, ZERO],
            vec![ZERO, ZERO, e1, ZERO],
            vec![ZERO, ZERO, ZERO, e1],
        ])
        .unwrap();
        assert!(m.frobenius_distance(&expected) < 1e-12, "{m:?}");
    }

    #[test]
    fn apply_examples() {
        let rho = to_density(&ConcordantState::random(q2(), 1));
        assert_eq!(apply(&rho, &ComplexMatrix::identity(4)).unwrap(), rho);

        // CNOT on ½(|+1⟩⟨+1| + |−1⟩⟨−1|)
        let h = LocalBasis::new(q2(), vec![hadamard(), ComplexMatrix::identity(2)]).unwrap();
        let st = ConcordantState::new(h, vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        let out = apply(&to_density(&st), &cnot()).unwrap();
        assert!(out.matrix().frobenius_distance(&ComplexMatrix::from_diagonal(&[0.0, 0.5, 0.5, 0.0])) < 1e-12);
        assert!(verify_concordant(&out).unwrap().is_some());

        let psi = crate::tensor::haar::haar_vector(4, &mut rng::seeded(2));
        let pure = DensityMatrix::pure(&psi, q2()).unwrap();
        let u = haar::haar_unitary(4, &mut rng::seeded(3));
        assert!((apply(&pure, &u).unwrap().purity() - 1.0).abs() < 1e-12);

        let bad = ComplexMatrix::from_diagonal(&[1.0, 1.0, 1.0, 2.0]);
        assert!(apply(&pure, &bad).is_err());
    }

    #[test]
    fn block_unitary_examples() {
        let diag = random_block_unitary(&BlockStructure::singletons(4), 1);
        assert!(diag.off_diagonal_norm() == 0.0 && diag.unitary_deviation() < 1e-12);

        let full = random_block_unitary(&BlockStructure::whole(4), 1);
        assert!(full.unitary_deviation() < 1e-12 && full.off_diagonal_norm() > 0.1);

        let bs = BlockStructure::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let b = random_block_unitary(&bs, 7);
        let d = ComplexMatrix::from_diagonal(&[0.3, 0.3, 0.2, 0.2]);
        assert!(d.conjugate_by(&b).frobenius_distance(&d) < 1e-10);
        assert_eq!(bs.off_block_norm(&b), 0.0);
    }

    #[test]
    fn block_structure_from_table() {
        let bs = BlockStructure::from_table(&[0.25, 0.125, 0.25, 0.125, 0.0, 0.25], 1e-9);
        assert_eq!(bs.blocks(), &[vec![0, 2, 5], vec![1, 3], vec![4]]);
        assert!(BlockStructure::new(vec![vec![0, 1], vec![1]]).is_err());
        assert!(BlockStructure::new(vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn verify_examples() {
        let id = LocalBasis::identity(q2());
        let g = ConcordantGate::unblocked(id.clone(), Permutation::transposition(4, 2, 3).unwrap(), id.clone()).unwrap();
        assert!(verify_decomposition(&compose(&g), &g));
        assert!(verify_decomposition(&cnot().scale_complex(C64::from_polar(1.0, 0.7)), &g));
        let wrong = ConcordantGate::unblocked(id.clone(), Permutation::identity(4), id).unwrap();
        assert!(!verify_decomposition(&cnot(), &wrong));
    }

    #[test]
    fn embedded_cnot_on_three_qubits() {
        let shape = SubsystemShape::qubits(3);
        // control 2, target 0
        let m = embed_operator(&cnot(), &shape, &[2, 0]).unwrap();
        for x in 0..8usize {
            let y = if x & 1 == 1 { x ^ 0b100 } else { x };
            assert_eq!(m.get(y, x), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn gate_json_round_trip() {
        let shape = q2();
        let bs = BlockStructure::new(vec![vec![0, 3], vec![1], vec![2]]).unwrap();
        let g = ConcordantGate::new(
            vec![0, 1],
            LocalBasis::haar(shape.clone(), 1),
            Permutation::random(4, 2),
            random_block_unitary(&bs, 3),
            LocalBasis::haar(shape, 4),
            bs,
        )
        .unwrap();
        let back: ConcordantGate = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unblocked_gate_maps_concordant_states(seed in 0u64..100_000, n in 1usize..5) {
            let shape = SubsystemShape::qubits(n);
            let st = ConcordantState::random(shape.clone(), seed);
            let u_out = LocalBasis::haar(shape.clone(), seed + 1);
            let perm = Permutation::random(shape.total_dim(), seed + 2);
            let g = ConcordantGate::unblocked(u_out.clone(), perm.clone(), st.basis().clone()).unwrap();
            let out = apply(&to_density(&st), &compose(&g)).unwrap();
            let back = from_density(&out, &u_out).unwrap();
            let want = perm.permute_table(st.probs());
            for (a, b) in back.probs().iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn block_unitary_hides_gate_but_not_state(seed in 0u64..100_000) {
            let shape = SubsystemShape::qubits(3);
            // table with degenerate pairs
            let table = vec![0.2, 0.2, 0.15, 0.15, 0.1, 0.1, 0.05, 0.05];
            let u_in = LocalBasis::haar(shape.clone(), seed);
            let st = ConcordantState::new(u_in.clone(), table.clone()).unwrap();
            let bs = BlockStructure::from_table(&table, 1e-12);
            let g = ConcordantGate::new(
                vec![0, 1, 2],
                LocalBasis::haar(shape.clone(), seed + 1),
                Permutation::random(8, seed + 2),
                random_block_unitary(&bs, seed + 3),
                u_in,
                bs,
            ).unwrap();
            let plain = g.without_block();
            let rho = to_density(&st);
            let a = apply(&rho, &compose(&g)).unwrap();
            let b = apply(&rho, &compose(&plain)).unwrap();
            prop_assert!(a.matrix().frobenius_distance(b.matrix()) <= 1e-9);
            prop_assert!(!equal_up_to_phase(&compose(&g), &compose(&plain)));
        }

        #[test]
        fn apply_preserves_spectrum(seed in 0u64..100_000) {
            let rho = crate::states::random_mixed_state(SubsystemShape::qubits(2), 3, seed);
            let u = haar::haar_unitary(4, &mut rng::seeded(seed));
            let out = apply(&rho, &u).unwrap();
            for (a, b) in rho.spectrum().iter().zip(out.spectrum()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
            prop_assert!((out.matrix().trace().re - 1.0).abs() <= 1e-12);
        }
    }
}
