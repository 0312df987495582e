//! Conditional decompositions of concordant states relative to a subset of
//! subsystems, grouping of equal conditionals into higher-rank projectors,
//! and the permutation-commutator degeneracy test.

use serde::Serialize;

use crate::error::{ConcordiaError, Result};
use crate::gates::BlockStructure;
use crate::states::{ConcordantState, DensityMatrix, LocalBasis};
use crate::tensor::{kron, ComplexMatrix, Permutation, SubsystemShape};
use crate::tol;

/// One branch `ρ̃_k ⊗ π_k`: `π_k` is basis state `index` of the support
/// (in the state's local basis) and `conditional` is unnormalised.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionalTerm {
    pub index: usize,
    pub label: String,
    pub weight: f64,
    /// Diagonal of `ρ̃_k` in the state's basis on the complement.
    pub table: Vec<f64>,
    pub conditional: ComplexMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionalDecomposition {
    pub support: Vec<usize>,
    pub complement: Vec<usize>,
    #[serde(skip)]
    pub basis: LocalBasis,
    pub terms: Vec<ConditionalTerm>,
}

pub fn conditional_decomposition(c: &ConcordantState, support: &[usize]) -> Result<ConditionalDecomposition> {
    let shape = c.shape();
    shape.check_subset(support)?;
    if support.is_empty() || support.len() == shape.len() {
        return Err(ConcordiaError::InvalidInput("support must be a nonempty proper subset".into()));
    }
    let complement = shape.complement(support);
    let sup_shape = shape.sub_shape(support)?;
    let so = shape.offsets(support);
    let ao = shape.offsets(&complement);
    let u_a = c.basis().sub_matrix(&complement);
    let terms = so
        .iter()
        .enumerate()
        .map(|(k, &base)| {
            let table: Vec<f64> = ao.iter().map(|&a| c.probs()[base + a]).collect();
            let conditional = ComplexMatrix::from_diagonal(&table).conjugate_by(&u_a);
            ConditionalTerm {
                index: k,
                label: sup_shape.label(k),
                weight: table.iter().sum(),
                table,
                conditional,
            }
        })
        .collect();
    Ok(ConditionalDecomposition {
        support: support.to_vec(),
        complement,
        basis: c.basis().clone(),
        terms,
    })
}

impl ConditionalDecomposition {
    fn support_dim(&self) -> usize {
        self.terms.len()
    }

    /// `Σ_k ρ̃_k ⊗ π_k` in natural subsystem order.
    pub fn reassemble(&self) -> Result<DensityMatrix> {
        let groups: Vec<(Vec<usize>, &ComplexMatrix)> =
            self.terms.iter().map(|t| (vec![t.index], &t.conditional)).collect();
        reassemble(&self.basis, &self.support, &self.complement, &groups)
    }
}

fn reassemble(
    basis: &LocalBasis,
    support: &[usize],
    complement: &[usize],
    groups: &[(Vec<usize>, &ComplexMatrix)],
) -> Result<DensityMatrix> {
    let shape = basis.shape();
    let u_b = basis.sub_matrix(support);
    let db = u_b.dim();
    let mut total = ComplexMatrix::zeros(shape.total_dim());
    for (indices, cond) in groups {
        let diag: Vec<f64> = (0..db).map(|i| if indices.contains(&i) { 1.0 } else { 0.0 }).collect();
        let proj = ComplexMatrix::from_diagonal(&diag).conjugate_by(&u_b);
        total = &total + &kron(cond, &proj);
    }
    let order: Vec<usize> = complement.iter().chain(support).copied().collect();
    DensityMatrix::new(total.reorder_subsystems(shape, &order)?, shape.clone())
}

/// A higher-rank projector on the support and the conditional shared by
/// every basis state it groups.
#[derive(Clone, Debug, Serialize)]
pub struct FraseBlock {
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
    pub conditional: ComplexMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct FraseDecomposition {
    pub support: Vec<usize>,
    pub complement: Vec<usize>,
    #[serde(skip)]
    pub basis: LocalBasis,
    pub blocks: Vec<FraseBlock>,
}

impl FraseDecomposition {
    /// Partition of the support basis into blocks.
    pub fn structure(&self) -> BlockStructure {
        BlockStructure::new(self.blocks.iter().map(|b| b.indices.clone()).collect())
            .expect("frase blocks partition the support")
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// `Σ_k ρ̃_k ⊗ Π_k`.
    pub fn reassemble(&self) -> Result<DensityMatrix> {
        let groups: Vec<(Vec<usize>, &ComplexMatrix)> =
            self.blocks.iter().map(|b| (b.indices.clone(), &b.conditional)).collect();
        reassemble(&self.basis, &self.support, &self.complement, &groups)
    }
}

/// Union–find with merges applied in ascending index order.
struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so the result does not depend on merge order
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Groups support basis states whose conditionals are within `tau`
/// (Frobenius), closed transitively.
pub fn frase(dec: &ConditionalDecomposition, tau: f64) -> FraseDecomposition {
    let n = dec.support_dim();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in a + 1..n {
            // same basis on the complement, so the Frobenius distance of the
            // operators equals the Euclidean distance of their tables
            let d = dec.terms[a]
                .table
                .iter()
                .zip(&dec.terms[b].table)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if d <= tau {
                uf.union(a, b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf.find(i);
        groups[r].push(i);
    }
    let blocks = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|indices| FraseBlock {
            labels: indices.iter().map(|&i| dec.terms[i].label.clone()).collect(),
            conditional: dec.terms[indices[0]].conditional.clone(),
            indices,
        })
        .collect();
    FraseDecomposition {
        support: dec.support.clone(),
        complement: dec.complement.clone(),
        basis: dec.basis.clone(),
        blocks,
    }
}

/// Sets of full-register basis states with equal probability.
pub fn degenerate_blocks(table: &[f64], tol: f64) -> BlockStructure {
    BlockStructure::from_table(table, tol)
}

/// Whether `P†QP` commutes with `rho0`, with `P` the accumulated history of
/// permutations.
pub fn eastin_test(rho0: &DensityMatrix, p_history: &Permutation, q: &Permutation) -> Result<bool> {
    let d = rho0.dim();
    for found in [p_history.dim(), q.dim()] {
        if found != d {
            return Err(ConcordiaError::DimensionMismatch { expected: d, found });
        }
    }
    // P†QP as an index map: apply P, then Q, then P⁻¹
    let m = p_history.then(q).then(&p_history.inverse());
    // ‖[M, ρ]‖ = ‖M ρ M† − ρ‖, and (MρM†)[m(i), m(j)] = ρ[i, j]
    let rho = rho0.matrix();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (rho.get(i, j) - rho.get(m.apply(i), m.apply(j))).norm_sqr();
        }
    }
    Ok(acc.sqrt() <= tol::COMMUTATOR)
}

/// All 24 permutations of a four-dimensional (two-qubit) space, in
/// lexicographic order of their maps.
pub fn two_qubit_permutations() -> Vec<Permutation> {
    let mut out = Vec::with_capacity(24);
    let mut map = vec![0usize, 1, 2, 3];
    permute_all(&mut map, 0, &mut out);
    out.sort_by(|a, b| a.map().cmp(b.map()));
    out
}

fn permute_all(map: &mut Vec<usize>, k: usize, out: &mut Vec<Permutation>) {
    if k == map.len() {
        out.push(Permutation::new(map.clone()).expect("swaps keep a bijection"));
        return;
    }
    for i in k..map.len() {
        map.swap(k, i);
        permute_all(map, k + 1, out);
        map.swap(k, i);
    }
}

/// Lifts a permutation of the joint basis of `qubits` (first listed most
/// significant) to the full register.
pub fn embed_permutation(p: &Permutation, shape: &SubsystemShape, qubits: &[usize]) -> Result<Permutation> {
    shape.check_subset(qubits)?;
    let sub = shape.sub_shape(qubits)?;
    if p.dim() != sub.total_dim() {
        return Err(ConcordiaError::DimensionMismatch { expected: sub.total_dim(), found: p.dim() });
    }
    let map = (0..shape.total_dim())
        .map(|x| {
            let mut digits = shape.digits(x);
            let local: Vec<usize> = qubits.iter().map(|&q| digits[q]).collect();
            let image = sub.digits(p.apply(sub.index(&local)));
            for (&q, &v) in qubits.iter().zip(&image) {
                digits[q] = v;
            }
            shape.index(&digits)
        })
        .collect();
    Permutation::new(map)
}
