//! Local basis finder: given a gate `G` and the local basis `L_prev` a state
//! is diagonal in before the gate, find the unique local basis that
//! diagonalises every transformed computational projector
//! `X̃_k = G L_prev X_k L_prev† G†`, or classify why none exists.

use serde::{Deserialize, Serialize};

use crate::commutant::{axis_unitary, qubit_commutant};
use crate::error::{ConcordiaError, Result};
use crate::gates::embed_operator;
use crate::states::LocalBasis;
use crate::tensor::gates_std::{hadamard, rz};
use crate::tensor::{kron, ComplexMatrix, Permutation, SubsystemShape};
use crate::tol;

/// Rank-1 projectors on one qubit that commute with a transformed projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionSet {
    /// Exactly the basis `{|±n⟩⟨±n|}`.
    Unique { axis: [f64; 3] },
    /// The operator acts trivially on this qubit; every basis works.
    Unconstrained,
    /// A family of Bloch directions spanned by `directions`.
    Continuum { directions: Vec<[f64; 3]> },
    /// Only the identity commutes; no rank-1 projector does.
    Empty,
}

impl SolutionSet {
    pub fn unitary(&self) -> Option<ComplexMatrix> {
        match self {
            SolutionSet::Unique { axis } => Some(axis_unitary(*axis)),
            _ => None,
        }
    }
}

/// `G L X L† G†`.
pub fn transform_projector(g: &ComplexMatrix, l_prev: &LocalBasis, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let l = l_prev.matrix();
    g.check_dim(l.dim())?;
    x.check_dim(l.dim())?;
    let glx = &(g * &l) * x;
    Ok(&glx * &(g * &l).adjoint())
}

/// Solves `[I ⊗ ρ^{(j)} ⊗ I, X̃] = 0` for 2×2 Hermitian `ρ^{(j)}` and
/// classifies the rank-1 solutions.
pub fn commutant_rank1_solutions(
    x_tilde: &ComplexMatrix,
    shape: &SubsystemShape,
    qubit: usize,
    support: &[usize],
) -> Result<SolutionSet> {
    if !support.contains(&qubit) {
        return Err(ConcordiaError::InvalidInput(format!("qubit {qubit} is not in the support")));
    }
    check_qubit(shape, qubit)?;
    x_tilde.check_dim(shape.total_dim())?;
    let null = qubit_commutant(&[x_tilde], shape, qubit)?;
    Ok(match null.len() {
        0 => SolutionSet::Empty,
        1 => SolutionSet::Unique { axis: null[0] },
        3 => SolutionSet::Unconstrained,
        _ => SolutionSet::Continuum { directions: null },
    })
}

fn check_qubit(shape: &SubsystemShape, j: usize) -> Result<()> {
    shape.check_subsystem(j)?;
    match shape.dim(j) {
        2 => Ok(()),
        dim => Err(ConcordiaError::UnsupportedDimension { subsystem: j, dim }),
    }
}

/// Computational-basis projectors on `support`, each given as the set of
/// support basis states it sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFamily {
    pub support: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ProjectorFamily {
    pub fn new(shape: &SubsystemShape, support: Vec<usize>, members: Vec<Vec<usize>>) -> Result<Self> {
        shape.check_subset(&support)?;
        if support.is_empty() {
            return Err(ConcordiaError::InvalidInput("empty support".into()));
        }
        for &j in &support {
            check_qubit(shape, j)?;
        }
        let d = 1usize << support.len();
        let mut members: Vec<Vec<usize>> = members
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                m.dedup();
                m
            })
            .collect();
        if members.iter().any(|m| m.is_empty() || m.iter().any(|&i| i >= d)) {
            return Err(ConcordiaError::InvalidInput("projector members must be nonempty subsets of the support basis".into()));
        }
        // canonical order makes the outcome independent of how members were listed
        members.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConcordiaError::InvalidInput("duplicate projector".into()));
        }
        Ok(Self { support, members })
    }

    pub fn rank_one(shape: &SubsystemShape, support: Vec<usize>) -> Result<Self> {
        let d = 1usize << support.len();
        Self::new(shape, support, (0..d).map(|i| vec![i]).collect())
    }

    /// Every nonempty subset of the support basis.
    pub fn all_ranks(shape: &SubsystemShape, support: Vec<usize>) -> Result<Self> {
        let d = 1usize << support.len();
        if d > 16 {
            return Err(ConcordiaError::TooLarge { qubits: support.len(), limit: 4 });
        }
        let members = (1..(1usize << d))
            .map(|mask| (0..d).filter(|i| mask >> i & 1 == 1).collect())
            .collect();
        Self::new(shape, support, members)
    }

    /// Projector of `member` on the support, identity elsewhere.
    pub fn member_matrix(&self, shape: &SubsystemShape, member: &[usize]) -> Result<ComplexMatrix> {
        let d = 1usize << self.support.len();
        let diag: Vec<f64> = (0..d).map(|i| if member.contains(&i) { 1.0 } else { 0.0 }).collect();
        embed_operator(&ComplexMatrix::from_diagonal(&diag), shape, &self.support)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfStatus {
    Success,
    Ambiguous,
    Incompatible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitSolution {
    pub qubit: usize,
    pub solution: SolutionSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorReport {
    pub rank: usize,
    pub members: Vec<String>,
    pub solutions: Vec<QubitSolution>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfOutcome {
    pub status: LbfStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<LocalBasis>,
    /// Qubit on which the failure was detected.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qubit: Option<usize>,
    pub reports: Vec<ProjectorReport>,
}

fn same_axis(a: [f64; 3], b: [f64; 3]) -> bool {
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).abs().min(1.0);
    dot.acos() <= tol::BASIS_ANGLE
}

/// Per-qubit intersection of the unique bases found so far.
struct Intersection {
    axes: Vec<Option<[f64; 3]>>,
}

enum Fold {
    Continue,
    Fail(usize),
}

impl Intersection {
    fn absorb(&mut self, report: &ProjectorReport, support: &[usize]) -> Fold {
        for (k, sol) in report.solutions.iter().enumerate() {
            match &sol.solution {
                SolutionSet::Empty => return Fold::Fail(support[k]),
                SolutionSet::Unique { axis } => match self.axes[k] {
                    Some(prev) if !same_axis(prev, *axis) => return Fold::Fail(support[k]),
                    Some(_) => {}
                    None => self.axes[k] = Some(*axis),
                },
                SolutionSet::Unconstrained | SolutionSet::Continuum { .. } => {}
            }
        }
        Fold::Continue
    }

    fn resolved(&self) -> bool {
        self.axes.iter().all(Option::is_some)
    }
}

/// `g` may act on the whole register of `l_prev` or only on the family's
/// support (its factor order following `family.support`); in the latter case
/// qubits outside the support keep their previous basis.
pub fn run_lbf(g: &ComplexMatrix, l_prev: &LocalBasis, family: &ProjectorFamily) -> Result<LbfOutcome> {
    let shape = l_prev.shape();
    let g_full = if g.dim() == shape.total_dim() {
        g.clone()
    } else {
        embed_operator(g, shape, &family.support)?
    };
    g_full.check_unitary()?;
    let support = &family.support;
    let sup_shape = shape.sub_shape(support)?;

    let evaluate = |member: &Vec<usize>| -> Result<(ProjectorReport, ComplexMatrix)> {
        let x = family.member_matrix(shape, member)?;
        let xt = transform_projector(&g_full, l_prev, &x)?;
        let solutions = support
            .iter()
            .map(|&q| Ok(QubitSolution { qubit: q, solution: commutant_rank1_solutions(&xt, shape, q, support)? }))
            .collect::<Result<Vec<_>>>()?;
        let report = ProjectorReport {
            rank: member.len(),
            members: member.iter().map(|&i| sup_shape.label(i)).collect(),
            solutions,
        };
        Ok((report, xt))
    };

    let mut inter = Intersection { axes: vec![None; support.len()] };
    let mut reports = Vec::new();
    let mut tested = Vec::new();
    let (rank_one, higher): (Vec<&Vec<usize>>, Vec<&Vec<usize>>) =
        family.members.iter().partition(|m| m.len() == 1);

    for stage in [rank_one, higher] {
        if !reports.is_empty() && inter.resolved() {
            break;
        }
        for member in stage {
            let (report, xt) = evaluate(member)?;
            let fold = inter.absorb(&report, support);
            reports.push(report);
            tested.push(xt);
            if let Fold::Fail(q) = fold {
                return Ok(LbfOutcome { status: LbfStatus::Incompatible, basis: None, qubit: Some(q), reports });
            }
        }
    }

    if let Some(k) = inter.axes.iter().position(Option::is_none) {
        return Ok(LbfOutcome { status: LbfStatus::Ambiguous, basis: None, qubit: Some(support[k]), reports });
    }

    let mut units = l_prev.units().to_vec();
    for (k, &q) in support.iter().enumerate() {
        units[q] = axis_unitary(inter.axes[k].expect("resolved"));
    }
    let basis = LocalBasis::new(shape.clone(), units)?;
    let l = basis.matrix();
    let diagonal = tested
        .iter()
        .all(|xt| xt.conjugate_by(&l.adjoint()).off_diagonal_norm() <= tol::DIAGONALITY);
    if !diagonal {
        return Ok(LbfOutcome { status: LbfStatus::Incompatible, basis: None, qubit: None, reports });
    }
    Ok(LbfOutcome { status: LbfStatus::Success, basis: Some(basis), qubit: None, reports })
}

/// `[[1,0],[0,1]] ⊕ [[cos θ, −sin θ],[sin θ, cos θ]]`: a rotation inside
/// `span{|10⟩, |11⟩}`.
pub fn lower_block_rotation(theta: f64) -> ComplexMatrix {
    let (c, s) = (theta.cos(), theta.sin());
    ComplexMatrix::from_real_rows(&[
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, c, -s],
        vec![0.0, 0.0, s, c],
    ])
    .expect("4x4")
}

/// Two-qubit gate `(R_z(π/4) ⊗ H) · SWAP(|10⟩,|11⟩) · B(θ)`. It maps states
/// diagonal in the computational basis to concordant states, yet for θ = π/4
/// its transformed rank-1 projectors disagree about the basis of qubit 1.
pub fn basis_ambiguity_gate(theta: f64) -> ComplexMatrix {
    let v = kron(&rz(std::f64::consts::FRAC_PI_4), &hadamard());
    let p = Permutation::transposition(4, 2, 3).expect("dim 4").matrix();
    &(&v * &p) * &lower_block_rotation(theta)
}
