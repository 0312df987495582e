//! Entropies, mutual information, classical correlation and discord with a
//! qubit measured projectively, Schmidt measure of pure states, and an exact
//! concordance check for qubit registers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutant::{axis_unitary, qubit_commutant};
use crate::error::{ConcordiaError, Result};
use crate::states::{from_density, DensityMatrix, LocalBasis};
use crate::tensor::{degenerate_groups, eigh, eigvalsh, ComplexMatrix, SubsystemShape, C64};
use crate::tol;

/// Largest register `verify_concordant` accepts.
pub const VERIFY_MAX_QUBITS: usize = 8;

/// `−Σ λ log₂ λ` over eigenvalues above the cutoff. The operator need not be
/// normalised.
pub fn entropy_of_operator(m: &ComplexMatrix) -> f64 {
    shannon_entropy(&eigvalsh(m).expect("entropy of a non-Hermitian operator"))
}

/// `−Σ p log₂ p`, ignoring entries at or below the cutoff.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > tol::ENTROPY_CUTOFF)
        .map(|&x| -x * x.log2())
        .sum()
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_operator(rho.matrix())
}

fn check_cut(shape: &SubsystemShape, cut: &[usize]) -> Result<()> {
    shape.check_subset(cut)?;
    if cut.is_empty() || cut.len() == shape.len() {
        return Err(ConcordiaError::InvalidInput("a bipartition needs both sides nonempty".into()));
    }
    Ok(())
}

/// `S(A) + S(B) − S(AB)` with `A = cut` and `B` its complement.
pub fn mutual_information(rho: &DensityMatrix, cut: &[usize]) -> Result<f64> {
    check_cut(rho.shape(), cut)?;
    let rest = rho.shape().complement(cut);
    let sa = von_neumann_entropy(&rho.reduce(cut)?);
    let sb = von_neumann_entropy(&rho.reduce(&rest)?);
    Ok(sa + sb - von_neumann_entropy(rho))
}

/// Grid-plus-simplex search over rank-1 projective qubit measurements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub theta_steps: usize,
    pub phi_steps: usize,
    /// Simplex stops once vertex values and positions agree to this.
    pub refine_tol: f64,
    pub refine_max_iter: usize,
    /// How many of the best grid points seed a refinement.
    pub refine_starts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { theta_steps: 64, phi_steps: 128, refine_tol: 1e-7, refine_max_iter: 400, refine_starts: 3 }
    }
}

impl OptimizerConfig {
    pub fn with_grid(theta_steps: usize, phi_steps: usize) -> Self {
        Self { theta_steps, phi_steps, ..Self::default() }
    }
}

/// Measurement `{|ψ⟩⟨ψ|, |ψ⊥⟩⟨ψ⊥|}` with `|ψ⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitMeasurement {
    pub theta: f64,
    pub phi: f64,
}

impl QubitMeasurement {
    pub fn new(theta: f64, phi: f64) -> Self {
        // fold onto θ ∈ [0, π], φ ∈ [0, 2π)
        let tau = std::f64::consts::TAU;
        let mut t = theta.rem_euclid(tau);
        let mut p = phi;
        if t > std::f64::consts::PI {
            t = tau - t;
            p += std::f64::consts::PI;
        }
        Self { theta: t, phi: p.rem_euclid(tau) }
    }

    pub fn vector(&self) -> [C64; 2] {
        [
            C64::new((self.theta / 2.0).cos(), 0.0),
            C64::from_polar((self.theta / 2.0).sin(), self.phi),
        ]
    }

    pub fn projectors(&self) -> [ComplexMatrix; 2] {
        let p = ComplexMatrix::outer(&self.vector());
        let q = &ComplexMatrix::identity(2) - &p;
        [p, q]
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let (t, p) = (self.theta, self.phi);
        [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscordResult {
    pub measured: usize,
    pub mutual_info: f64,
    pub classical_corr: f64,
    pub discord: f64,
    pub optimal_measurement: QubitMeasurement,
}

/// Blocks `ρ_ab = ⟨a|_m ρ |b⟩_m` acting on the unmeasured subsystems.
struct ConditionalBlocks {
    blocks: [[ComplexMatrix; 2]; 2],
    rest: ComplexMatrix,
}

impl ConditionalBlocks {
    fn new(rho: &DensityMatrix, measured: usize) -> Self {
        let shape = rho.shape();
        let others = shape.complement(&[measured]);
        let mo = shape.offsets(&[measured]);
        let ro = shape.offsets(&others);
        let m = rho.matrix();
        let block = |a: usize, b: usize| {
            ComplexMatrix::from_fn(ro.len(), |i, j| m.get(mo[a] + ro[i], mo[b] + ro[j]))
        };
        let blocks = [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]];
        let rest = &blocks[0][0] + &blocks[1][1];
        Self { blocks, rest }
    }

    /// `Σ_j p_j S(ρ_{B|j})` for the measurement at `(θ, φ)`.
    fn cost(&self, theta: f64, phi: f64) -> f64 {
        let psi = QubitMeasurement { theta, phi }.vector();
        let d = self.rest.dim();
        let b = &self.blocks;
        let sigma = ComplexMatrix::from_fn(d, |r, c| {
            let mut acc = C64::new(0.0, 0.0);
            for (x, row) in b.iter().enumerate() {
                for (y, blk) in row.iter().enumerate() {
                    acc += psi[x].conj() * psi[y] * blk.get(r, c);
                }
            }
            acc
        });
        let perp = &self.rest - &sigma;
        branch_entropy(&sigma) + branch_entropy(&perp)
    }
}

/// `p · S(σ/p)` for an unnormalised branch `σ` with `p = Tr σ`.
fn branch_entropy(sigma: &ComplexMatrix) -> f64 {
    let p = sigma.trace().re;
    if p <= tol::ENTROPY_CUTOFF {
        return 0.0;
    }
    (entropy_of_operator(sigma) + p * p.log2()).max(0.0)
}

fn check_measured(rho: &DensityMatrix, measured: usize) -> Result<()> {
    let shape = rho.shape();
    shape.check_subsystem(measured)?;
    if shape.len() < 2 {
        return Err(ConcordiaError::InvalidInput("need at least two subsystems".into()));
    }
    let dim = shape.dim(measured);
    if dim != 2 {
        return Err(ConcordiaError::UnsupportedDimension { subsystem: measured, dim });
    }
    Ok(())
}

/// `J = S(ρ_B) − min Σ_j p_j S(ρ_{B|j})` with `B` everything but `measured`.
pub fn classical_correlation(
    rho: &DensityMatrix,
    measured: usize,
    opt: &OptimizerConfig,
) -> Result<(f64, QubitMeasurement)> {
    check_measured(rho, measured)?;
    let blocks = ConditionalBlocks::new(rho, measured);
    let s_rest = entropy_of_operator(&blocks.rest);
    let (best, at) = minimise_cost(&blocks, opt);
    let j = (s_rest - best).max(0.0);
    Ok((j, QubitMeasurement::new(at.0, at.1)))
}

pub fn discord(rho: &DensityMatrix, measured: usize, opt: &OptimizerConfig) -> Result<DiscordResult> {
    let (classical_corr, optimal_measurement) = classical_correlation(rho, measured, opt)?;
    let mutual_info = mutual_information(rho, &[measured])?;
    // J cannot exceed I; clamp optimiser round-off
    let classical_corr = classical_corr.min(mutual_info.max(0.0));
    Ok(DiscordResult {
        measured,
        mutual_info,
        classical_corr,
        discord: mutual_info - classical_corr,
        optimal_measurement,
    })
}

fn grid_angle(opt: &OptimizerConfig, i: usize, k: usize) -> (f64, f64) {
    let theta = if opt.theta_steps > 1 {
        std::f64::consts::PI * i as f64 / (opt.theta_steps - 1) as f64
    } else {
        0.0
    };
    (theta, std::f64::consts::TAU * k as f64 / opt.phi_steps.max(1) as f64)
}

fn minimise_cost(blocks: &ConditionalBlocks, opt: &OptimizerConfig) -> (f64, (f64, f64)) {
    let (nt, np) = (opt.theta_steps.max(1), opt.phi_steps.max(1));
    // φ is irrelevant at the poles
    let cells: Vec<(usize, usize)> = (0..nt)
        .flat_map(|i| {
            let k_max = if i == 0 || (i == nt - 1 && nt > 1) { 1 } else { np };
            (0..k_max).map(move |k| (i, k))
        })
        .collect();
    let mut scored: Vec<(f64, usize, usize)> = cells
        .par_iter()
        .map(|&(i, k)| {
            let (t, p) = grid_angle(opt, i, k);
            (blocks.cost(t, p), i, k)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let (c0, i0, k0) = scored[0];
    let mut best = (c0, grid_angle(opt, i0, k0));
    let steps = (
        std::f64::consts::PI / nt.max(2) as f64,
        std::f64::consts::TAU / np as f64,
    );
    for &(_, i, k) in scored.iter().take(opt.refine_starts) {
        let start = grid_angle(opt, i, k);
        let (v, x) = nelder_mead(|x| blocks.cost(x.0, x.1), start, steps, opt);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// Two-dimensional Nelder–Mead with standard coefficients.
fn nelder_mead(
    f: impl Fn((f64, f64)) -> f64,
    start: (f64, f64),
    step: (f64, f64),
    opt: &OptimizerConfig,
) -> (f64, (f64, f64)) {
    type P = (f64, f64);
    let add = |a: P, b: P, s: f64| (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
    let mut simplex: Vec<(f64, P)> = [start, (start.0 + step.0, start.1), (start.0, start.1 + step.1)]
        .into_iter()
        .map(|x| (f(x), x))
        .collect();
    for _ in 0..opt.refine_max_iter {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread = simplex[2].0 - simplex[0].0;
        let size = simplex[1..]
            .iter()
            .map(|v| (v.1 .0 - simplex[0].1 .0).abs().max((v.1 .1 - simplex[0].1 .1).abs()))
            .fold(0.0, f64::max);
        if spread <= opt.refine_tol * 1e-3 && size <= opt.refine_tol {
            break;
        }
        let centroid = ((simplex[0].1 .0 + simplex[1].1 .0) / 2.0, (simplex[0].1 .1 + simplex[1].1 .1) / 2.0);
        let worst = simplex[2];
        let reflected = add(centroid, worst.1, -1.0);
        let fr = f(reflected);
        if fr < simplex[0].0 {
            let expanded = add(centroid, worst.1, -2.0);
            let fe = f(expanded);
            simplex[2] = if fe < fr { (fe, expanded) } else { (fr, reflected) };
        } else if fr < simplex[1].0 {
            simplex[2] = (fr, reflected);
        } else {
            let contracted = add(centroid, worst.1, 0.5);
            let fc = f(contracted);
            if fc < worst.0 {
                simplex[2] = (fc, contracted);
            } else {
                let best = simplex[0].1;
                for v in simplex.iter_mut().skip(1) {
                    let x = add(best, v.1, 0.5);
                    *v = (f(x), x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    simplex[0]
}

/// Finds a local product basis in which `rho` is diagonal, if one exists.
///
/// Every spectral projector of a product-diagonal state commutes with the
/// local basis projectors, so for each qubit the admissible Bloch axes are
/// the common commutant of all spectral projectors. The candidate is then
/// checked with `from_density`.
pub fn verify_concordant(rho: &DensityMatrix) -> Result<Option<LocalBasis>> {
    let shape = rho.shape();
    if let Some(j) = shape.dims().iter().position(|&d| d != 2) {
        return Err(ConcordiaError::UnsupportedDimension { subsystem: j, dim: shape.dim(j) });
    }
    if shape.len() > VERIFY_MAX_QUBITS {
        return Err(ConcordiaError::TooLarge { qubits: shape.len(), limit: VERIFY_MAX_QUBITS });
    }
    let eig = eigh(rho.matrix())?;
    let d = rho.dim();
    let projectors: Vec<ComplexMatrix> = degenerate_groups(&eig.values, tol::DEGENERACY_REL)
        .into_iter()
        .map(|g| {
            ComplexMatrix::from_fn(d, |r, c| {
                g.clone().map(|k| eig.vectors.get(r, k) * eig.vectors.get(c, k).conj()).sum()
            })
        })
        .collect();
    let ops: Vec<&ComplexMatrix> = projectors.iter().collect();

    let mut units = Vec::with_capacity(shape.len());
    for j in 0..shape.len() {
        let axes = qubit_commutant(&ops, shape, j)?;
        match axes.len() {
            0 => return Ok(None),
            3 => units.push(ComplexMatrix::identity(2)),
            _ => units.push(axis_unitary(axes[0])),
        }
    }
    let basis = LocalBasis::new(shape.clone(), units)?;
    match from_density(rho, &basis) {
        Ok(_) => Ok(Some(basis)),
        Err(ConcordiaError::NotDiagonalInBasis { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `log₂` of the largest Schmidt rank over all bipartitions of a pure state.
pub fn schmidt_measure(psi: &[C64], shape: &SubsystemShape) -> Result<f64> {
    if psi.len() != shape.total_dim() {
        return Err(ConcordiaError::DimensionMismatch { expected: shape.total_dim(), found: psi.len() });
    }
    let n = shape.len();
    let mut max_rank = 1usize;
    // subsets containing subsystem 0 cover every bipartition once
    for mask in 0..(1usize << (n - 1)) {
        let a: Vec<usize> = std::iter::once(0)
            .chain((1..n).filter(|k| mask >> (k - 1) & 1 == 1))
            .collect();
        if a.len() == n {
            continue;
        }
        let b = shape.complement(&a);
        let (ao, bo) = (shape.offsets(&a), shape.offsets(&b));
        let m = nalgebra::DMatrix::from_fn(ao.len(), bo.len(), |i, j| psi[ao[i] + bo[j]]);
        let rank = m.singular_values().iter().filter(|&&s| s > tol::SCHMIDT_CUTOFF).count();
        max_rank = max_rank.max(rank);
    }
    Ok((max_rank as f64).log2())
}
