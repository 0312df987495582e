//! How much a system's information is copied into fragments of its
//! environment: mutual information `I(S:F)` as a function of the fraction of
//! the environment held, and plateau/redundancy summaries of that curve.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlations::von_neumann_entropy;
use crate::error::{ConcordiaError, Result};
use crate::rng;
use crate::states::DensityMatrix;
use crate::tensor::{haar, ComplexMatrix, SubsystemShape};

/// Largest register (in qubits of Hilbert-space dimension) a curve is computed for.
pub const CURVE_MAX_QUBITS: usize = 12;

/// Purity within this of 1 counts as a pure global state.
const PURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// `|F| / |E|`.
    pub f: f64,
    pub mutual_info: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualInfoCurve {
    pub points: Vec<CurvePoint>,
    pub h_system: f64,
    pub env_size: usize,
}

/// Which fragments of each size are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum FragmentChoice {
    /// The first `k` entries of the environment order.
    #[default]
    Prefix,
    /// Average over this many random size-`k` subsets (all of them when
    /// there are no more than that).
    RandomSubsets { per_size: usize, seed: u64 },
}

struct EntropyOracle<'a> {
    rho: &'a DensityMatrix,
    pure: bool,
}

impl EntropyOracle<'_> {
    fn entropy(&self, subset: &[usize]) -> Result<f64> {
        let shape = self.rho.shape();
        if subset.is_empty() {
            return Ok(0.0);
        }
        if subset.len() == shape.len() {
            return Ok(if self.pure { 0.0 } else { von_neumann_entropy(self.rho) });
        }
        // a pure global state has equal entropies on complementary sides
        let mut side = subset.to_vec();
        if self.pure {
            let other = shape.complement(subset);
            let dim = |s: &[usize]| s.iter().map(|&j| shape.dim(j)).product::<usize>();
            if dim(&other) < dim(&side) {
                side = other;
            }
        }
        Ok(von_neumann_entropy(&self.rho.reduce(&side)?))
    }
}

/// `I(S:F) = S(S) + S(F) − S(S∪F)` for growing fragments `F` of `env_order`.
pub fn mutual_info_curve(
    rho_se: &DensityMatrix,
    system: &[usize],
    env_order: &[usize],
    choice: FragmentChoice,
) -> Result<MutualInfoCurve> {
    let shape = rho_se.shape();
    let qubits = (shape.total_dim() as f64).log2().ceil() as usize;
    if qubits > CURVE_MAX_QUBITS {
        return Err(ConcordiaError::TooLarge { qubits, limit: CURVE_MAX_QUBITS });
    }
    let all: Vec<usize> = system.iter().chain(env_order).copied().collect();
    shape.check_subset(&all)?;
    if system.is_empty() || env_order.is_empty() {
        return Err(ConcordiaError::InvalidInput("system and environment must be nonempty".into()));
    }
    let pure = (rho_se.purity() - 1.0).abs() <= PURE_TOL && all.len() == shape.len();
    let oracle = EntropyOracle { rho: rho_se, pure };
    let h_system = oracle.entropy(system)?;
    let n_env = env_order.len();

    let info = |fragment: &[usize]| -> Result<f64> {
        let joint: Vec<usize> = system.iter().chain(fragment).copied().collect();
        Ok(h_system + oracle.entropy(fragment)? - oracle.entropy(&joint)?)
    };

    let values: Vec<f64> = (1..=n_env)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let fragments = fragments_of_size(env_order, k, choice);
            let total = fragments.iter().map(|f| info(f)).sum::<Result<f64>>()?;
            Ok(total / fragments.len() as f64)
        })
        .collect::<Result<_>>()?;

    let mut points = vec![CurvePoint { f: 0.0, mutual_info: 0.0 }];
    points.extend(values.into_iter().enumerate().map(|(k, i)| CurvePoint {
        f: (k + 1) as f64 / n_env as f64,
        mutual_info: i,
    }));
    Ok(MutualInfoCurve { points, h_system, env_size: n_env })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fragments_of_size(env: &[usize], k: usize, choice: FragmentChoice) -> Vec<Vec<usize>> {
    match choice {
        FragmentChoice::Prefix => vec![env[..k].to_vec()],
        FragmentChoice::RandomSubsets { per_size, seed } => {
            let n = env.len();
            if binomial(n, k) <= per_size.max(1) as u128 {
                return combinations(n, k).into_iter().map(|c| c.iter().map(|&i| env[i]).collect()).collect();
            }
            let mut rng = rng::derived(seed, k as u64);
            (0..per_size.max(1))
                .map(|_| {
                    let mut pick: Vec<usize> = index::sample(&mut rng, n, k).into_iter().collect();
                    pick.sort_unstable();
                    pick.into_iter().map(|i| env[i]).collect()
                })
                .collect()
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauMetrics {
    /// Span in `f` of the longest run of consecutive points with `|I − H_S| ≤ δ`.
    pub plateau_width: f64,
    /// `⌊|E| / k*⌋` where `k*` is the smallest fragment size reaching
    /// `I ≥ H_S − δ`; zero if none does or the system carries no entropy.
    pub redundancy: usize,
}

pub fn plateau_metrics(curve: &MutualInfoCurve, delta: f64) -> PlateauMetrics {
    let h = curve.h_system;
    let mut best = 0.0f64;
    let mut start: Option<f64> = None;
    for p in &curve.points {
        if (p.mutual_info - h).abs() <= delta {
            let s = *start.get_or_insert(p.f);
            best = best.max(p.f - s);
        } else {
            start = None;
        }
    }
    let redundancy = if h <= delta {
        0
    } else {
        curve
            .points
            .iter()
            .skip(1)
            .position(|p| p.mutual_info >= h - delta)
            .map_or(0, |i| curve.env_size / (i + 1))
    };
    PlateauMetrics { plateau_width: best, redundancy }
}

/// `|ψ⟩⟨ψ|` for a Haar-random `|ψ⟩`.
pub fn random_pure_global(shape: SubsystemShape, seed: u64) -> DensityMatrix {
    let psi = haar::haar_vector(shape.total_dim(), &mut rng::seeded(seed));
    DensityMatrix::pure(&psi, shape).expect("normalised vector")
}

/// Pure state vector behind `random_pure_global`.
pub fn random_pure_vector(dim: usize, seed: u64) -> Vec<crate::tensor::C64> {
    haar::haar_vector(dim, &mut rng::seeded(seed))
}

/// `ρ_S ⊗ ρ_E` helper for building uncorrelated inputs.
pub fn product_state(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let dims: Vec<usize> = a.shape().dims().iter().chain(b.shape().dims()).copied().collect();
    let m: ComplexMatrix = crate::tensor::kron(a.matrix(), b.matrix());
    DensityMatrix::new(m, SubsystemShape::new(dims)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_sbs, random_mixed_state, SbsSpec};
    use crate::tensor::{C64, ZERO};

    fn env(n: usize) -> Vec<usize> {
        (1..=n).collect()
    }

    #[test]
    fn product_state_carries_no_information() {
        let s = DensityMatrix::diagonal(&[0.3, 0.7], SubsystemShape::qubits(1)).unwrap();
        let e = random_mixed_state(SubsystemShape::qubits(3), 2, 4);
        let rho = product_state(&s, &e).unwrap();
        let curve = mutual_info_curve(&rho, &[0], &env(3), FragmentChoice::Prefix).unwrap();
        assert!(curve.points.iter().all(|p| p.mutual_info.abs() < 1e-10));
        assert_eq!(plateau_metrics(&curve, 0.1 * curve.h_system).redundancy, 0);
    }

    #[test]
    fn perfect_sbs_plateau() {
        let spec = SbsSpec::orthogonal_records(vec![0.3, 0.7], 4).unwrap();
        let rho = build_sbs(&spec).unwrap();
        let curve = mutual_info_curve(&rho, &[0], &env(4), FragmentChoice::Prefix).unwrap();
        let h = curve.h_system;
        assert!((h - (-(0.3f64 * 0.3f64.log2() + 0.7 * 0.7f64.log2()))).abs() < 1e-12);
        assert_eq!(curve.points[0].mutual_info, 0.0);
        for p in &curve.points[1..] {
            assert!((p.mutual_info - h).abs() < 1e-9);
        }
        let m = plateau_metrics(&curve, 0.1 * h);
        assert_eq!(m.redundancy, 4);
        assert!((m.plateau_width - 0.75).abs() < 1e-12);
        // monotone in f
        assert!(curve.points.windows(2).all(|w| w[1].mutual_info >= w[0].mutual_info - 1e-12));
    }

    #[test]
    fn purified_sbs_doubles_at_full_environment() {
        // √p₀|0000⟩ + √p₁|1111⟩: every fragment short of the whole
        // environment carries H_S, the whole environment 2·H_S
        let (p0, p1) = (0.3f64, 0.7f64);
        let mut psi = vec![ZERO; 16];
        psi[0] = C64::new(p0.sqrt(), 0.0);
        psi[15] = C64::new(p1.sqrt(), 0.0);
        let rho = DensityMatrix::pure(&psi, SubsystemShape::qubits(4)).unwrap();
        let curve = mutual_info_curve(&rho, &[0], &env(3), FragmentChoice::Prefix).unwrap();
        let h = curve.h_system;
        assert!((curve.points[1].mutual_info - h).abs() < 1e-9);
        assert!((curve.points[2].mutual_info - h).abs() < 1e-9);
        assert!((curve.points[3].mutual_info - 2.0 * h).abs() < 1e-9);
    }

    #[test]
    fn pure_state_complement_identity() {
        // I(S:F) + I(S:E∖F) = 2·H_S, with every entropy from a direct partial trace
        let rho = random_pure_global(SubsystemShape::qubits(5), 3);
        let direct = |keep: &[usize]| von_neumann_entropy(&rho.reduce(keep).unwrap());
        let hs = direct(&[0]);
        let i = |f: &[usize]| {
            let mut joint = vec![0];
            joint.extend_from_slice(f);
            hs + direct(f) - direct(&joint)
        };
        let total = i(&[1, 3]) + i(&[2, 4]);
        assert!((total - 2.0 * hs).abs() < 1e-6);
        let curve = mutual_info_curve(&rho, &[0], &[1, 3, 2, 4], FragmentChoice::Prefix).unwrap();
        assert!((curve.points[2].mutual_info - i(&[1, 3])).abs() < 1e-9);
    }

    #[test]
    fn random_pure_state_has_no_plateau() {
        let rho = random_pure_global(SubsystemShape::qubits(10), 11);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        let curve = mutual_info_curve(&rho, &[0], &env(9), FragmentChoice::Prefix).unwrap();
        let last = curve.points.last().unwrap();
        assert!((last.mutual_info - 2.0 * curve.h_system).abs() < 1e-6);
        let m = plateau_metrics(&curve, 0.1 * curve.h_system);
        assert!(m.plateau_width < 0.3, "{m:?}");
    }

    #[test]
    fn random_subsets_average() {
        let rho = random_pure_global(SubsystemShape::qubits(6), 2);
        let choice = FragmentChoice::RandomSubsets { per_size: 20, seed: 1 };
        let a = mutual_info_curve(&rho, &[0], &env(5), choice).unwrap();
        let b = mutual_info_curve(&rho, &[0], &env(5), choice).unwrap();
        assert_eq!(a, b);
        // C(5,k) ≤ 20 for every k, so every subset is enumerated
        let brute = |k: usize| -> f64 {
            let subsets = combinations(5, k);
            let n = subsets.len() as f64;
            subsets
                .into_iter()
                .map(|c| {
                    let f: Vec<usize> = c.iter().map(|i| i + 1).collect();
                    let mut joint = vec![0];
                    joint.extend_from_slice(&f);
                    a.h_system + von_neumann_entropy(&rho.reduce(&f).unwrap())
                        - von_neumann_entropy(&rho.reduce(&joint).unwrap())
                })
                .sum::<f64>()
                / n
        };
        for k in 1..5 {
            assert!((a.points[k].mutual_info - brute(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn page_entropy_of_half_register() {
        // Page's mean entanglement entropy for m = n = 32
        let (m, n) = (32usize, 32usize);
        let nats: f64 = (n + 1..=m * n).map(|k| 1.0 / k as f64).sum::<f64>() - (m - 1) as f64 / (2 * n) as f64;
        let page = nats / std::f64::consts::LN_2;
        let mean: f64 = (0..20)
            .map(|seed| {
                let psi = random_pure_vector(1024, seed);
                let rho = DensityMatrix::pure(&psi, SubsystemShape::qubits(10)).unwrap();
                von_neumann_entropy(&rho.reduce(&[0, 1, 2, 3, 4]).unwrap())
            })
            .sum::<f64>()
            / 20.0;
        assert!((mean - page).abs() < 0.1, "{mean} vs {page}");
    }

    #[test]
    fn guards() {
        let rho = DensityMatrix::maximally_mixed(SubsystemShape::qubits(2));
        assert!(mutual_info_curve(&rho, &[0], &[], FragmentChoice::Prefix).is_err());
        assert!(mutual_info_curve(&rho, &[0], &[0], FragmentChoice::Prefix).is_err());
    }
}
