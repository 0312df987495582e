//! Monte-Carlo sampling of circuits already written as
//! "initial table, permutations, final local rotation", with an exact dense
//! reference for checking.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};
use crate::rng;
use crate::states::{check_distribution, table_from_labels, table_to_labels, LocalBasis};
use crate::tensor::{Permutation, SubsystemShape};

/// Largest register `dense_reference` accepts.
pub const DENSE_MAX_QUBITS: usize = 10;

/// Shots per independently seeded chunk. Fixed so that counts do not depend
/// on the number of worker threads.
const CHUNK: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPlan {
    p0: Vec<f64>,
    perms: Vec<Permutation>,
    u_final: LocalBasis,
}

impl CircuitPlan {
    pub fn new(p0: Vec<f64>, perms: Vec<Permutation>, u_final: LocalBasis) -> Result<Self> {
        let d = u_final.shape().total_dim();
        check_distribution(&p0, d)?;
        if let Some(p) = perms.iter().find(|p| p.dim() != d) {
            return Err(ConcordiaError::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Self { p0, perms, u_final })
    }

    /// Random table, `steps` random permutations and a Haar local rotation.
    pub fn random(shape: SubsystemShape, steps: usize, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let p0 = crate::states::random_table(shape.total_dim(), &mut r);
        let perms = (0..steps).map(|_| Permutation::random(shape.total_dim(), r.random())).collect();
        let u_final = LocalBasis::haar_with(shape, &mut r);
        Self { p0, perms, u_final }
    }

    pub fn shape(&self) -> &SubsystemShape {
        self.u_final.shape()
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn u_final(&self) -> &LocalBasis {
        &self.u_final
    }

    /// `P_1` first, then `P_2`, ...
    pub fn total_permutation(&self) -> Permutation {
        let d = self.shape().total_dim();
        self.perms.iter().fold(Permutation::identity(d), |acc, p| acc.then(p))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub shape: SubsystemShape,
    pub shots: u64,
    pub seed: u64,
    /// Count per computational-basis outcome, indexed by flat basis index.
    pub counts: Vec<u64>,
}

impl SampleReport {
    pub fn distribution(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }
}

/// Per subsystem and input digit, the outcome distribution `|u[x, k]|²`.
fn column_samplers(u: &LocalBasis) -> Vec<Vec<WeightedIndex<f64>>> {
    u.units()
        .iter()
        .map(|m| {
            (0..m.dim())
                .map(|k| {
                    let w: Vec<f64> = (0..m.dim()).map(|x| m.get(x, k).norm_sqr()).collect();
                    WeightedIndex::new(w).expect("unitary columns have unit norm")
                })
                .collect()
        })
        .collect()
}

pub fn simulate(plan: &CircuitPlan, shots: u64, seed: u64) -> Result<SampleReport> {
    if shots == 0 {
        return Err(ConcordiaError::InvalidInput("shots must be at least 1".into()));
    }
    let shape = plan.shape().clone();
    let d = shape.total_dim();
    let initial = WeightedIndex::new(&plan.p0)
        .map_err(|e| ConcordiaError::InvalidDistribution(e.to_string()))?;
    let total = plan.total_permutation();
    let columns = column_samplers(&plan.u_final);
    let strides = shape.strides();
    let chunks = shots.div_ceil(CHUNK as u64);

    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = (shots - c * CHUNK as u64).min(CHUNK as u64);
            let mut r = rng::derived(seed, c);
            let mut local = vec![0u64; d];
            for _ in 0..n {
                let j = total.apply(initial.sample(&mut r));
                let digits = shape.digits(j);
                let x: usize = digits
                    .iter()
                    .enumerate()
                    .map(|(q, &k)| columns[q][k].sample(&mut r) * strides[q])
                    .sum();
                local[x] += 1;
            }
            local
        })
        .reduce(|| vec![0u64; d], merge_counts);
    Ok(SampleReport { shape, shots, seed, counts })
}

/// Draws `shots` outcomes from `probs` in fixed-size, independently seeded
/// chunks.
pub fn sample_table(probs: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs).map_err(|e| ConcordiaError::InvalidDistribution(e.to_string()))?;
    let d = probs.len();
    let chunks = shots.div_ceil(CHUNK as u64);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = (shots - c * CHUNK as u64).min(CHUNK as u64);
            let mut r = rng::derived(seed, c);
            let mut local = vec![0u64; d];
            for _ in 0..n {
                local[dist.sample(&mut r)] += 1;
            }
            local
        })
        .reduce(|| vec![0u64; d], merge_counts))
}

fn merge_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

/// Exact outcome distribution `out[x] = Σ_j p[j] |⟨x|U|j⟩|²` with `p` the
/// permuted initial table.
pub fn dense_reference(plan: &CircuitPlan) -> Result<Vec<f64>> {
    let shape = plan.shape();
    let qubits = (shape.total_dim() as f64).log2().ceil() as usize;
    if qubits > DENSE_MAX_QUBITS {
        return Err(ConcordiaError::TooLarge { qubits, limit: DENSE_MAX_QUBITS });
    }
    let p = plan.total_permutation().permute_table(&plan.p0);
    let u = plan.u_final.matrix();
    let d = shape.total_dim();
    Ok((0..d)
        .into_par_iter()
        .map(|x| (0..d).map(|j| p[j] * u.get(x, j).norm_sqr()).sum())
        .collect())
}

/// `½ Σ |p − q|`.
pub fn tvd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(ConcordiaError::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    dims: Vec<usize>,
    p0: BTreeMap<String, f64>,
    perms: Vec<Permutation>,
    u_final: Vec<crate::tensor::ComplexMatrix>,
}

impl Serialize for CircuitPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlanJson {
            dims: self.shape().dims().to_vec(),
            p0: table_to_labels(self.shape(), &self.p0),
            perms: self.perms.clone(),
            u_final: self.u_final.units().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircuitPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = PlanJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        let p0 = table_from_labels(&shape, &j.p0).map_err(D::Error::custom)?;
        let u = LocalBasis::new(shape, j.u_final).map_err(D::Error::custom)?;
        CircuitPlan::new(p0, j.perms, u).map_err(D::Error::custom)
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    dims: &'a [usize],
    shots: u64,
    seed: u64,
    counts: BTreeMap<String, u64>,
}

impl Serialize for SampleReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let counts = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.shape.label(i), c))
            .collect();
        ReportJson { dims: self.shape.dims(), shots: self.shots, seed: self.seed, counts }.serialize(s)
    }
}
