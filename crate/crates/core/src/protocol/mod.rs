//! Message hiding with secret local bases.
//!
//! Alice embeds a probability table in a product basis `U_0`, then evolves it
//! through steps `G_i = U_i P_i U_{i-1}†`. She publishes decoy gates
//! `G'_i = U_i P_i B_i U_{i-1}†`, where `B_i` mixes only indices that carry
//! equal probability, so every decoy produces the same state as the true gate.
//! Bob holds the key `U_0..U_t` and peels each step back to a classical map;
//! Eve holds only the transcript.

pub mod bb84;
pub mod session;

use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};
use crate::gates::{random_block_unitary, BlockStructure};
use crate::mcsim::sample_table;
use crate::rng;
use crate::states::{check_distribution, table_from_labels, table_to_labels, DensityMatrix, LocalBasis};
use crate::tensor::{ComplexMatrix, Permutation, SubsystemShape};
use crate::tol;

/// Median Eve TVD over Haar first bases must stay above this for the demo
/// message on three qubits. Baseline (`cargo run --release --example
/// eve_baseline`): median 0.328 over 2000 trials, 100-trial batch medians
/// between 0.297 and 0.390.
pub const EVE_TVD_FLOOR: f64 = 0.25;

/// Entries of a step map with magnitude below this are treated as zero when
/// reading off its permutation and block pattern.
const SUPPORT_EPS: f64 = 1e-8;

/// The shared secret: one local basis per step, `U_0` through `U_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKey {
    units: Vec<LocalBasis>,
}

impl SecretKey {
    pub fn new(units: Vec<LocalBasis>) -> Result<Self> {
        let first = units.first().ok_or_else(|| ConcordiaError::InvalidInput("key needs at least two bases".into()))?;
        if units.len() < 2 {
            return Err(ConcordiaError::InvalidInput("key needs at least two bases".into()));
        }
        for u in &units[1..] {
            if u.shape() != first.shape() {
                return Err(ConcordiaError::DimensionMismatch {
                    expected: first.shape().total_dim(),
                    found: u.shape().total_dim(),
                });
            }
        }
        Ok(Self { units })
    }

    pub fn steps(&self) -> usize {
        self.units.len() - 1
    }

    pub fn shape(&self) -> &SubsystemShape {
        self.units[0].shape()
    }

    pub fn unit(&self, i: usize) -> &LocalBasis {
        &self.units[i]
    }

    pub fn units(&self) -> &[LocalBasis] {
        &self.units
    }

    /// The same key with `U_0` replaced.
    pub fn with_first(&self, u0: LocalBasis) -> Result<Self> {
        let mut units = self.units.clone();
        units[0] = u0;
        Self::new(units)
    }
}

/// `t + 1` independent Haar local bases.
pub fn keygen(shape: SubsystemShape, t: usize, seed: u64) -> Result<SecretKey> {
    if t == 0 {
        return Err(ConcordiaError::InvalidInput("at least one step is required".into()));
    }
    let mut r = rng::seeded(seed);
    SecretKey::new((0..=t).map(|_| LocalBasis::haar_with(shape.clone(), &mut r)).collect())
}

/// A classical payload: a probability table over the register.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    shape: SubsystemShape,
    table: Vec<f64>,
}

impl Message {
    pub fn new(shape: SubsystemShape, table: Vec<f64>) -> Result<Self> {
        check_distribution(&table, shape.total_dim())?;
        Ok(Self { shape, table })
    }

    /// Demo payload on `n` qubits: probabilities come in equal pairs and the
    /// last pair is zero, so every step has blocks to hide in.
    pub fn demo(n: usize) -> Self {
        let shape = SubsystemShape::qubits(n);
        let d = shape.total_dim();
        let weights: Vec<f64> = (0..d).map(|k| ((d - k - 1) / 2) as f64).collect();
        let total: f64 = weights.iter().sum();
        let table = if total > 0.0 { weights.iter().map(|w| w / total).collect() } else { vec![1.0 / d as f64; d] };
        Self { shape, table }
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// `U_0 diag(table) U_0†`.
    pub fn embed(&self, u0: &LocalBasis) -> Result<DensityMatrix> {
        if u0.shape() != &self.shape {
            return Err(ConcordiaError::DimensionMismatch {
                expected: self.shape.total_dim(),
                found: u0.shape().total_dim(),
            });
        }
        let d = DensityMatrix::diagonal(&self.table, self.shape.clone())?;
        Ok(DensityMatrix::trusted(d.matrix().conjugate_by(&u0.matrix()), self.shape.clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct MessageJson {
    dims: Vec<usize>,
    table: std::collections::BTreeMap<String, f64>,
}

impl Serialize for Message {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MessageJson { dims: self.shape.dims().to_vec(), table: table_to_labels(&self.shape, &self.table) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = MessageJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        let table = table_from_labels(&shape, &j.table).map_err(D::Error::custom)?;
        Message::new(shape, table).map_err(D::Error::custom)
    }
}

/// What the first published gate contains.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstGate {
    /// `U_1 P_1 [B_1] U_0†`.
    #[default]
    Full,
    /// `U_1 P_1 [B_1]`. Leaks the table to anyone who inverts the transcript.
    Bare,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodeOptions {
    pub first_gate: FirstGate,
    /// Fold a decoy block unitary into the first gate as well.
    pub block_first: bool,
    pub trivial_perms: bool,
    pub trivial_blocks: bool,
    /// Probabilities closer than this share a decoy block.
    pub degeneracy_tol: f64,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            first_gate: FirstGate::Full,
            block_first: false,
            trivial_perms: false,
            trivial_blocks: false,
            degeneracy_tol: 1e-12,
        }
    }
}

/// The gates Alice publishes.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicTranscript {
    shape: SubsystemShape,
    first: ComplexMatrix,
    rest: Vec<ComplexMatrix>,
    first_gate: FirstGate,
    block_first: bool,
}

impl PublicTranscript {
    pub fn new(
        shape: SubsystemShape,
        first: ComplexMatrix,
        rest: Vec<ComplexMatrix>,
        first_gate: FirstGate,
        block_first: bool,
    ) -> Result<Self> {
        let d = shape.total_dim();
        for g in std::iter::once(&first).chain(&rest) {
            g.check_dim(d)?;
            g.check_unitary()?;
        }
        Ok(Self { shape, first, rest, first_gate, block_first })
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn steps(&self) -> usize {
        self.rest.len() + 1
    }

    pub fn first(&self) -> &ComplexMatrix {
        &self.first
    }

    pub fn rest(&self) -> &[ComplexMatrix] {
        &self.rest
    }

    pub fn first_gate(&self) -> FirstGate {
        self.first_gate
    }

    pub fn block_first(&self) -> bool {
        self.block_first
    }

    /// Gate `i` in `1..=steps`.
    pub fn gate(&self, i: usize) -> &ComplexMatrix {
        if i == 1 {
            &self.first
        } else {
            &self.rest[i - 2]
        }
    }

    /// Replaces gate `i`, skipping validation. For tamper tests.
    pub fn with_gate_unchecked(&self, i: usize, g: ComplexMatrix) -> Self {
        let mut out = self.clone();
        if i == 1 {
            out.first = g;
        } else {
            out.rest[i - 2] = g;
        }
        out
    }

    /// Hex SHA-256 of the JSON encoding.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("transcript serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Serialize, Deserialize)]
struct TranscriptJson {
    dims: Vec<usize>,
    g1: ComplexMatrix,
    gprime: Vec<ComplexMatrix>,
    #[serde(default)]
    g1_form: FirstGate,
    #[serde(default)]
    block_first: bool,
}

impl Serialize for PublicTranscript {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TranscriptJson {
            dims: self.shape.dims().to_vec(),
            g1: self.first.clone(),
            gprime: self.rest.clone(),
            g1_form: self.first_gate,
            block_first: self.block_first,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PublicTranscript {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = TranscriptJson::deserialize(d)?;
        let shape = SubsystemShape::new(j.dims).map_err(D::Error::custom)?;
        PublicTranscript::new(shape, j.g1, j.gprime, j.g1_form, j.block_first).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct KeyJson {
    units: Vec<Vec<ComplexMatrix>>,
}

impl Serialize for SecretKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KeyJson { units: self.units.iter().map(|u| u.units().to_vec()).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SecretKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = KeyJson::deserialize(d)?;
        let units = j
            .units
            .into_iter()
            .map(|factors| {
                let shape = SubsystemShape::new(factors.iter().map(ComplexMatrix::dim).collect())?;
                LocalBasis::new(shape, factors)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        SecretKey::new(units).map_err(D::Error::custom)
    }
}

/// Alice's private record of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStep {
    pub perm: Permutation,
    pub block: ComplexMatrix,
    pub structure: BlockStructure,
    /// `‖B D B† - D‖` for the table entering this step.
    pub block_residual: f64,
    /// `‖G' ρ G'† - G ρ G†‖` for the state entering this step.
    pub state_equivalence: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub rho_t: DensityMatrix,
    pub transcript: PublicTranscript,
    pub hidden: Vec<HiddenStep>,
    /// Diagonal tables `D_0..D_t` in the running key frame.
    pub tables: Vec<Vec<f64>>,
}

/// Runs the encoder. Permutations and decoy blocks come from independent
/// streams of `perm_seed` and `block_seed`.
pub fn alice_encode(
    msg: &Message,
    key: &SecretKey,
    perm_seed: u64,
    block_seed: u64,
    opts: &EncodeOptions,
) -> Result<RunRecord> {
    let shape = key.shape().clone();
    if msg.shape() != &shape {
        return Err(ConcordiaError::DimensionMismatch { expected: shape.total_dim(), found: msg.shape().total_dim() });
    }
    let d = shape.total_dim();
    if BlockStructure::from_table(msg.table(), opts.degeneracy_tol).len() == d {
        log::warn!("message table has no repeated probabilities; decoy blocks reduce to phases");
    }

    let mut rho = msg.embed(key.unit(0))?.into_matrix();
    let mut table = msg.table().to_vec();
    let mut tables = vec![table.clone()];
    let mut hidden = Vec::with_capacity(key.steps());
    let mut published = Vec::with_capacity(key.steps());
    for i in 1..=key.steps() {
        let perm = if opts.trivial_perms {
            Permutation::identity(d)
        } else {
            Permutation::random(d, rng::derive_seed(perm_seed, i as u64))
        };
        let decoy = !opts.trivial_blocks && (i > 1 || opts.block_first);
        let structure = if decoy {
            BlockStructure::from_table(&table, opts.degeneracy_tol)
        } else {
            BlockStructure::singletons(d)
        };
        let block = if decoy {
            random_block_unitary(&structure, rng::derive_seed(block_seed, i as u64))
        } else {
            ComplexMatrix::identity(d)
        };
        let u_prev = key.unit(i - 1).matrix();
        let u_next = key.unit(i).matrix();
        let out_perm = &u_next * &perm.matrix();
        let g_true = &out_perm * &u_prev.adjoint();
        let out_decoy = &out_perm * &block;
        let g_public = &out_decoy * &u_prev.adjoint();

        let d_prev = ComplexMatrix::from_diagonal(&table);
        let block_residual = d_prev.conjugate_by(&block).frobenius_distance(&d_prev);
        let next = rho.conjugate_by(&g_true);
        let state_equivalence = rho.conjugate_by(&g_public).frobenius_distance(&next);

        published.push(if i == 1 && opts.first_gate == FirstGate::Bare { out_decoy } else { g_public });
        hidden.push(HiddenStep { perm: perm.clone(), block, structure, block_residual, state_equivalence });
        rho = next;
        table = perm.permute_table(&table);
        tables.push(table.clone());
    }
    let mut published = published.into_iter();
    let first = published.next().expect("at least one step");
    let transcript = PublicTranscript::new(shape.clone(), first, published.collect(), opts.first_gate, opts.block_first)?;
    Ok(RunRecord { rho_t: DensityMatrix::trusted(rho, shape), transcript, hidden, tables })
}

fn check_key(key: &SecretKey, transcript: &PublicTranscript) -> Result<()> {
    if key.shape() != transcript.shape() {
        return Err(ConcordiaError::DimensionMismatch {
            expected: key.shape().total_dim(),
            found: transcript.shape().total_dim(),
        });
    }
    if key.steps() != transcript.steps() {
        return Err(ConcordiaError::TranscriptMismatch {
            step: key.steps().min(transcript.steps()),
            reason: format!("key has {} steps, transcript {}", key.steps(), transcript.steps()),
        });
    }
    Ok(())
}

/// `M_i = U_i† G'_i U_{i-1}` for every step, with no consistency checks.
pub fn step_maps_unchecked(key: &SecretKey, transcript: &PublicTranscript) -> Result<Vec<ComplexMatrix>> {
    check_key(key, transcript)?;
    Ok((1..=key.steps())
        .map(|i| {
            let left = &key.unit(i).matrix().adjoint() * transcript.gate(i);
            if i == 1 && transcript.first_gate() == FirstGate::Bare {
                left
            } else {
                &left * &key.unit(i - 1).matrix()
            }
        })
        .collect())
}

/// Column and row partitions of the support graph of `m`.
fn support_partitions(m: &ComplexMatrix) -> (BlockStructure, BlockStructure) {
    let d = m.dim();
    let mut parent: Vec<usize> = (0..2 * d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..d {
        for c in 0..d {
            if m.get(r, c).norm() > SUPPORT_EPS {
                let (a, b) = (find(&mut parent, r), find(&mut parent, d + c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut cols: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut rows: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for c in 0..d {
        let root = find(&mut parent, d + c);
        cols.entry(root).or_default().push(c);
    }
    for r in 0..d {
        let root = find(&mut parent, r);
        rows.entry(root).or_default().push(r);
    }
    let to_structure = |m: std::collections::BTreeMap<usize, Vec<usize>>| {
        let mut blocks: Vec<Vec<usize>> = m.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        BlockStructure::new(blocks).expect("components partition the index set")
    };
    (to_structure(cols), to_structure(rows))
}

/// Step maps after checking that each is a permutation times a block unitary
/// whose blocks are exactly the previous step's image blocks.
pub fn step_maps(key: &SecretKey, transcript: &PublicTranscript) -> Result<Vec<ComplexMatrix>> {
    let maps = step_maps_unchecked(key, transcript)?;
    let mut prev_rows: Option<BlockStructure> = None;
    for (k, m) in maps.iter().enumerate() {
        let step = k + 1;
        let dev = m.unitary_deviation();
        if dev > tol::UNITARY.max(1e-8) {
            return Err(ConcordiaError::TranscriptMismatch { step, reason: format!("not unitary ({dev:.2e})") });
        }
        let (cols, rows) = support_partitions(m);
        if cols.len() != rows.len() || cols.blocks().iter().zip(rows.blocks()).any(|(c, r)| c.len() != r.len()) {
            return Err(ConcordiaError::TranscriptMismatch { step, reason: "not a permuted block unitary".into() });
        }
        let blocked = step > 1 || transcript.block_first();
        if !blocked && cols.len() != m.dim() {
            return Err(ConcordiaError::TranscriptMismatch { step, reason: "first step is not a permutation".into() });
        }
        if let Some(prev) = &prev_rows {
            if blocked && prev != &cols {
                return Err(ConcordiaError::TranscriptMismatch {
                    step,
                    reason: "block pattern does not match the previous step".into(),
                });
            }
        }
        prev_rows = if blocked { Some(rows) } else { None };
    }
    Ok(maps)
}

fn key_frame_probabilities(rho_t: &DensityMatrix, u_t: &ComplexMatrix) -> Vec<f64> {
    let raw: Vec<f64> = rho_t.matrix().conjugate_by(&u_t.adjoint()).diagonal_real().into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Pulls a table on `D_i` back to `D_{i-1}` through `M_i`.
fn pull_back(m: &ComplexMatrix, table: &[f64]) -> Vec<f64> {
    let d = table.len();
    (0..d).map(|c| (0..d).map(|r| m.get(r, c).norm_sqr() * table[r]).sum()).collect()
}

/// Bob measures `shots` copies in the `U_t` basis and maps the empirical
/// table back through every step.
pub fn bob_decode_measure(
    rho_t: &DensityMatrix,
    key: &SecretKey,
    transcript: &PublicTranscript,
    shots: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let maps = step_maps(key, transcript)?;
    rho_t.matrix().check_dim(key.shape().total_dim())?;
    let probs = key_frame_probabilities(rho_t, &key.unit(key.steps()).matrix());
    let counts = sample_table(&probs, shots, seed)?;
    let mut table: Vec<f64> = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    for m in maps.iter().rev() {
        table = pull_back(m, &table);
    }
    Ok(table)
}

/// Bob undoes every step coherently and rotates out of `U_0`, returning the
/// message state `diag(table)`. Each intermediate state must be diagonal in
/// the key frame.
pub fn bob_decode_coherent(rho_t: &DensityMatrix, key: &SecretKey, transcript: &PublicTranscript) -> Result<DensityMatrix> {
    let maps = step_maps(key, transcript)?;
    rho_t.matrix().check_dim(key.shape().total_dim())?;
    let mut sigma = rho_t.matrix().conjugate_by(&key.unit(key.steps()).matrix().adjoint());
    for (k, m) in maps.iter().enumerate().rev() {
        check_diagonal(&sigma, k + 1)?;
        sigma = sigma.conjugate_by(&m.adjoint());
    }
    check_diagonal(&sigma, 0)?;
    Ok(DensityMatrix::trusted(sigma, key.shape().clone()))
}

fn check_diagonal(sigma: &ComplexMatrix, step: usize) -> Result<()> {
    let off = sigma.off_diagonal_norm();
    if off > tol::DIAGONALITY {
        return Err(ConcordiaError::TranscriptMismatch {
            step,
            reason: format!("state is not diagonal in the key frame ({off:.2e})"),
        });
    }
    Ok(())
}

/// The coherent decoder without any checks, for keys that may not match.
pub fn coherent_inverse(rho_t: &DensityMatrix, key: &SecretKey, transcript: &PublicTranscript) -> Result<DensityMatrix> {
    let maps = step_maps_unchecked(key, transcript)?;
    rho_t.matrix().check_dim(key.shape().total_dim())?;
    let mut sigma = rho_t.matrix().conjugate_by(&key.unit(key.steps()).matrix().adjoint());
    for m in maps.iter().rev() {
        sigma = sigma.conjugate_by(&m.adjoint());
    }
    Ok(DensityMatrix::trusted(sigma, key.shape().clone()))
}

/// Eve inverts every published gate on the intercepted state, treating the
/// first one as a full gate.
pub fn eve_quantum_attack(rho_t: &DensityMatrix, transcript: &PublicTranscript) -> Result<DensityMatrix> {
    rho_t.matrix().check_dim(transcript.shape().total_dim())?;
    let mut sigma = rho_t.matrix().clone();
    for i in (1..=transcript.steps()).rev() {
        sigma = sigma.conjugate_by(&transcript.gate(i).adjoint());
    }
    Ok(DensityMatrix::trusted(sigma, transcript.shape().clone()))
}

/// Re-applies the published gates, undoing [`eve_quantum_attack`].
pub fn eve_forward(rho: &DensityMatrix, transcript: &PublicTranscript) -> Result<DensityMatrix> {
    rho.matrix().check_dim(transcript.shape().total_dim())?;
    let mut sigma = rho.matrix().clone();
    for i in 1..=transcript.steps() {
        sigma = sigma.conjugate_by(transcript.gate(i));
    }
    Ok(DensityMatrix::trusted(sigma, transcript.shape().clone()))
}

/// Eve measures the register in the computational basis and resends the
/// outcome. Returns her outcome distribution and the state Bob receives.
pub fn eve_measure_resend(rho_t: &DensityMatrix) -> (Vec<f64>, DensityMatrix) {
    let table: Vec<f64> = rho_t.matrix().diagonal_real().into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = table.iter().sum();
    let table: Vec<f64> = table.into_iter().map(|p| p / total).collect();
    let resent = DensityMatrix::trusted(ComplexMatrix::from_diagonal(&table), rho_t.shape().clone());
    (table, resent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcsim::tvd;
    use crate::tensor::haar::haar_unitary;
    use proptest::prelude::*;

    fn message_state(msg: &Message) -> DensityMatrix {
        DensityMatrix::diagonal(msg.table(), msg.shape().clone()).unwrap()
    }

    fn demo_run(n: usize, t: usize, seed: u64, opts: &EncodeOptions) -> (Message, SecretKey, RunRecord) {
        let msg = Message::demo(n);
        let key = keygen(SubsystemShape::qubits(n), t, seed).unwrap();
        let rec = alice_encode(&msg, &key, seed + 1, seed + 2, opts).unwrap();
        (msg, key, rec)
    }

    #[test]
    fn keygen_is_deterministic_and_unitary() {
        let a = keygen(SubsystemShape::qubits(3), 4, 5).unwrap();
        assert_eq!(a, keygen(SubsystemShape::qubits(3), 4, 5).unwrap());
        assert_eq!(a.steps(), 4);
        for b in a.units() {
            for u in b.units() {
                assert!(u.unitary_deviation() < 1e-10);
            }
        }
        assert!(keygen(SubsystemShape::qubits(2), 0, 1).is_err());
    }

    #[test]
    fn distinct_seeds_give_distinct_keys() {
        for s in 0..100u64 {
            let a = keygen(SubsystemShape::qubits(2), 1, 2 * s).unwrap();
            let b = keygen(SubsystemShape::qubits(2), 1, 2 * s + 1).unwrap();
            assert!(a.unit(0).matrix().frobenius_distance(&b.unit(0).matrix()) > 0.1);
        }
    }

    #[test]
    fn demo_message_has_pairs() {
        let m = Message::demo(3);
        let expected = [3.0, 3.0, 2.0, 2.0, 1.0, 1.0, 0.0, 0.0].map(|w| w / 12.0);
        for (a, b) in m.table().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn single_trivial_step_is_a_basis_change() {
        let opts = EncodeOptions { trivial_perms: true, trivial_blocks: true, ..Default::default() };
        let (msg, key, rec) = demo_run(2, 1, 3, &opts);
        let expected = msg.embed(key.unit(1)).unwrap();
        assert!(rec.rho_t.matrix().frobenius_distance(expected.matrix()) < 1e-12);
        let back = bob_decode_coherent(&rec.rho_t, &key, &rec.transcript).unwrap();
        assert!(back.trace_distance(&message_state(&msg)) < 1e-12);
    }

    #[test]
    fn decoys_produce_the_same_states() {
        let (msg, key, rec) = demo_run(3, 6, 11, &EncodeOptions { block_first: true, ..Default::default() });
        for h in &rec.hidden {
            assert!(h.block_residual < 1e-12, "{}", h.block_residual);
            assert!(h.state_equivalence < 1e-9, "{}", h.state_equivalence);
        }
        // Nontrivial decoys were actually used.
        assert!(rec.hidden.iter().all(|h| !h.structure.is_trivial()));
        // Forward application of the public gates reproduces rho_t.
        let rho0 = msg.embed(key.unit(0)).unwrap();
        let fwd = eve_forward(&rho0, &rec.transcript).unwrap();
        assert!(fwd.matrix().frobenius_distance(rec.rho_t.matrix()) < 1e-9);
        let mut eig_t = rec.rho_t.spectrum();
        let mut eig_0 = msg.table().to_vec();
        eig_t.sort_by(f64::total_cmp);
        eig_0.sort_by(f64::total_cmp);
        for (a, b) in eig_t.iter().zip(&eig_0) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn step_maps_are_permuted_blocks_and_tables_chain() {
        let (_, key, rec) = demo_run(3, 4, 21, &EncodeOptions::default());
        let maps = step_maps(&key, &rec.transcript).unwrap();
        for (k, m) in maps.iter().enumerate() {
            let h = &rec.hidden[k];
            let expected = &h.perm.matrix() * &h.block;
            assert!(m.frobenius_distance(&expected) < 1e-9);
            // Ignoring the decoy, the permutation alone maps the tables.
            assert_eq!(h.perm.permute_table(&rec.tables[k]), rec.tables[k + 1]);
        }
    }

    #[test]
    fn coherent_round_trip_many_instances() {
        for n in 1..=4 {
            for t in [1, 3, 8] {
                let seed = (n * 100 + t) as u64;
                let opts = EncodeOptions { block_first: t % 2 == 1, ..Default::default() };
                let (msg, key, rec) = demo_run(n, t, seed, &opts);
                let back = bob_decode_coherent(&rec.rho_t, &key, &rec.transcript).unwrap();
                assert!(back.trace_distance(&message_state(&msg)) < 1e-8, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn bare_first_gate_also_decodes() {
        let opts = EncodeOptions { first_gate: FirstGate::Bare, ..Default::default() };
        let (msg, key, rec) = demo_run(3, 4, 8, &opts);
        let back = bob_decode_coherent(&rec.rho_t, &key, &rec.transcript).unwrap();
        assert!(back.trace_distance(&message_state(&msg)) < 1e-8);
    }

    #[test]
    fn measure_decode_converges() {
        let (msg, key, rec) = demo_run(3, 4, 31, &EncodeOptions::default());
        let est = bob_decode_measure(&rec.rho_t, &key, &rec.transcript, 100_000, 7).unwrap();
        assert!(tvd(&est, msg.table()).unwrap() <= 0.03);
        let coarse = bob_decode_measure(&rec.rho_t, &key, &rec.transcript, 100, 7).unwrap();
        assert!((coarse.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_protocol_resamples_table() {
        let opts = EncodeOptions { trivial_perms: true, trivial_blocks: true, ..Default::default() };
        let msg = Message::demo(2);
        let key = SecretKey::new(vec![LocalBasis::identity(SubsystemShape::qubits(2)); 2]).unwrap();
        let rec = alice_encode(&msg, &key, 0, 0, &opts).unwrap();
        let est = bob_decode_measure(&rec.rho_t, &key, &rec.transcript, 1000, 3).unwrap();
        let counts = sample_table(msg.table(), 1000, 3).unwrap();
        for (e, c) in est.iter().zip(counts) {
            assert!((e - c as f64 / 1000.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tampering_is_detected() {
        let (_, key, rec) = demo_run(3, 4, 41, &EncodeOptions::default());
        let mut r = rng::seeded(99);
        for i in 1..=4 {
            let bad = rec.transcript.with_gate_unchecked(i, haar_unitary(8, &mut r));
            let err = bob_decode_coherent(&rec.rho_t, &key, &bad).unwrap_err();
            assert!(matches!(err, ConcordiaError::TranscriptMismatch { .. }), "step {i}: {err}");
            assert!(bob_decode_measure(&rec.rho_t, &key, &bad, 10, 0).is_err());
        }
        let scaled = rec.transcript.with_gate_unchecked(2, rec.transcript.gate(2).scale(1.01));
        assert!(matches!(step_maps(&key, &scaled), Err(ConcordiaError::TranscriptMismatch { .. })));
    }

    #[test]
    fn wrong_key_fails() {
        let (msg, key, rec) = demo_run(3, 4, 51, &EncodeOptions::default());
        let want = message_state(&msg);
        assert!(coherent_inverse(&rec.rho_t, &key, &rec.transcript).unwrap().trace_distance(&want) < 1e-8);
        let mut far = 0;
        for s in 0..20 {
            let wrong = keygen(SubsystemShape::qubits(3), 4, 1000 + s).unwrap();
            match coherent_inverse(&rec.rho_t, &wrong, &rec.transcript) {
                Ok(got) if got.trace_distance(&want) > 0.1 => far += 1,
                _ => {}
            }
            assert!(bob_decode_coherent(&rec.rho_t, &wrong, &rec.transcript).is_err());
        }
        assert!(far >= 18, "{far}");
    }

    #[test]
    fn eve_recovers_only_with_identity_first_basis() {
        let (msg, key, _) = demo_run(3, 5, 61, &EncodeOptions::default());
        let exposed = key.with_first(LocalBasis::identity(SubsystemShape::qubits(3))).unwrap();
        let rec = alice_encode(&msg, &exposed, 1, 2, &EncodeOptions::default()).unwrap();
        let eve = eve_quantum_attack(&rec.rho_t, &rec.transcript).unwrap();
        assert!(tvd(&eve.matrix().diagonal_real(), msg.table()).unwrap() < 1e-9);

        let mut tvds: Vec<f64> = (0..100)
            .map(|s| {
                let key = keygen(SubsystemShape::qubits(3), 5, 5000 + s).unwrap();
                let rec = alice_encode(&msg, &key, s, s + 1, &EncodeOptions::default()).unwrap();
                let eve = eve_quantum_attack(&rec.rho_t, &rec.transcript).unwrap();
                // Eve ends with the embedded state, still in the unknown basis.
                assert!(eve.trace_distance(&msg.embed(key.unit(0)).unwrap()) < 1e-8);
                tvd(&eve.matrix().diagonal_real(), msg.table()).unwrap()
            })
            .collect();
        tvds.sort_by(f64::total_cmp);
        assert!(tvds[50] >= EVE_TVD_FLOOR, "median {}", tvds[50]);
    }

    #[test]
    fn bare_first_gate_leaks_the_table() {
        let opts = EncodeOptions { first_gate: FirstGate::Bare, ..Default::default() };
        for s in 0..10 {
            let (msg, _, rec) = demo_run(3, 4, 700 + s, &opts);
            let eve = eve_quantum_attack(&rec.rho_t, &rec.transcript).unwrap();
            assert!(tvd(&eve.matrix().diagonal_real(), msg.table()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn eve_measurement_disturbs_bob() {
        let (msg, key, rec) = demo_run(3, 4, 71, &EncodeOptions::default());
        let (_, resent) = eve_measure_resend(&rec.rho_t);
        let est = bob_decode_measure(&resent, &key, &rec.transcript, 100_000, 1).unwrap();
        assert!(tvd(&est, msg.table()).unwrap() > 0.05);
    }

    #[test]
    fn json_round_trips() {
        let (msg, key, rec) = demo_run(2, 3, 81, &EncodeOptions::default());
        let t: PublicTranscript = serde_json::from_str(&serde_json::to_string(&rec.transcript).unwrap()).unwrap();
        assert_eq!(t, rec.transcript);
        assert_eq!(t.digest(), rec.transcript.digest());
        let k: SecretKey = serde_json::from_str(&serde_json::to_string(&key).unwrap()).unwrap();
        assert_eq!(k, key);
        let m: Message = serde_json::from_str(&serde_json::to_string(&msg).unwrap()).unwrap();
        assert_eq!(m, msg);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn decoder_inverts_encoder(n in 1usize..=3, t in 1usize..=6, seed in any::<u64>(), block_first in any::<bool>()) {
            let shape = SubsystemShape::qubits(n);
            let mut r = rng::seeded(seed);
            // Random table with forced repeats.
            let base = crate::states::random_table(shape.total_dim(), &mut r);
            let mut table = base.clone();
            for k in (1..table.len()).step_by(2) {
                table[k] = table[k - 1];
            }
            let total: f64 = table.iter().sum();
            let msg = Message::new(shape.clone(), table.iter().map(|p| p / total).collect()).unwrap();
            let key = keygen(shape, t, seed ^ 1).unwrap();
            let opts = EncodeOptions { block_first, ..Default::default() };
            let rec = alice_encode(&msg, &key, seed ^ 2, seed ^ 3, &opts).unwrap();
            let back = bob_decode_coherent(&rec.rho_t, &key, &rec.transcript).unwrap();
            prop_assert!(back.trace_distance(&message_state(&msg)) < 1e-8);
        }
    }
}
