//! One end-to-end exchange: keygen, encode, optional attack, decode.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::bb84::{eve_intercept_resend, outcome_projector, Basis, ChannelConfig, EveStrategy};
use super::{
    alice_encode, bob_decode_coherent, bob_decode_measure, eve_forward, eve_measure_resend, eve_quantum_attack, keygen,
    EncodeOptions, Message, PublicTranscript, SecretKey,
};
use crate::error::Result;
use crate::gates::embed_operator;
use crate::mcsim::tvd;
use crate::rng;
use crate::states::DensityMatrix;
use crate::tensor::ComplexMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveMode {
    #[default]
    None,
    /// Computational-basis measurement of the whole register, then resend.
    Measure,
    /// Coherent inversion of the transcript, then forward again and resend.
    Quantum,
    /// Each qubit measured in a random Z/X basis and resent.
    Intercept,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub message: Message,
    pub steps: usize,
    pub seed: u64,
    pub shots: u64,
    pub eve: EveMode,
    pub encode: EncodeOptions,
    /// Signal purity for the single-qubit channel statistics.
    pub p1: f64,
    pub sifted_bits: usize,
}

impl SessionConfig {
    pub fn new(message: Message, steps: usize, seed: u64) -> Self {
        Self {
            message,
            steps,
            seed,
            shots: 100_000,
            eve: EveMode::None,
            encode: EncodeOptions::default(),
            p1: 1.0,
            sifted_bits: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub qubits: usize,
    pub steps: usize,
    pub seed: u64,
    pub shots: u64,
    pub eve: EveMode,
    pub bob_tvd: f64,
    /// Trace distance of Bob's coherent reconstruction from `diag(table)`;
    /// absent when the received state fails the consistency checks.
    pub bob_coherent_distance: Option<f64>,
    pub eve_tvd: Option<f64>,
    /// Sifted error rate of the single-qubit channel; present for `none`
    /// and `intercept`.
    pub error_rate: Option<f64>,
    pub transcript_digest: String,
}

/// Everything a session produced, including the secret parts.
#[derive(Clone, Debug)]
pub struct SessionOutput {
    pub report: SessionReport,
    pub key: SecretKey,
    pub transcript: PublicTranscript,
}

/// Measure-and-resend of qubit `j` in `basis`, averaged over outcomes.
fn dephase(rho: &ComplexMatrix, shape: &crate::tensor::SubsystemShape, j: usize, basis: Basis) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(rho.dim());
    for bit in [false, true] {
        let p = embed_operator(&outcome_projector(bit, basis), shape, &[j])?;
        out = &out + &(&(&p * rho) * &p);
    }
    Ok(out)
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionOutput> {
    let shape = cfg.message.shape().clone();
    let key = keygen(shape.clone(), cfg.steps, rng::derive_seed(cfg.seed, 0))?;
    let rec = alice_encode(
        &cfg.message,
        &key,
        rng::derive_seed(cfg.seed, 1),
        rng::derive_seed(cfg.seed, 2),
        &cfg.encode,
    )?;
    let table = cfg.message.table();

    let (received, eve_tvd) = match cfg.eve {
        EveMode::None => (rec.rho_t.clone(), None),
        EveMode::Measure => {
            let (seen, resent) = eve_measure_resend(&rec.rho_t);
            (resent, Some(tvd(&seen, table)?))
        }
        EveMode::Quantum => {
            let guess = eve_quantum_attack(&rec.rho_t, &rec.transcript)?;
            let t = tvd(&guess.matrix().diagonal_real(), table)?;
            (eve_forward(&guess, &rec.transcript)?, Some(t))
        }
        EveMode::Intercept => {
            let mut r = rng::derived(cfg.seed, 3);
            let mut rho = rec.rho_t.matrix().clone();
            for j in 0..shape.len() {
                let basis = if r.random::<bool>() { Basis::X } else { Basis::Z };
                rho = dephase(&rho, &shape, j, basis)?;
            }
            let seen = eve_measure_resend(&DensityMatrix::trusted(rho.clone(), shape.clone())).0;
            (DensityMatrix::trusted(rho, shape.clone()), Some(tvd(&seen, table)?))
        }
    };

    let estimate = bob_decode_measure(&received, &key, &rec.transcript, cfg.shots, rng::derive_seed(cfg.seed, 4))?;
    let plain = DensityMatrix::diagonal(table, shape.clone())?;
    let bob_coherent_distance = bob_decode_coherent(&received, &key, &rec.transcript).ok().map(|r| r.trace_distance(&plain));

    let error_rate = match cfg.eve {
        EveMode::None | EveMode::Intercept => {
            let channel = ChannelConfig {
                p1: cfg.p1,
                sifted_bits: cfg.sifted_bits,
                eve: (cfg.eve == EveMode::Intercept).then_some(EveStrategy::Random),
                attack_fraction: 1.0,
            };
            Some(eve_intercept_resend(&channel, rng::derive_seed(cfg.seed, 5))?.error_rate)
        }
        _ => None,
    };

    let report = SessionReport {
        qubits: shape.len(),
        steps: cfg.steps,
        seed: cfg.seed,
        shots: cfg.shots,
        eve: cfg.eve,
        bob_tvd: tvd(&estimate, table)?,
        bob_coherent_distance,
        eve_tvd,
        error_rate,
        transcript_digest: rec.transcript.digest(),
    };
    Ok(SessionOutput { report, key, transcript: rec.transcript })
}
