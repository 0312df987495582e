//! BB84 with mixed signal states `p1 |s⟩⟨s| + (1 - p1) |s̄⟩⟨s̄|` and an
//! intercept-resend eavesdropper.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{ConcordiaError, Result};
use crate::rng::{self, Rng};
use crate::states::{ConcordantState, LocalBasis};
use crate::tensor::gates_std::hadamard;
use crate::tensor::{ComplexMatrix, SubsystemShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Columns are the two basis states.
    pub fn unit(self) -> ComplexMatrix {
        match self {
            Basis::Z => ComplexMatrix::identity(2),
            Basis::X => hadamard(),
        }
    }

    fn random(r: &mut Rng) -> Self {
        if r.random::<bool>() {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

fn check_p1(p1: f64) -> Result<()> {
    if !(p1 > 0.5 && p1 <= 1.0) {
        return Err(ConcordiaError::InvalidInput(format!("p1 must lie in (1/2, 1], got {p1}")));
    }
    Ok(())
}

/// Single-qubit signal: weight `p1` on the state encoding `bit` in `basis`.
pub fn signal_state(bit: bool, basis: Basis, p1: f64) -> ComplexMatrix {
    let diag = if bit { [1.0 - p1, p1] } else { [p1, 1.0 - p1] };
    ComplexMatrix::from_diagonal(&diag).conjugate_by(&basis.unit())
}

/// Projector onto the state encoding `bit` in `basis`.
pub fn outcome_projector(bit: bool, basis: Basis) -> ComplexMatrix {
    let u = basis.unit();
    ComplexMatrix::outer(&u.column(bit as usize))
}

/// Joint state of one round: each qubit carries its own bit in its own basis.
pub fn noisy_bb84_round(bits: &[bool], bases: &[Basis], p1: f64) -> Result<ConcordantState> {
    check_p1(p1)?;
    if bits.len() != bases.len() || bits.is_empty() {
        return Err(ConcordiaError::InvalidInput("need one basis per bit".into()));
    }
    let shape = SubsystemShape::qubits(bits.len());
    let basis = LocalBasis::new(shape.clone(), bases.iter().map(|b| b.unit()).collect())?;
    let probs = (0..shape.total_dim())
        .map(|k| {
            shape
                .digits(k)
                .iter()
                .zip(bits)
                .map(|(&d, &b)| if (d == 1) == b { p1 } else { 1.0 - p1 })
                .product()
        })
        .collect();
    ConcordantState::new(basis, probs)
}

/// How Eve picks her measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "basis")]
pub enum EveStrategy {
    /// Always Alice's basis (an oracle; bounds what any Eve can do).
    Correct,
    Random,
    Fixed(Basis),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub p1: f64,
    /// Rounds are sent until this many survive sifting.
    pub sifted_bits: usize,
    pub eve: Option<EveStrategy>,
    /// Probability that Eve intercepts a given round.
    pub attack_fraction: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { p1: 1.0, sifted_bits: 10_000, eve: None, attack_fraction: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterceptReport {
    pub rounds: usize,
    pub sifted_bits: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub intercepted_sifted: usize,
    /// Fraction of intercepted sifted rounds where Eve's bit equals Alice's.
    pub eve_agreement: f64,
}

fn born(rho: &ComplexMatrix, bit: bool, basis: Basis) -> f64 {
    outcome_projector(bit, basis).inner(rho).re.clamp(0.0, 1.0)
}

fn measure(rho: &ComplexMatrix, basis: Basis, r: &mut Rng) -> bool {
    r.random::<f64>() < born(rho, true, basis)
}

/// Simulates single-qubit rounds with optional intercept-resend.
pub fn eve_intercept_resend(cfg: &ChannelConfig, seed: u64) -> Result<InterceptReport> {
    check_p1(cfg.p1)?;
    if !(0.0..=1.0).contains(&cfg.attack_fraction) {
        return Err(ConcordiaError::InvalidInput("attack fraction must lie in [0, 1]".into()));
    }
    let max_rounds = cfg.sifted_bits.saturating_mul(100).max(1000);
    let mut r = rng::seeded(seed);
    let mut report =
        InterceptReport { rounds: 0, sifted_bits: 0, errors: 0, error_rate: 0.0, intercepted_sifted: 0, eve_agreement: 0.0 };
    let mut agree = 0usize;
    while report.sifted_bits < cfg.sifted_bits && report.rounds < max_rounds {
        report.rounds += 1;
        let bit = r.random::<bool>();
        let alice = Basis::random(&mut r);
        let mut rho = signal_state(bit, alice, cfg.p1);
        let mut eve_bit = None;
        if let Some(strategy) = cfg.eve {
            if r.random::<f64>() < cfg.attack_fraction {
                let b = match strategy {
                    EveStrategy::Correct => alice,
                    EveStrategy::Random => Basis::random(&mut r),
                    EveStrategy::Fixed(b) => b,
                };
                let e = measure(&rho, b, &mut r);
                rho = outcome_projector(e, b);
                eve_bit = Some(e);
            }
        }
        let bob = Basis::random(&mut r);
        let got = measure(&rho, bob, &mut r);
        if bob == alice {
            report.sifted_bits += 1;
            report.errors += (got != bit) as usize;
            if let Some(e) = eve_bit {
                report.intercepted_sifted += 1;
                agree += (e == bit) as usize;
            }
        }
    }
    report.error_rate = report.errors as f64 / report.sifted_bits.max(1) as f64;
    report.eve_agreement = agree as f64 / report.intercepted_sifted.max(1) as f64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::verify_concordant;
    use crate::states::to_density;

    /// Exact sifted error rate by enumerating bases and outcomes with
    /// textbook overlaps: same basis gives certainty, different gives 1/2.
    fn enumerated_error(p1: f64, eve_random: bool) -> f64 {
        let overlap = |a_basis: usize, a_bit: usize, b_basis: usize, b_bit: usize| -> f64 {
            if a_basis == b_basis {
                (a_bit == b_bit) as u8 as f64
            } else {
                0.5
            }
        };
        // Probability that measuring Alice's mixed signal yields `out`.
        let signal = |basis: usize, bit: usize, m_basis: usize, out: usize| -> f64 {
            p1 * overlap(basis, bit, m_basis, out) + (1.0 - p1) * overlap(basis, 1 - bit, m_basis, out)
        };
        let (mut err, mut total) = (0.0, 0.0);
        for alice in 0..2 {
            for bit in 0..2 {
                let bob = alice;
                if eve_random {
                    for eve in 0..2 {
                        for e in 0..2 {
                            let pe = signal(alice, bit, eve, e);
                            for out in 0..2 {
                                let w = 0.125 * pe * overlap(eve, e, bob, out);
                                total += w;
                                if out != bit {
                                    err += w;
                                }
                            }
                        }
                    }
                } else {
                    for out in 0..2 {
                        let w = 0.25 * signal(alice, bit, bob, out);
                        total += w;
                        if out != bit {
                            err += w;
                        }
                    }
                }
            }
        }
        err / total
    }

    #[test]
    fn enumeration_gives_textbook_rates() {
        assert!((enumerated_error(1.0, true) - 0.25).abs() < 1e-15);
        assert!((enumerated_error(0.9, false) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pure_limit_gives_bb84_states() {
        let s = signal_state(true, Basis::X, 1.0);
        assert!(s.frobenius_distance(&outcome_projector(true, Basis::X)) < 1e-15);
        let z = signal_state(false, Basis::Z, 1.0);
        assert!(z.frobenius_distance(&ComplexMatrix::basis_projector(2, 0)) < 1e-15);
    }

    #[test]
    fn round_is_concordant() {
        let bits = [true, false, true, true, false, false];
        let bases = [Basis::Z, Basis::X, Basis::X, Basis::Z, Basis::Z, Basis::X];
        for n in 1..=6 {
            let c = noisy_bb84_round(&bits[..n], &bases[..n], 0.8).unwrap();
            let rho = to_density(&c);
            assert!(verify_concordant(&rho).unwrap().is_some(), "n={n}");
            let one = rho.reduce(&[0]).unwrap();
            assert!(one.matrix().frobenius_distance(&signal_state(bits[0], bases[0], 0.8)) < 1e-12);
        }
        assert!(noisy_bb84_round(&bits, &bases, 0.5).is_err());
        assert!(noisy_bb84_round(&bits[..2], &bases[..3], 0.9).is_err());
    }

    #[test]
    fn random_eve_induces_quarter_errors() {
        let cfg = ChannelConfig { eve: Some(EveStrategy::Random), ..Default::default() };
        let rep = eve_intercept_resend(&cfg, 3).unwrap();
        assert_eq!(rep.sifted_bits, 10_000);
        assert!((rep.error_rate - enumerated_error(1.0, true)).abs() < 0.02, "{}", rep.error_rate);
        assert!((rep.eve_agreement - 0.75).abs() < 0.02);
    }

    #[test]
    fn noise_only_and_oracle_eve() {
        let quiet = eve_intercept_resend(&ChannelConfig { p1: 0.9, ..Default::default() }, 4).unwrap();
        assert!((quiet.error_rate - 0.1).abs() < 0.01, "{}", quiet.error_rate);
        let oracle = ChannelConfig { p1: 0.9, eve: Some(EveStrategy::Correct), ..Default::default() };
        let rep = eve_intercept_resend(&oracle, 4).unwrap();
        assert!((rep.error_rate - 0.1).abs() < 0.01, "{}", rep.error_rate);
        let noisy_random = ChannelConfig { p1: 0.9, eve: Some(EveStrategy::Random), ..Default::default() };
        let rep = eve_intercept_resend(&noisy_random, 4).unwrap();
        assert!((rep.error_rate - enumerated_error(0.9, true)).abs() < 0.02);
    }

    #[test]
    fn fixed_basis_eve_matches_random_in_rate() {
        let cfg = ChannelConfig { eve: Some(EveStrategy::Fixed(Basis::Z)), ..Default::default() };
        let rep = eve_intercept_resend(&cfg, 5).unwrap();
        assert!((rep.error_rate - 0.25).abs() < 0.02);
    }

    #[test]
    fn disturbance_grows_with_attack_fraction() {
        let rates: Vec<f64> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&f| {
                let cfg = ChannelConfig { eve: Some(EveStrategy::Random), attack_fraction: f, ..Default::default() };
                eve_intercept_resend(&cfg, 6).unwrap().error_rate
            })
            .collect();
        assert!(rates[0] < rates[1] && rates[1] < rates[2], "{rates:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ChannelConfig { sifted_bits: 500, eve: Some(EveStrategy::Random), ..Default::default() };
        assert_eq!(eve_intercept_resend(&cfg, 9).unwrap(), eve_intercept_resend(&cfg, 9).unwrap());
    }
}
