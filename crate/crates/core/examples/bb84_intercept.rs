//! Sifted error rate of the mixed-signal BB84 channel as a function of
//! signal purity and of how often Eve intercepts.

use concordia::protocol::bb84::{eve_intercept_resend, ChannelConfig, EveStrategy};

fn main() -> concordia::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9} {:>9}", "p1", "no Eve", "f = 0.5", "f = 1", "oracle");
    for p1 in [1.0, 0.95, 0.9, 0.8] {
        let rate = |eve, attack_fraction| {
            let cfg = ChannelConfig { p1, eve, attack_fraction, ..Default::default() };
            eve_intercept_resend(&cfg, 7).map(|r| r.error_rate)
        };
        println!(
            "{p1:>5.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            rate(None, 1.0)?,
            rate(Some(EveStrategy::Random), 0.5)?,
            rate(Some(EveStrategy::Random), 1.0)?,
            rate(Some(EveStrategy::Correct), 1.0)?
        );
    }
    Ok(())
}
