//! Median TVD between the demo message and what a transcript-only attacker
//! measures, over many Haar first bases. Sets the floor used in tests.

use concordia::mcsim::tvd;
use concordia::protocol::{alice_encode, eve_quantum_attack, keygen, EncodeOptions, Message};
use concordia::tensor::SubsystemShape;
use rayon::prelude::*;

fn main() -> concordia::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let msg = Message::demo(3);
    let mut tvds = (0..trials)
        .into_par_iter()
        .map(|s| {
            let key = keygen(SubsystemShape::qubits(3), 6, 1_000_000 + s)?;
            let rec = alice_encode(&msg, &key, s, s + 1, &EncodeOptions::default())?;
            let eve = eve_quantum_attack(&rec.rho_t, &rec.transcript)?;
            tvd(&eve.matrix().diagonal_real(), msg.table())
        })
        .collect::<concordia::Result<Vec<f64>>>()?;
    // Spread of a 100-trial median, from consecutive unsorted batches.
    let mut medians: Vec<f64> = tvds
        .chunks(100)
        .filter(|c| c.len() == 100)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_by(f64::total_cmp);
            c[50]
        })
        .collect();
    medians.sort_by(f64::total_cmp);
    tvds.sort_by(f64::total_cmp);
    let q = |f: f64| tvds[((tvds.len() - 1) as f64 * f) as usize];
    println!("trials {trials}");
    println!("p05 {:.4}  p25 {:.4}  median {:.4}  p75 {:.4}", q(0.05), q(0.25), q(0.5), q(0.75));

    if let (Some(lo), Some(hi)) = (medians.first(), medians.last()) {
        println!("100-trial medians: min {lo:.4} max {hi:.4} over {} batches", medians.len());
    }
    Ok(())
}
