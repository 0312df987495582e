//! Classical sampling of a permutation circuit read out in a rotated basis,
//! against the exact distribution.

use concordia::mcsim::{dense_reference, simulate, tvd, CircuitPlan};
use concordia::tensor::SubsystemShape;

fn main() -> concordia::Result<()> {
    let plan = CircuitPlan::random(SubsystemShape::qubits(6), 8, 21);
    let exact = dense_reference(&plan)?;
    for shots in [1_000, 10_000, 100_000, 1_000_000] {
        let t = std::time::Instant::now();
        let report = simulate(&plan, shots, 5)?;
        println!(
            "{shots:>8} shots: TVD {:.4} in {:.1} ms",
            tvd(&report.distribution(), &exact)?,
            t.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
