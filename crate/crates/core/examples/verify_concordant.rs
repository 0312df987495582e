//! Hides a product-basis-diagonal state behind random local unitaries and
//! asks the verifier to find the basis again.

use concordia::correlations::verify_concordant;
use concordia::states::{from_density, random_mixed_state, to_density, ConcordantState};
use concordia::tensor::SubsystemShape;

fn main() -> concordia::Result<()> {
    for n in 2..=5 {
        let hidden = ConcordantState::random(SubsystemShape::qubits(n), n as u64);
        let rho = to_density(&hidden);
        let basis = verify_concordant(&rho)?.expect("built concordant");
        let found = from_density(&rho, &basis)?;
        let mut a = hidden.probs().to_vec();
        let mut b = found.probs().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("{n} qubits: basis recovered, table error {err:.1e}");
    }
    let generic = random_mixed_state(SubsystemShape::qubits(3), 2, 7);
    println!("generic mixed state concordant: {}", verify_concordant(&generic)?.is_some());
    Ok(())
}
