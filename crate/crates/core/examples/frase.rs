//! Block structure of a concordant state with a repeated conditional.

use concordia::degeneracy::{conditional_decomposition, frase};
use concordia::states::{ConcordantState, LocalBasis};
use concordia::tensor::SubsystemShape;

fn main() -> concordia::Result<()> {
    let shape = SubsystemShape::qubits(3);
    // p(a, b, c) = q(a, b) r(c) with q(00) = q(01): those two support states
    // leave the third qubit in the same conditional state.
    let q = [0.3, 0.3, 0.25, 0.15];
    let r = [0.8, 0.2];
    let probs = (0..8).map(|k| q[k / 2] * r[k % 2]).collect();
    let c = ConcordantState::new(LocalBasis::haar(shape, 11), probs)?;
    let dec = conditional_decomposition(&c, &[0, 1])?;
    let blocks = frase(&dec, 1e-9);
    for b in &blocks.blocks {
        println!("block {:?} rank {}", b.labels, b.indices.len());
    }
    let err = blocks.reassemble()?.matrix().frobenius_distance(concordia::states::to_density(&c).matrix());
    println!("reassembly error {err:.1e}");
    Ok(())
}
