//! The local basis finder on a gate whose block factor makes the output
//! basis of the second qubit ambiguous, and on the same gate without it.

use concordia::lbf::{basis_ambiguity_gate, run_lbf, ProjectorFamily};
use concordia::states::LocalBasis;
use concordia::tensor::SubsystemShape;

fn main() -> concordia::Result<()> {
    let shape = SubsystemShape::qubits(2);
    let id = LocalBasis::identity(shape.clone());
    for (name, family) in [
        ("rank one", ProjectorFamily::rank_one(&shape, vec![0, 1])?),
        ("all ranks", ProjectorFamily::all_ranks(&shape, vec![0, 1])?),
    ] {
        for theta in [std::f64::consts::FRAC_PI_4, 0.0] {
            let out = run_lbf(&basis_ambiguity_gate(theta), &id, &family)?;
            println!("{name:>9}, theta {theta:.3}: {:?} (qubit {:?})", out.status, out.qubit);
            if let Some(b) = out.basis {
                println!("{}", serde_json::to_string(&b).expect("serializes"));
            }
        }
    }
    Ok(())
}
