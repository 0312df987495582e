//! Discord of a Werner family: zero only for the fully mixed end.

use concordia::correlations::{discord, OptimizerConfig};
use concordia::states::DensityMatrix;
use concordia::tensor::{ComplexMatrix, SubsystemShape, C64, ZERO};

fn main() -> concordia::Result<()> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = ComplexMatrix::outer(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
    let noise = ComplexMatrix::identity(4).scale(0.25);
    let opt = OptimizerConfig::default();
    println!("{:>5} {:>8} {:>8} {:>8}", "w", "I", "J", "D");
    for k in 0..=10 {
        let w = k as f64 / 10.0;
        let rho = DensityMatrix::new(&bell.scale(w) + &noise.scale(1.0 - w), SubsystemShape::qubits(2))?;
        let r = discord(&rho, 0, &opt)?;
        println!("{w:>5.1} {:>8.4} {:>8.4} {:>8.4}", r.mutual_info, r.classical_corr, r.discord);
    }
    Ok(())
}
