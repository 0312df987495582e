//! Mutual information curves: redundant records versus a random pure state.

use concordia::darwinism::{mutual_info_curve, plateau_metrics, random_pure_global, FragmentChoice};
use concordia::states::{build_sbs, SbsSpec};
use concordia::tensor::SubsystemShape;

fn main() -> concordia::Result<()> {
    let sbs = build_sbs(&SbsSpec::orthogonal_records(vec![0.5, 0.5], 8)?)?;
    let env: Vec<usize> = (1..=8).collect();
    let redundant = mutual_info_curve(&sbs, &[0], &env, FragmentChoice::Prefix)?;

    let pure = random_pure_global(SubsystemShape::qubits(9), 3);
    let scrambled = mutual_info_curve(&pure, &[0], &env, FragmentChoice::RandomSubsets { per_size: 20, seed: 3 })?;

    println!("{:>6} {:>10} {:>10}", "f", "SBS", "Haar");
    for (a, b) in redundant.points.iter().zip(&scrambled.points) {
        println!("{:>6.3} {:>10.4} {:>10.4}", a.f, a.mutual_info, b.mutual_info);
    }
    for (name, c) in [("SBS", &redundant), ("Haar", &scrambled)] {
        let m = plateau_metrics(c, 0.1 * c.h_system);
        println!("{name}: H_S {:.3}, plateau width {:.3}, redundancy {}", c.h_system, m.plateau_width, m.redundancy);
    }
    Ok(())
}
