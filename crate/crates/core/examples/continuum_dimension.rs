// Ball-mass exponent of harmonic measure on the continuum tree over a short
// ε ladder, with the extrapolation in 1/log(1/ε).

use gw_harmonic::continuum::{dimension_curve, sample_delta, subtree_conductances};
use gw_harmonic::rde::solve_fixpoint;
use gw_harmonic::rng::{Domain, Seed};

fn main() -> gw_harmonic::Result<()> {
    let cloud = solve_fixpoint(100_000, 2e-3, 60, Seed(1))?.cloud;

    let mut rng = Seed(2).stream(Domain::Misc, 0);
    let tree = sample_delta(1.0 / 32.0, &cloud, &mut rng)?;
    println!("one tree at ε = 1/32: {} nodes, {} leaves, conductance {:.4}", tree.len(), tree.leaf_count(), subtree_conductances(&tree)[0]);

    let ladder: Vec<f64> = (6..=10).map(|k| 2f64.powi(-k)).collect();
    let curve = dimension_curve(&cloud, &ladder, 500, Seed(3))?;
    for p in &curve.points {
        println!("ε = 2^{:>3}: exponent {:.4} ± {:.4}", p.eps.log2(), p.exponent, p.std_error);
    }
    if let Some(e) = curve.extrapolated {
        println!("extrapolated: {:.4} ± {:.4}", e.value, e.std_error);
    }
    Ok(())
}
