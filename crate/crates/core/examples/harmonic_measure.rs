// Exact harmonic measure of generation n by current splitting, checked
// against the linear-solve oracle and simulated walks.

use gw_harmonic::network::{conductance_to_level, harmonic_measure_exact, hitting_distribution_linsolve, simulate_walk_exit};
use gw_harmonic::rng::{Domain, Seed};
use gw_harmonic::trees::{reduce, sample_conditioned_height, DEFAULT_TRIAL_CAP};
use gw_harmonic::OffspringDistribution;

fn main() -> gw_harmonic::Result<()> {
    let geo = OffspringDistribution::geometric();
    let mut rng = Seed(3).stream(Domain::Misc, 0);
    let n = 10;
    let tree = sample_conditioned_height(&geo, n, &mut rng, DEFAULT_TRIAL_CAP)?.tree;
    let reduced = reduce(&tree, n).expect("reaches n");

    let exact = harmonic_measure_exact(&reduced);
    let solved = hitting_distribution_linsolve(&reduced)?;
    println!("boundary size {}, C_n = {:.5}", exact.len(), conductance_to_level(&reduced));
    println!("max |exact - linear solve| = {:.2e}", exact.max_abs_diff(&solved));

    let walks = 100_000;
    let mut hits = vec![0u64; exact.len()];
    for _ in 0..walks {
        hits[simulate_walk_exit(&reduced, &mut rng)] += 1;
    }
    println!("{:>4} {:>10} {:>10}", "v", "exact", "walks");
    for (v, (m, h)) in exact.masses().zip(&hits).enumerate().take(8) {
        println!("{v:>4} {m:>10.5} {:>10.5}", *h as f64 / walks as f64);
    }
    println!("entropy exponent -Σμ log μ / log n = {:.4}", exact.entropy() / (n as f64).ln());
    Ok(())
}
