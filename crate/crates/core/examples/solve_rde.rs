// Solves the conductance fixed point by particle iteration, validates it and
// writes a GAMMA-CLOUD file.

use gw_harmonic::rde::{estimate_k0, solve_fixpoint, validate_cloud, ParticleCloud};
use gw_harmonic::Seed;

fn main() -> gw_harmonic::Result<()> {
    let size = 200_000;
    let solution = solve_fixpoint(size, 2e-3, 60, Seed(1))?;
    for row in &solution.trace {
        println!("iteration {:>2}: d1 = {:.3e}", row.iteration, row.d1);
    }
    let cloud = &solution.cloud;
    println!("E[C] = {:.4}, K0 = {:.4}", cloud.mean(), estimate_k0(cloud));

    let report = validate_cloud(cloud, 1_000_000, Seed(2));
    for c in &report.checks {
        println!("[{}] {} = {:.4}", if c.passed { "pass" } else { "fail" }, c.name, c.value);
    }

    let path = std::env::temp_dir().join("gw_harmonic_example.cloud");
    cloud.save(&path)?;
    let back = ParticleCloud::load(&path)?;
    assert_eq!(&back, cloud);
    println!("round-tripped {} particles through {}", back.len(), path.display());
    std::fs::remove_file(&path).ok();
    Ok(())
}
