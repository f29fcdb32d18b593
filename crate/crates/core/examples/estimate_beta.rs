// The three β estimators on one solved cloud, and the all-ones negative
// control they should disagree on.

use gw_harmonic::beta::cross_validate;
use gw_harmonic::rde::{solve_fixpoint, ParticleCloud};
use gw_harmonic::Seed;

fn main() -> gw_harmonic::Result<()> {
    let cloud = solve_fixpoint(200_000, 1e-3, 60, Seed(1))?.cloud;
    let cv = cross_validate(&cloud, 4_000_000, Seed(2));
    for e in &cv.estimates {
        println!("{:>6}: β = {:.4} ± {:.4}", e.method, e.value, e.std_error);
    }
    println!("combined: {:.4}", cv.combined());

    let ones = ParticleCloud::constant(1.0, 1000)?;
    let control = cross_validate(&ones, 1_000_000, Seed(3));
    for e in &control.estimates {
        println!("all-ones {:>6}: {:.4}", e.method, e.value);
    }
    println!("negative control flagged: {}", !control.consistent());
    Ok(())
}
