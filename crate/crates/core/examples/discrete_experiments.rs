// Small versions of the discrete experiments: level sizes of reduced trees,
// exponents of conditioned trees, and fixed-size trees.

use gw_harmonic::experiments::{compare_exponents, run_corollary_fixed_size, run_levelset, run_theorem1, DEFAULT_DELTA};
use gw_harmonic::{OffspringDistribution, Seed};

fn main() -> gw_harmonic::Result<()> {
    let geo = OffspringDistribution::geometric();
    let beta = 0.78;

    let levels = run_levelset(&geo, 40, &[5, 10, 20], 1000, Seed(1))?;
    for c in &levels.cells {
        println!("n = 40, p = {:>2}: mean level {:.3} ± {:.3}, expected {:.3}", c.p.unwrap(), c.mean, c.std_error, c.expected.unwrap());
    }

    let t1 = run_theorem1(&geo, &[10, 20, 40], DEFAULT_DELTA, 200, beta, Seed(2))?;
    for c in t1.cells_for("entropy_exponent") {
        println!("n = {:>3}: mean exponent {:.4} ± {:.4}", c.n, c.mean, c.std_error);
    }
    if let Some(mk) = t1.trend {
        println!("Mann-Kendall S = {}, p = {:.3}", mk.statistic, mk.p_value);
    }

    let fixed = run_corollary_fixed_size(&geo, 1600, 20, 200, beta, DEFAULT_DELTA, Seed(3))?;
    let check = compare_exponents(11, "fixed size vs height", &fixed, &t1, 20, 2.0)?;
    println!("{}: z = {:.2} ({})", check.name, check.value, if check.passed { "consistent" } else { "differs" });
    Ok(())
}
