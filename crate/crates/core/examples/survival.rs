// Survival probabilities q_n of critical offspring laws and the
// asymptotics n·q_n → 2/σ².

use gw_harmonic::OffspringDistribution;

fn main() -> gw_harmonic::Result<()> {
    for spec in ["geometric", "poisson", "binary", "pary:3"] {
        let dist = OffspringDistribution::parse_spec(spec)?;
        let limit = 2.0 / dist.variance();
        print!("{:<10} σ² = {:.3}  2/σ² = {:.4} |", dist, dist.variance(), limit);
        for n in [10, 100, 1000, 10_000] {
            print!("  n·q_n({n}) = {:.4}", n as f64 * dist.survival_prob(n));
        }
        println!();
    }
    let geo = OffspringDistribution::geometric();
    println!("geometric q_20 / q_100 = {:.4} (closed form 101/21 = {:.4})", geo.survival_prob(20) / geo.survival_prob(100), 101.0 / 21.0);
    Ok(())
}
