// Galton–Watson samplers: unconditioned, conditioned on height, and
// conditioned on the number of edges; plus reduction and the text dump.

use gw_harmonic::rng::{Domain, Seed};
use gw_harmonic::trees::{reduce, sample_conditioned_height, sample_fixed_size, sample_gw, DEFAULT_NODE_CAP, DEFAULT_TRIAL_CAP};
use gw_harmonic::OffspringDistribution;

fn main() -> gw_harmonic::Result<()> {
    let geo = OffspringDistribution::geometric();
    let mut rng = Seed(7).stream(Domain::Misc, 0);

    let sizes: Vec<usize> = (0..10)
        .map(|_| sample_gw(&geo, &mut rng, DEFAULT_NODE_CAP).map(|t| t.len()).unwrap_or(usize::MAX))
        .collect();
    println!("ten unconditioned tree sizes: {sizes:?}");

    let n = 30;
    let conditioned = sample_conditioned_height(&geo, n, &mut rng, DEFAULT_TRIAL_CAP)?;
    let reduced = reduce(&conditioned.tree, n).expect("reaches n");
    println!(
        "height {n}: accepted after {} trials, {} vertices, reduced to {}, boundary {}",
        conditioned.trials,
        conditioned.tree.len(),
        reduced.tree().len(),
        reduced.boundary().len()
    );
    println!("reduced level sizes: {:?}", reduced.tree().level_sizes());

    let poisson = OffspringDistribution::poisson();
    let fixed = sample_fixed_size(&poisson, 12, &mut rng)?;
    println!("poisson tree with 12 edges, height {}:", fixed.height());
    fixed.write_dump(std::io::stdout()).expect("stdout");
    Ok(())
}
