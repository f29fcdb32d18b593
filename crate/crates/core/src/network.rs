//! Electrical-network quantities on reduced trees, with unit resistance per
//! edge.
//!
//! `c(v)` is the effective conductance between `v` and the boundary (depth
//! `n`) inside the subtree of `v`. Boundary vertices carry an infinite
//! conductance, represented by [`f64::INFINITY`] and never produced by
//! arithmetic: [`edge_in_series`] maps it to 1 explicitly.
//!
//! Harmonic measure is computed exactly by current splitting. The walk from
//! `v` enters child `w` with probability proportional to `c(w) / (1 + c(w))`,
//! the conductance of the edge `vw` in series with the subtree of `w`, so the
//! mass of a boundary vertex is the product of the split ratios along its
//! ancestral line. Everything is accumulated in log space.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;
use crate::stats::log_sum_exp;
use crate::trees::{reduce, sample_conditioned_height, ReducedTree, DEFAULT_TRIAL_CAP};

/// Vertex limit for [`hitting_distribution_linsolve`].
pub const LINSOLVE_LIMIT: usize = 20_000;
const DENSE_LIMIT: usize = 2_500;

/// Conductance of a unit edge in series with a subtree of conductance `c`.
#[inline]
pub fn edge_in_series(c: f64) -> f64 {
    if c == f64::INFINITY {
        1.0
    } else {
        c / (1.0 + c)
    }
}

/// Per-vertex `c(v)`, bottom-up.
pub fn subtree_conductances(reduced: &ReducedTree) -> Vec<f64> {
    let tree = reduced.tree();
    let mut c = vec![f64::INFINITY; tree.len()];
    for v in (0..reduced.boundary().start).rev() {
        c[v] = tree.children(v).map(|w| edge_in_series(c[w])).sum();
    }
    c
}

/// `C_n(τ)`: probability that the walk started at the root reaches depth `n`
/// before an extra vertex attached to the root by a unit edge.
pub fn conductance_to_level(reduced: &ReducedTree) -> f64 {
    let tree = reduced.tree();
    if reduced.height() == 0 {
        return 1.0;
    }
    // only the root value is needed; walk levels bottom-up without storing
    // more than two of them
    let mut below: Vec<f64> = vec![f64::INFINITY; reduced.boundary().len()];
    for d in (0..reduced.height()).rev() {
        let level = tree.level_set(d);
        let offset = tree.level_set(d + 1).start;
        below = level
            .map(|v| tree.children(v).map(|w| edge_in_series(below[w - offset])).sum())
            .collect();
    }
    edge_in_series(below[0])
}

/// Harmonic measure of the depth-`n` level, as log-masses indexed like
/// [`ReducedTree::boundary`].
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicMeasure {
    boundary_log_mass: Vec<f64>,
    height: usize,
}

impl HarmonicMeasure {
    pub fn log_masses(&self) -> &[f64] {
        &self.boundary_log_mass
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.boundary_log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary_log_mass.is_empty()
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.boundary_log_mass.iter().map(|l| l.exp())
    }

    /// `log Σ μ(v)`, zero up to rounding.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(&self.boundary_log_mass)
    }

    /// Shannon entropy `-Σ μ log μ`.
    pub fn entropy(&self) -> f64 {
        self.boundary_log_mass
            .iter()
            .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { -l * l.exp() })
            .sum()
    }

    /// Draws a boundary position (0-based within the boundary) by inverse CDF
    /// in tree order.
    pub fn sample_position<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, l) in self.boundary_log_mass.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                return i;
            }
        }
        // rounding left the total a hair under u; take the last atom with mass
        self.boundary_log_mass
            .iter()
            .rposition(|&l| l > f64::NEG_INFINITY)
            .unwrap_or(self.len() - 1)
    }

    pub fn max_abs_diff(&self, other: &HarmonicMeasure) -> f64 {
        self.masses()
            .zip(other.masses())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn from_masses(masses: &[f64], height: usize) -> Self {
        Self {
            boundary_log_mass: masses.iter().map(|m| m.max(0.0).ln()).collect(),
            height,
        }
    }
}

/// Log of the flow through every vertex (the harmonic mass of its boundary
/// descendants).
pub fn vertex_log_flows(reduced: &ReducedTree, conductances: &[f64]) -> Vec<f64> {
    let tree = reduced.tree();
    let mut flow = vec![0.0; tree.len()];
    for v in 0..reduced.boundary().start {
        let log_total = conductances[v].ln();
        for w in tree.children(v) {
            flow[w] = flow[v] + edge_in_series(conductances[w]).ln() - log_total;
        }
    }
    flow
}

pub fn harmonic_measure_exact(reduced: &ReducedTree) -> HarmonicMeasure {
    let c = subtree_conductances(reduced);
    let flow = vertex_log_flows(reduced, &c);
    HarmonicMeasure {
        boundary_log_mass: flow[reduced.boundary()].to_vec(),
        height: reduced.height(),
    }
}

/// Hitting law of the boundary by solving the Dirichlet problem for the walk.
///
/// With interior vertices `I` (depth `< n`) and graph Laplacian `L = D - A`,
/// the expected number of visits from the root is `G = L_II⁻¹ D`, so the
/// probability of entering boundary vertex `b` from its parent `p` is
/// `G(root, p) / deg(p) = (L_II⁻¹)(root, p)`. One symmetric solve
/// `L_II x = e_root` gives every boundary mass as `x[parent(b)]`.
pub fn hitting_distribution_linsolve(reduced: &ReducedTree) -> Result<HarmonicMeasure> {
    let tree = reduced.tree();
    if tree.len() > LINSOLVE_LIMIT {
        return Err(Error::SizeExceeded {
            vertices: tree.len(),
            limit: LINSOLVE_LIMIT,
        });
    }
    let interior = reduced.boundary().start;
    let degree = |v: usize| tree.child_count(v) + usize::from(v != 0);
    let green = if interior <= DENSE_LIMIT {
        let mut lap = DMatrix::<f64>::zeros(interior, interior);
        for v in 0..interior {
            lap[(v, v)] = degree(v) as f64;
            for w in tree.children(v).filter(|&w| w < interior) {
                lap[(v, w)] = -1.0;
                lap[(w, v)] = -1.0;
            }
        }
        let mut rhs = DVector::<f64>::zeros(interior);
        rhs[0] = 1.0;
        lap.lu().solve(&rhs).ok_or(Error::Singular)?.as_slice().to_vec()
    } else {
        conjugate_gradient(reduced, interior, &degree)
    };
    let masses: Vec<f64> = reduced
        .boundary()
        .map(|b| green[tree.parent(b).expect("boundary vertex has a parent")])
        .collect();
    Ok(HarmonicMeasure::from_masses(&masses, reduced.height()))
}

/// Sparse CG on the same system, for trees too large for a dense solve.
fn conjugate_gradient(reduced: &ReducedTree, interior: usize, degree: &dyn Fn(usize) -> usize) -> Vec<f64> {
    let tree = reduced.tree();
    let apply = |x: &[f64], out: &mut [f64]| {
        for v in 0..interior {
            let mut s = degree(v) as f64 * x[v];
            if let Some(p) = tree.parent(v) {
                s -= x[p];
            }
            for w in tree.children(v).filter(|&w| w < interior) {
                s -= x[w];
            }
            out[v] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; interior];
    let mut r = vec![0.0; interior];
    r[0] = 1.0;
    let mut p = r.clone();
    let mut ap = vec![0.0; interior];
    let mut rr = dot(&r, &r);
    for _ in 0..20 * interior {
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let next = dot(&r, &r);
        if next.sqrt() < 1e-15 {
            break;
        }
        let beta = next / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = next;
    }
    x
}

/// Runs simple random walk from the root (reflected there) until it first
/// reaches depth `n`; returns the boundary position it hits.
pub fn simulate_walk_exit<R: RngCore + ?Sized>(reduced: &ReducedTree, rng: &mut R) -> usize {
    let tree = reduced.tree();
    let n = reduced.height();
    let mut v = 0usize;
    while tree.depth(v) < n {
        let kids = tree.children(v);
        let up = usize::from(v != 0);
        let pick = rng.random_range(0..kids.len() + up);
        v = if pick < kids.len() {
            kids.start + pick
        } else {
            tree.parent(v).expect("non-root vertex")
        };
    }
    v - reduced.boundary().start
}

/// `log μ_n` of the boundary descendants of the depth-`(n - r)` ancestor of
/// boundary position `position`.
pub fn ball_mass(mu: &HarmonicMeasure, reduced: &ReducedTree, position: usize, r: usize) -> Result<f64> {
    let n = reduced.height();
    if r > n {
        return Err(Error::Domain {
            name: "r",
            value: r as f64,
            expected: "[0, n]",
        });
    }
    let boundary = reduced.boundary();
    if position >= boundary.len() {
        return Err(Error::Domain {
            name: "position",
            value: position as f64,
            expected: "a boundary position",
        });
    }
    let tree = reduced.tree();
    let anc = tree.ancestor_at_depth(boundary.start + position, n - r);
    let desc = tree.descendants_at(anc, n);
    let lo = desc.start - boundary.start;
    let hi = desc.end - boundary.start;
    Ok(log_sum_exp(&mu.boundary_log_mass[lo..hi]))
}

/// μ_n-mass of the boundary vertices with `n^{-β-δ} <= μ_n(v) <= n^{-β+δ}`.
pub fn concentration_statistic(mu: &HarmonicMeasure, n: usize, beta: f64, delta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            expected: "n >= 2",
        });
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Domain {
            name: "delta",
            value: delta,
            expected: "delta >= 0",
        });
    }
    let ln = (n as f64).ln();
    let lo = -(beta + delta) * ln;
    let hi = -(beta - delta) * ln;
    Ok(mu
        .boundary_log_mass
        .iter()
        .filter(|&&l| l >= lo && l <= hi)
        .map(|l| l.exp())
        .sum())
}

/// Per-tree quantities from one conditioned sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSample {
    /// `-log μ_n(Σ_n) / log n` with `Σ_n` drawn from the exact measure.
    pub exponent: f64,
    /// `-Σ μ log μ / log n`, the conditional mean of `exponent` given the tree.
    pub entropy_exponent: f64,
    pub boundary_size: usize,
}

/// Exit exponent of a freshly sampled tree conditioned to reach generation `n`.
pub fn exit_exponent_sample<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(exit_sample(dist, n, rng)?.exponent)
}

pub fn exit_sample<R: RngCore + ?Sized>(dist: &OffspringDistribution, n: usize, rng: &mut R) -> Result<ExitSample> {
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            expected: "n >= 2",
        });
    }
    let tree = sample_conditioned_height(dist, n, rng, DEFAULT_TRIAL_CAP)?.tree;
    let reduced = reduce(&tree, n).expect("conditioned tree reaches n");
    Ok(exit_sample_on(&reduced, rng))
}

pub fn exit_sample_on<R: RngCore + ?Sized>(reduced: &ReducedTree, rng: &mut R) -> ExitSample {
    let n = reduced.height();
    let mu = harmonic_measure_exact(reduced);
    debug_assert!(mu.log_total().abs() < 1e-9);
    let ln = (n as f64).ln();
    let pick = mu.sample_position(rng);
    ExitSample {
        exponent: -mu.log_masses()[pick] / ln,
        entropy_exponent: mu.entropy() / ln,
        boundary_size: mu.len(),
    }
}

/// `n · C_n(T^{*n})` for a fresh conditioned tree.
pub fn scaled_conductance_sample<R: RngCore + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let tree = sample_conditioned_height(dist, n, rng, DEFAULT_TRIAL_CAP)?.tree;
    let reduced = reduce(&tree, n).expect("conditioned tree reaches n");
    let c = conductance_to_level(&reduced);
    check_conductance_bounds(&reduced, c).map_err(Error::Config)?;
    Ok(n as f64 * c)
}

/// `1/(n+1) <= C_n <= 1` and the Nash–Williams cut bound
/// `C_n <= #level(j) / j` at `j = ⌊n/2⌋`.
pub fn check_conductance_bounds(reduced: &ReducedTree, c: f64) -> std::result::Result<(), String> {
    let n = reduced.height();
    let lower = 1.0 / (n as f64 + 1.0);
    if !(c >= lower * (1.0 - 1e-12) && c <= 1.0 + 1e-12) {
        return Err(format!("C_{n} = {c} outside [1/(n+1), 1]"));
    }
    let j = n / 2;
    if j >= 1 {
        let cut = reduced.tree().level_set(j).len() as f64 / j as f64;
        if c > cut * (1.0 + 1e-12) {
            return Err(format!("C_{n} = {c} exceeds Nash-Williams bound {cut}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, Seed};
    use crate::trees::{sample_conditioned_height, PlaneTree};
    use proptest::prelude::*;

    fn reduced(tree: PlaneTree) -> ReducedTree {
        let h = tree.height();
        reduce(&tree, h).unwrap()
    }

    #[test]
    fn conductance_small_networks() {
        for i in 1..8 {
            let path = reduced(PlaneTree::path(i));
            let c = subtree_conductances(&path);
            assert!((c[0] - 1.0 / i as f64).abs() < 1e-15);
            assert!((conductance_to_level(&path) - 1.0 / (i as f64 + 1.0)).abs() < 1e-15);
        }
        let star = reduced(PlaneTree::star(2));
        assert_eq!(subtree_conductances(&star)[0], 2.0);
        assert!((conductance_to_level(&star) - 2.0 / 3.0).abs() < 1e-15);
        // root with two paths of length 2: each branch is two unit edges in series
        let two_paths = reduced(PlaneTree::from_offspring_bfs([2, 1, 1, 0, 0]).unwrap());
        assert!((subtree_conductances(&two_paths)[0] - 1.0).abs() < 1e-15);
        assert!((conductance_to_level(&two_paths) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conductance_to_level_first_step_analysis() {
        // P(hit depth 1 before ∂) from the root of a depth-1 binary tree:
        // p = 2/3 * 1 + 1/3 * 0
        let star = reduced(PlaneTree::star(2));
        let p = 2.0 / 3.0;
        assert!((conductance_to_level(&star) - p).abs() < 1e-15);
    }

    #[test]
    fn measure_on_simple_trees() {
        let star = reduced(PlaneTree::star(4));
        let mu = harmonic_measure_exact(&star);
        assert!(mu.masses().all(|m| (m - 0.25).abs() < 1e-15));
        let path = reduced(PlaneTree::path(6));
        let mu = harmonic_measure_exact(&path);
        assert_eq!(mu.log_masses(), &[0.0]);
        let lin = hitting_distribution_linsolve(&path).unwrap();
        assert!((lin.masses().next().unwrap() - 1.0).abs() < 1e-12);
        let lin = hitting_distribution_linsolve(&star).unwrap();
        assert!(lin.masses().all(|m| (m - 0.25).abs() < 1e-12));
    }

    #[test]
    fn measure_matches_linsolve_on_mixed_tree() {
        // root -> {path of length 2, vertex that branches into two boundary leaves}
        let t = reduced(PlaneTree::from_offspring_bfs([2, 1, 2, 0, 0, 0]).unwrap());
        let exact = harmonic_measure_exact(&t);
        let lin = hitting_distribution_linsolve(&t).unwrap();
        assert!(exact.max_abs_diff(&lin) < 1e-10);
        // c = 1 and 2 below the root; flow weights c/(1+c) = 1/2 and 2/3
        let masses: Vec<f64> = exact.masses().collect();
        for (m, want) in masses.iter().zip([3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0]) {
            assert!((m - want).abs() < 1e-12, "{masses:?}");
        }
    }

    #[test]
    fn cg_agrees_with_dense_solve() {
        let geo = OffspringDistribution::geometric();
        let mut rng = Seed(3).stream(Domain::Misc, 0);
        let t = sample_conditioned_height(&geo, 12, &mut rng, DEFAULT_TRIAL_CAP).unwrap().tree;
        let r = reduce(&t, 12).unwrap();
        let interior = r.boundary().start;
        let degree = |v: usize| r.tree().child_count(v) + usize::from(v != 0);
        let green = conjugate_gradient(&r, interior, &degree);
        let dense = hitting_distribution_linsolve(&r).unwrap();
        for (i, b) in r.boundary().enumerate() {
            let m = green[r.tree().parent(b).unwrap()];
            assert!((m - dense.masses().nth(i).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn walk_examples() {
        let mut rng = Seed(4).stream(Domain::Misc, 0);
        let path = reduced(PlaneTree::path(5));
        assert!((0..100).all(|_| simulate_walk_exit(&path, &mut rng) == 0));
        let star = reduced(PlaneTree::star(4));
        let mut hits = [0usize; 4];
        let walks = 100_000;
        for _ in 0..walks {
            hits[simulate_walk_exit(&star, &mut rng)] += 1;
        }
        for h in hits {
            assert!((h as f64 / walks as f64 - 0.25).abs() < 0.005);
        }
    }

    #[test]
    fn ball_mass_examples() {
        let star = reduced(PlaneTree::star(5));
        let mu = harmonic_measure_exact(&star);
        assert!((ball_mass(&mu, &star, 2, 0).unwrap() - (0.2f64).ln()).abs() < 1e-12);
        assert!(ball_mass(&mu, &star, 2, 1).unwrap().abs() < 1e-12);
        assert!(ball_mass(&mu, &star, 2, 2).is_err());
        assert!(ball_mass(&mu, &star, 5, 0).is_err());
    }

    #[test]
    fn concentration_examples() {
        let star = reduced(PlaneTree::star(4));
        let mu = harmonic_measure_exact(&star);
        assert!((concentration_statistic(&mu, 16, 0.5, 10.0).unwrap() - 1.0).abs() < 1e-12);
        // every mass is exactly 16^{-1/2}
        assert!((concentration_statistic(&mu, 16, 0.5, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(concentration_statistic(&mu, 16, 0.3, 0.0).unwrap(), 0.0);
        assert!(concentration_statistic(&mu, 1, 0.5, 0.1).is_err());
    }

    #[test]
    fn exit_sample_examples() {
        let mut rng = Seed(5).stream(Domain::Misc, 0);
        let line = OffspringDistribution::custom(&[(1, 1.0)]).unwrap();
        assert_eq!(exit_exponent_sample(&line, 10, &mut rng).unwrap(), 0.0);
        let geo = OffspringDistribution::geometric();
        assert!(exit_exponent_sample(&geo, 1, &mut rng).is_err());
        let line_c = scaled_conductance_sample(&line, 7, &mut rng).unwrap();
        assert!((line_c - 7.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn exit_exponent_mean_geometric_200() {
        let geo = OffspringDistribution::geometric();
        let mut rng = Seed(6).stream(Domain::Misc, 0);
        let acc: crate::stats::Accumulator =
            (0..2000).map(|_| exit_exponent_sample(&geo, 200, &mut rng).unwrap()).collect();
        assert!((0.6..=0.95).contains(&acc.mean()), "mean exponent {}", acc.mean());
    }

    #[test]
    fn scaled_conductance_second_moment_bounded() {
        let geo = OffspringDistribution::geometric();
        let mut second = Vec::new();
        for (i, n) in [50usize, 100, 200].into_iter().enumerate() {
            let mut rng = Seed(7).stream(Domain::Misc, i as u64);
            let xs: Vec<f64> = (0..2000).map(|_| scaled_conductance_sample(&geo, n, &mut rng).unwrap()).collect();
            assert!(xs.iter().all(|&x| x >= n as f64 / (n as f64 + 1.0) - 1e-12));
            second.push(xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64);
        }
        // E[(n C_n)^2] stays bounded: no growth across a 4x range of n
        assert!(second[2] < 1.25 * second[0] && second.iter().all(|&m| m < 10.0), "{second:?}");
    }

    fn random_reduced(seed: u64, n: usize) -> ReducedTree {
        let geo = OffspringDistribution::geometric();
        let mut rng = Seed(seed).stream(Domain::Misc, 99);
        let t = sample_conditioned_height(&geo, n, &mut rng, DEFAULT_TRIAL_CAP).unwrap().tree;
        reduce(&t, n).unwrap()
    }

    proptest! {
        #[test]
        fn flow_conservation_and_bounds(seed in any::<u64>(), n in 1usize..40) {
            let r = random_reduced(seed, n);
            let c = subtree_conductances(&r);
            let flow = vertex_log_flows(&r, &c);
            for v in 0..r.boundary().start {
                let kids: Vec<f64> = r.tree().children(v).map(|w| flow[w]).collect();
                prop_assert!((log_sum_exp(&kids) - flow[v]).abs() < 1e-12);
            }
            let mu = harmonic_measure_exact(&r);
            prop_assert!(mu.log_total().abs() < 1e-12);
            prop_assert!(mu.log_masses().iter().all(|&l| l <= 1e-15));
            let cn = conductance_to_level(&r);
            prop_assert!((cn - edge_in_series(c[0])).abs() < 1e-14);
            prop_assert!(check_conductance_bounds(&r, cn).is_ok());
            // balls at each radius partition the mass
            for rad in 0..=n {
                let anc_level = r.tree().level_set(n - rad);
                let total: Vec<f64> = anc_level
                    .map(|a| {
                        let d = r.tree().descendants_at(a, n);
                        ball_mass(&mu, &r, d.start - r.boundary().start, rad).unwrap()
                    })
                    .collect();
                prop_assert!(log_sum_exp(&total).abs() < 1e-12);
            }
            // nested balls grow with the radius
            let pos = (seed as usize) % mu.len();
            let radii: Vec<f64> = (0..=n).map(|rad| ball_mass(&mu, &r, pos, rad).unwrap()).collect();
            prop_assert!(radii.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            prop_assert!(radii[n].abs() < 1e-12);
        }

        #[test]
        fn exact_matches_linsolve(seed in any::<u64>(), n in 1usize..=12) {
            let r = random_reduced(seed, n);
            let exact = harmonic_measure_exact(&r);
            let lin = hitting_distribution_linsolve(&r).unwrap();
            prop_assert!(exact.max_abs_diff(&lin) < 1e-10);
        }
    }
}
