//! The continuum reduced tree Δ truncated at height `1 - ε`.
//!
//! Δ is a binary tree of segments. The root segment runs from height 0 to
//! `Y_∅ = U_∅`, and a child segment of `v` runs from `Y_v` to
//! `Y_v + U(1 - Y_v)`. Branches that cross `1 - ε` are cut there. The part
//! of Δ above a cut is a copy of Δ scaled by ε, so its conductance is `C*/ε`
//! with `C* ~ γ`; cut leaves are closed with a conductance drawn that way
//! from a solved [`ParticleCloud`]. Resistance is one per unit height.
//!
//! Harmonic measure splits at each branch point in proportion to the two
//! subtree conductances, so the mass of a leaf's cylinder is a product of
//! split ratios along its ray. [`dimension_curve`] averages
//! `-log mass / log(1/ε)` over random (tree, ray) pairs.

use std::io::Write;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rde::ParticleCloud;
use crate::rng::{task_id, Domain, Seed};
use crate::stats::{mann_kendall, normal_cdf, Accumulator, Trend};

const NONE: u32 = u32::MAX;

/// Node budget per tree; a tree exceeding it is discarded and redrawn.
pub const NODE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaNode {
    pub parent: u32,
    /// Height where the segment starts (the parent's `Y`, 0 at the root).
    pub base: f64,
    /// `Y_v`; at or above `1 - ε` for leaves.
    pub height: f64,
    pub children: [u32; 2],
    /// Conductance of the scaled copy above the cut; leaves only.
    pub closure: f64,
}

impl DeltaNode {
    pub fn is_leaf(&self) -> bool {
        self.children[0] == NONE
    }
}

/// Arena in depth-first preorder: children always follow their parent.
#[derive(Debug, Clone, Default)]
pub struct DeltaTree {
    eps: f64,
    nodes: Vec<DeltaNode>,
}

impl DeltaTree {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cut(&self) -> f64 {
        1.0 - self.eps
    }

    pub fn nodes(&self) -> &[DeltaNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Internal nodes met walking down first children from the root.
    pub fn leftmost_branch_count(&self) -> usize {
        let mut v = 0usize;
        let mut count = 0;
        while !self.nodes[v].is_leaf() {
            count += 1;
            v = self.nodes[v].children[0] as usize;
        }
        count
    }

    /// Builds a tree from explicit parts, mainly for tests. `nodes[0]` is the
    /// root and parents must precede children.
    pub fn from_nodes(eps: f64, nodes: Vec<DeltaNode>) -> Result<Self> {
        let tree = Self { eps, nodes };
        tree.check_invariants()?;
        Ok(tree)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("invalid delta tree: {msg}")));
        if self.nodes.is_empty() {
            return fail("no nodes".into());
        }
        let cut = self.cut();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.height.is_nan() || n.base.is_nan() || n.height <= n.base {
                return fail(format!("node {i} has height {} <= base {}", n.height, n.base));
            }
            if i == 0 {
                if n.parent != NONE || n.base != 0.0 {
                    return fail("root must have no parent and base 0".into());
                }
            } else {
                let p = n.parent as usize;
                if p >= i || self.nodes[p].height != n.base || !self.nodes[p].children.contains(&(i as u32)) {
                    return fail(format!("node {i} is not linked to parent {p}"));
                }
            }
            if n.is_leaf() {
                if n.height < cut || n.base >= cut {
                    return fail(format!("leaf {i} does not cross the cut"));
                }
                if n.closure.is_nan() || n.closure < 1.0 / self.eps {
                    return fail(format!("leaf {i} closure {} below 1/ε", n.closure));
                }
            } else if n.height >= cut || n.children.contains(&NONE) {
                return fail(format!("internal node {i} must lie below the cut with two children"));
            }
        }
        Ok(())
    }
}

/// Samples Δ_ε with closures `C*/ε`, `C*` drawn from `cloud`.
pub fn sample_delta<R: RngCore + ?Sized>(eps: f64, cloud: &ParticleCloud, rng: &mut R) -> Result<DeltaTree> {
    let mut tree = DeltaTree::default();
    sample_delta_into(&mut tree, eps, cloud, rng)?;
    Ok(tree)
}

/// As [`sample_delta`], reusing the arena of `tree`.
pub fn sample_delta_into<R: RngCore + ?Sized>(
    tree: &mut DeltaTree,
    eps: f64,
    cloud: &ParticleCloud,
    rng: &mut R,
) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain {
            name: "eps",
            value: eps,
            expected: "(0, 1/2)",
        });
    }
    let cut = 1.0 - eps;
    tree.eps = eps;
    'retry: loop {
        tree.nodes.clear();
        // (parent, slot in parent's children)
        let mut stack: Vec<(u32, usize)> = vec![(NONE, 0)];
        while let Some((parent, slot)) = stack.pop() {
            if tree.nodes.len() >= NODE_CAP {
                log::warn!("delta tree exceeded {NODE_CAP} nodes, redrawing");
                continue 'retry;
            }
            let base = if parent == NONE { 0.0 } else { tree.nodes[parent as usize].height };
            let u: f64 = rng.random();
            let height = base + u * (1.0 - base);
            let index = tree.nodes.len() as u32;
            if parent != NONE {
                tree.nodes[parent as usize].children[slot] = index;
            }
            let leaf = height >= cut;
            tree.nodes.push(DeltaNode {
                parent,
                base,
                height,
                children: [NONE; 2],
                closure: if leaf { cloud.draw(rng) / eps } else { 0.0 },
            });
            if !leaf {
                stack.push((index, 1));
                stack.push((index, 0));
            }
        }
        return Ok(());
    }
}

/// Conductance from each node's segment base to the boundary, in `out`.
pub fn subtree_conductances_into(tree: &DeltaTree, out: &mut Vec<f64>) {
    let cut = tree.cut();
    out.clear();
    out.resize(tree.len(), 0.0);
    for (i, n) in tree.nodes.iter().enumerate().rev() {
        out[i] = if n.is_leaf() {
            1.0 / ((cut - n.base) + 1.0 / n.closure)
        } else {
            let below = out[n.children[0] as usize] + out[n.children[1] as usize];
            1.0 / ((n.height - n.base) + 1.0 / below)
        };
    }
}

pub fn subtree_conductances(tree: &DeltaTree) -> Vec<f64> {
    let mut out = Vec::new();
    subtree_conductances_into(tree, &mut out);
    out
}

/// Conductance between the root and the boundary of Δ_ε.
pub fn delta_conductance(tree: &DeltaTree) -> f64 {
    subtree_conductances(tree)[0]
}

/// Follows one harmonic-measure ray: at each branch child `i` is taken with
/// probability `cᵢ/(c₁+c₂)`. Returns the leaf reached and the log mass of its
/// cylinder.
pub fn harmonic_ray_mass<R: RngCore + ?Sized>(tree: &DeltaTree, conductances: &[f64], rng: &mut R) -> (usize, f64) {
    let mut v = 0usize;
    let mut log_mass = 0.0;
    while !tree.nodes[v].is_leaf() {
        let [a, b] = tree.nodes[v].children.map(|c| c as usize);
        let (ca, cb) = (conductances[a], conductances[b]);
        let total = ca + cb;
        let u: f64 = rng.random();
        if u * total < ca {
            log_mass += (ca / total).ln();
            v = a;
        } else {
            log_mass += (cb / total).ln();
            v = b;
        }
    }
    (v, log_mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionPoint {
    pub eps: f64,
    pub exponent: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Fit of `exponent(ε) = a + b / log(1/ε)` through two ladder points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub std_error: f64,
    pub slope: f64,
}

/// The extrapolation model, recorded in reports. The rate in ε is not known
/// analytically; this form is a modelling choice.
pub const EXTRAPOLATION_MODEL: &str = "a + b/log(1/eps)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionCurve {
    pub points: Vec<DimensionPoint>,
    pub extrapolated: Option<Extrapolation>,
    pub seed: u64,
}

impl DimensionCurve {
    /// `eps,exponent,std_error,trials,extrapolated`; the extrapolated value
    /// repeats on every row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "eps,exponent,std_error,trials,extrapolated")?;
        let extra = self.extrapolated.map(|e| e.value.to_string()).unwrap_or_default();
        for p in &self.points {
            writeln!(out, "{},{},{},{},{}", p.eps, p.exponent, p.std_error, p.trials, extra)?;
        }
        Ok(())
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.exponent).collect()
    }

    /// Drift of the exponents toward `target` as ε decreases, from the
    /// inverse-variance weighted slope in `x = 1/log(1/ε)`. The direction is
    /// fixed by which side of `target` the first (coarsest) exponent lies on.
    /// Needs at least three points with positive standard errors.
    pub fn trend_toward(&self, target: f64) -> Option<CurveTrend> {
        if self.points.len() < 3 || self.points.iter().any(|p| p.std_error.is_nan() || p.std_error <= 0.0) {
            return None;
        }
        let xs: Vec<f64> = self.points.iter().map(|p| 1.0 / (-p.eps.ln())).collect();
        let ws: Vec<f64> = self.points.iter().map(|p| p.std_error.powi(-2)).collect();
        let total: f64 = ws.iter().sum();
        let xbar = xs.iter().zip(&ws).map(|(x, w)| w * x).sum::<f64>() / total;
        let ybar = self.points.iter().zip(&ws).map(|(p, w)| w * p.exponent).sum::<f64>() / total;
        let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xbar).powi(2)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&ws)
            .zip(&self.points)
            .map(|((x, w), p)| w * (x - xbar) * (p.exponent - ybar))
            .sum();
        let slope = sxy / sxx;
        let std_error = sxx.recip().sqrt();
        let rising = self.points[0].exponent < target;
        // smaller ε is smaller x, so approaching from below means a negative slope
        let z = if rising { -slope / std_error } else { slope / std_error };
        let direction = if rising { Trend::Increasing } else { Trend::Decreasing };
        Some(CurveTrend {
            slope,
            std_error,
            z,
            p_value: 1.0 - normal_cdf(z),
            mann_kendall_p: mann_kendall(&self.exponents(), direction).p_value,
        })
    }
}

/// See [`DimensionCurve::trend_toward`]. `p_value` is one-sided for the slope;
/// the rank-based Mann–Kendall p-value of the same points is reported
/// alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveTrend {
    pub slope: f64,
    pub std_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub mann_kendall_p: f64,
}

/// Default ladder `2^-6, ..., 2^-14`.
pub fn default_ladder() -> Vec<f64> {
    (6..=14).map(|k| 2f64.powi(-k)).collect()
}

/// Runs `trials` (tree, ray) pairs at each ε of `eps_list` (descending) and
/// extrapolates from the widest pair of scales, the first and last ε.
pub fn dimension_curve(cloud: &ParticleCloud, eps_list: &[f64], trials: u64, seed: Seed) -> Result<DimensionCurve> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("eps ladder must be strictly descending".into()));
    }
    if let Some(&bad) = eps_list.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
        return Err(Error::Domain {
            name: "eps",
            value: bad,
            expected: "(0, 1/2)",
        });
    }
    if trials == 0 {
        return Ok(DimensionCurve {
            points: Vec::new(),
            extrapolated: None,
            seed: seed.0,
        });
    }
    let mut points = Vec::with_capacity(eps_list.len());
    for (level, &eps) in eps_list.iter().enumerate() {
        let scale = -eps.ln();
        let acc = (0..trials)
            .into_par_iter()
            .map_init(
                || (DeltaTree::default(), Vec::new()),
                |(tree, cond), t| {
                    let mut rng = seed.stream(Domain::Continuum, task_id(level as u64, t));
                    sample_delta_into(tree, eps, cloud, &mut rng).expect("eps validated");
                    subtree_conductances_into(tree, cond);
                    let (_, log_mass) = harmonic_ray_mass(tree, cond, &mut rng);
                    -log_mass / scale
                },
            )
            .collect::<Vec<f64>>()
            .into_iter()
            .collect::<Accumulator>();
        log::debug!("eps {eps:e}: exponent {:.4} ± {:.4}", acc.mean(), acc.std_error());
        points.push(DimensionPoint {
            eps,
            exponent: acc.mean(),
            std_error: acc.std_error(),
            trials,
        });
    }
    let extrapolated = (points.len() >= 2).then(|| extrapolate(points[0], *points.last().unwrap()));
    Ok(DimensionCurve {
        points,
        extrapolated,
        seed: seed.0,
    })
}

/// Two-point fit of `a + b x`, `x = 1/log(1/ε)`, returning `a`.
pub fn extrapolate(p: DimensionPoint, q: DimensionPoint) -> Extrapolation {
    let x = |e: f64| 1.0 / (-e.ln());
    let (xp, xq) = (x(p.eps), x(q.eps));
    let wp = -xq / (xp - xq);
    let wq = xp / (xp - xq);
    Extrapolation {
        value: wp * p.exponent + wq * q.exponent,
        std_error: ((wp * p.std_error).powi(2) + (wq * q.std_error).powi(2)).sqrt(),
        slope: (p.exponent - q.exponent) / (xp - xq),
    }
}

/// Root conductances of `trees` independent Δ_ε samples, as a cloud.
pub fn conductance_law(cloud: &ParticleCloud, eps: f64, trees: u64, seed: Seed) -> Result<ParticleCloud> {
    let values: Vec<f64> = (0..trees)
        .into_par_iter()
        .map_init(
            || (DeltaTree::default(), Vec::new()),
            |(tree, cond), t| {
                let mut rng = seed.derive(0xC0D).stream(Domain::Continuum, t);
                sample_delta_into(tree, eps, cloud, &mut rng)?;
                subtree_conductances_into(tree, cond);
                Ok(cond[0])
            },
        )
        .collect::<Result<_>>()?;
    ParticleCloud::new(values, 0, seed.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rde::{solve_fixpoint, wasserstein1};

    fn curve_of(points: &[(f64, f64, f64)]) -> DimensionCurve {
        DimensionCurve {
            points: points
                .iter()
                .map(|&(eps, exponent, std_error)| DimensionPoint { eps, exponent, std_error, trials: 1 })
                .collect(),
            extrapolated: None,
            seed: 0,
        }
    }

    #[test]
    fn trend_slope_matches_ordinary_least_squares() {
        // equal errors: weighted fit reduces to the textbook formulas
        let eps = [2f64.powi(-6), 2f64.powi(-8), 2f64.powi(-10), 2f64.powi(-12)];
        let ys = [0.70, 0.74, 0.73, 0.77];
        let sigma = 0.01;
        let pts: Vec<_> = eps.iter().zip(ys).map(|(&e, y)| (e, y, sigma)).collect();
        let trend = curve_of(&pts).trend_toward(0.8).unwrap();
        let xs: Vec<f64> = eps.iter().map(|e| 1.0 / -e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        assert!((trend.slope - sxy / sxx).abs() < 1e-12);
        assert!((trend.std_error - sigma / sxx.sqrt()).abs() < 1e-12);
        assert!(trend.z > 0.0 && trend.p_value < 0.5);
        // approaching from above flips the sign convention
        let down = curve_of(&pts).trend_toward(0.6).unwrap();
        assert!((down.z + trend.z).abs() < 1e-12);
        assert!(curve_of(&pts[..2]).trend_toward(0.8).is_none());
    }
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn solved() -> &'static ParticleCloud {
        static CLOUD: OnceLock<ParticleCloud> = OnceLock::new();
        CLOUD.get_or_init(|| solve_fixpoint(200_000, 1e-3, 40, Seed(12)).unwrap().cloud)
    }

    fn leaf(parent: u32, base: f64, height: f64, closure: f64) -> DeltaNode {
        DeltaNode {
            parent,
            base,
            height,
            children: [NONE; 2],
            closure,
        }
    }

    #[test]
    fn single_segment_is_series() {
        let eps = 0.1;
        let tree = DeltaTree::from_nodes(eps, vec![leaf(NONE, 0.0, 0.95, f64::INFINITY)]).unwrap();
        assert!((delta_conductance(&tree) - 1.0 / 0.9).abs() < 1e-15);
        let tree = DeltaTree::from_nodes(eps, vec![leaf(NONE, 0.0, 0.95, 1.5 / eps)]).unwrap();
        let expected = 1.0 / (0.9 + eps / 1.5);
        assert!((delta_conductance(&tree) - expected).abs() < 1e-15);
    }

    #[test]
    fn symmetric_cherry() {
        let eps = 0.25;
        let mut root = leaf(NONE, 0.0, 0.5, 0.0);
        root.children = [1, 2];
        let tree = DeltaTree::from_nodes(
            eps,
            vec![root, leaf(0, 0.5, 0.9, 4.0 / eps), leaf(0, 0.5, 0.8, 4.0 / eps)],
        )
        .unwrap();
        let c = subtree_conductances(&tree);
        // each leaf: 1/(0.25 + 0.0625) = 3.2; root: 1/(0.5 + 1/6.4)
        assert!((c[1] - 3.2).abs() < 1e-12);
        assert!((c[0] - 1.0 / (0.5 + 1.0 / 6.4)).abs() < 1e-12);
        let mut rng = Seed(1).stream(Domain::Misc, 0);
        let (_, lm) = harmonic_ray_mass(&tree, &c, &mut rng);
        assert!((lm - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn invalid_trees_rejected() {
        assert!(DeltaTree::from_nodes(0.1, vec![leaf(NONE, 0.0, 0.5, 20.0)]).is_err());
        assert!(DeltaTree::from_nodes(0.1, vec![leaf(NONE, 0.0, 0.95, 5.0)]).is_err());
        let mut rng = Seed(1).stream(Domain::Misc, 0);
        assert!(sample_delta(0.5, solved(), &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn sampled_trees_valid(seed in any::<u64>(), k in 2i32..9) {
            let eps = 2f64.powi(-k);
            let mut rng = Seed(seed).stream(Domain::Continuum, 0);
            let tree = sample_delta(eps, solved(), &mut rng).unwrap();
            tree.check_invariants().unwrap();
            let c = subtree_conductances(&tree);
            let root = tree.nodes()[0];
            prop_assert!(c[0] >= 1.0 - 1e-12);
            let cap = if root.is_leaf() { 1.0 / (1.0 - eps) } else { 1.0 / root.height };
            prop_assert!(c[0] <= cap + 1e-12);
            // flow splits are normalized at every branch
            for n in tree.nodes().iter().filter(|n| !n.is_leaf()) {
                let [a, b] = n.children.map(|x| c[x as usize]);
                let total = (a / (a + b)) + (b / (a + b));
                prop_assert!((total - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn leaf_count_and_ray_depth() {
        let eps = 1.0 / 16.0;
        let mut leaves = Accumulator::new();
        let mut depth = Accumulator::new();
        let mut rng = Seed(3).stream(Domain::Continuum, 0);
        for _ in 0..10_000 {
            let tree = sample_delta(eps, solved(), &mut rng).unwrap();
            leaves.push(tree.leaf_count() as f64);
            depth.push(tree.leftmost_branch_count() as f64);
        }
        assert!((leaves.mean() - 16.0).abs() < 0.5, "{}", leaves.mean());
        let log_inv = -eps.ln();
        assert!((depth.mean() / log_inv - 1.0).abs() < 0.1, "{}", depth.mean());
        // halving ε doubles the leaves
        let mut small = Accumulator::new();
        for _ in 0..10_000 {
            small.push(sample_delta(eps / 2.0, solved(), &mut rng).unwrap().leaf_count() as f64);
        }
        assert!((small.mean() / leaves.mean() - 2.0).abs() < 0.1);
    }

    #[test]
    fn conductance_law_reproduces_cloud() {
        let law = conductance_law(solved(), 2f64.powi(-10), 20_000, Seed(4)).unwrap();
        let d1 = wasserstein1(&law, solved());
        assert!(d1 <= 0.02, "d1 {d1}");
    }

    #[test]
    fn curve_small_run() {
        let curve = dimension_curve(solved(), &[1.0 / 64.0, 1.0 / 256.0], 2000, Seed(5)).unwrap();
        assert_eq!(curve.points.len(), 2);
        for p in &curve.points {
            assert!(p.exponent > 0.0 && p.exponent < 1.0, "{p:?}");
        }
        let e = curve.extrapolated.unwrap();
        assert!(e.std_error > 0.0);
        let mut csv = Vec::new();
        curve.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
        let again = dimension_curve(solved(), &[1.0 / 64.0, 1.0 / 256.0], 2000, Seed(5)).unwrap();
        assert_eq!(curve, again);
        let empty = dimension_curve(solved(), &default_ladder(), 0, Seed(5)).unwrap();
        assert!(empty.points.is_empty() && empty.extrapolated.is_none());
        assert!(dimension_curve(solved(), &[0.01, 0.1], 10, Seed(5)).is_err());
    }

    #[test]
    fn extrapolation_recovers_model() {
        let (a, b) = (0.78, 0.9);
        let point = |eps: f64| DimensionPoint {
            eps,
            exponent: a + b / (-eps.ln()),
            std_error: 0.01,
            trials: 1,
        };
        let e = extrapolate(point(2f64.powi(-6)), point(2f64.powi(-14)));
        assert!((e.value - a).abs() < 1e-12);
        assert!((e.slope - b).abs() < 1e-12);
    }
}
