//! End-to-end drivers for the discrete statements, producing serializable
//! reports.
//!
//! Each trial draws from its own stream `(seed, domain, cell, trial)`, trials
//! run in parallel and results are aggregated in trial order, so a report is
//! a function of its configuration alone. Wall-clock time is kept on the
//! in-memory report and logged, but left out of serialized artifacts so that
//! files are byte-identical across reruns.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::network::{
    check_conductance_bounds, concentration_statistic, conductance_to_level, harmonic_measure_exact,
};
use crate::offspring::{OffspringDistribution, OffspringKind};
use crate::rde::{wasserstein1_sorted, ParticleCloud};
use crate::rng::{task_id, Domain, Seed};
pub use crate::stats::Check;
use crate::stats::{mann_kendall, quantile_sorted, z_between, Accumulator, MannKendall, Trend};
use crate::trees::{reduce, sample_conditioned_height, sample_fixed_size_reaching, ReducedTree, DEFAULT_TRIAL_CAP};

/// Half-width of the concentration window `[n^{-β-δ}, n^{-β+δ}]` by default.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Summary of one metric in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub metric: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
    /// 5%, 25%, 50%, 75% and 95% quantiles.
    pub quantiles: [f64; 5],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl Cell {
    pub fn from_values(metric: &str, n: usize, values: &[f64]) -> Self {
        let acc: Accumulator = values.iter().copied().collect();
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let quantiles = if sorted.is_empty() {
            [f64::NAN; 5]
        } else {
            [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| quantile_sorted(&sorted, q))
        };
        Cell {
            metric: metric.to_string(),
            n,
            p: None,
            mean: acc.mean(),
            std_error: acc.std_error(),
            count: acc.count(),
            quantiles,
            expected: None,
            z: None,
        }
    }

    /// Records `expected` and the z-score of the mean against it.
    pub fn against(mut self, expected: f64) -> Self {
        self.expected = Some(expected);
        self.z = Some(crate::stats::z_score(self.mean - expected, self.std_error));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub config: Value,
    pub cells: Vec<Cell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend: Option<MannKendall>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    fn new(experiment: &str, config: Value) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            cells: Vec::new(),
            trend: None,
            checks: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    fn finish(mut self, started: Instant) -> Self {
        self.wall_clock_secs = started.elapsed().as_secs_f64();
        log::info!("{} finished in {:.1} s", self.experiment, self.wall_clock_secs);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn cell(&self, metric: &str, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.metric == metric && c.n == n)
    }

    pub fn cells_for<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a Cell> {
        self.cells.iter().filter(move |c| c.metric == metric)
    }

    /// `<experiment>_<dist>_<seed>`.
    pub fn file_stem(&self) -> String {
        let dist = self.config["distribution"].as_str().unwrap_or("none");
        let dist: String = dist
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
            .collect();
        format!("{}_{}_{}", self.experiment, dist, self.config["seed"])
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }

    /// Plot-ready rows: `experiment,metric,n,p,mean,std_error,count,q05,q25,q50,q75,q95,expected,z`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "experiment,metric,n,p,mean,std_error,count,q05,q25,q50,q75,q95,expected,z")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let q = c.quantiles;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.experiment,
                c.metric,
                c.n,
                c.p.map(|p| p.to_string()).unwrap_or_default(),
                c.mean,
                c.std_error,
                c.count,
                q[0],
                q[1],
                q[2],
                q[3],
                q[4],
                opt(c.expected),
                opt(c.z)
            )?;
        }
        Ok(())
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`, returning both paths.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = self.file_stem();
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&json).map_err(|e| Error::io(&json, e))?;
        self.write_json(std::io::BufWriter::new(file))?;
        let file = std::fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(&csv, e))?;
        Ok((json, csv))
    }

    /// Stable hash of the serialized report.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{DefaultHasher, Hasher};
        let mut h = DefaultHasher::new();
        h.write(serde_json::to_string(self).expect("report serializes").as_bytes());
        h.finish()
    }
}

/// Per-tree quantities from the exact harmonic measure of generation `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TreeStats {
    /// `-log μ_n(Σ_n) / log n` for one sampled exit point.
    exponent: f64,
    /// `-Σ μ log μ / log n`: the same quantity averaged over the exit point.
    entropy_exponent: f64,
    concentration: f64,
    boundary: f64,
    trials: f64,
}

fn tree_stats(reduced: &ReducedTree, beta: f64, delta: f64, trials: u64, rng: &mut crate::rng::StreamRng) -> Result<TreeStats> {
    let n = reduced.height();
    let mu = harmonic_measure_exact(reduced);
    let total = mu.log_total();
    if total.abs() > 1e-9 {
        return Err(Error::Config(format!("harmonic measure sums to exp({total}), not 1")));
    }
    let ln = (n as f64).ln();
    let pick = mu.sample_position(rng);
    Ok(TreeStats {
        exponent: -mu.log_masses()[pick] / ln,
        entropy_exponent: mu.entropy() / ln,
        concentration: concentration_statistic(&mu, n, beta, delta)?,
        boundary: mu.len() as f64,
        trials: trials as f64,
    })
}

fn push_tree_cells(report: &mut ExperimentReport, n: usize, stats: &[TreeStats]) {
    let column = |f: fn(&TreeStats) -> f64| stats.iter().map(f).collect::<Vec<f64>>();
    report.cells.push(Cell::from_values("exponent", n, &column(|s| s.exponent)));
    report.cells.push(Cell::from_values("entropy_exponent", n, &column(|s| s.entropy_exponent)));
    report.cells.push(Cell::from_values("concentration", n, &column(|s| s.concentration)));
    report.cells.push(Cell::from_values("boundary_size", n, &column(|s| s.boundary)));
    report.cells.push(Cell::from_values("trials_per_accept", n, &column(|s| s.trials)));
}

/// Exponent of harmonic measure on trees conditioned to reach each `n`.
///
/// Per `n` the report holds the sampled exponent `-log μ_n(Σ_n)/log n`, its
/// conditional mean given the tree (`entropy_exponent`, same expectation,
/// less noise), and the concentration statistic at `beta ± delta`. The trend
/// of the `entropy_exponent` means toward `beta` is tested with a one-sided
/// Mann–Kendall test, in the direction from the first mean toward `beta`.
pub fn run_theorem1(
    dist: &OffspringDistribution,
    n_list: &[usize],
    delta: f64,
    trials: u64,
    beta: f64,
    seed: Seed,
) -> Result<ExperimentReport> {
    if let Some(&n) = n_list.iter().find(|&&n| n < 4) {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            expected: "n >= 4",
        });
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "theorem1",
        json!({
            "distribution": dist.name(),
            "n": n_list,
            "delta": delta,
            "trials": trials,
            "beta": beta,
            "seed": seed.0,
            "threads": rayon::current_num_threads(),
        }),
    );
    let mut means = Vec::new();
    for &n in n_list {
        let stats: Vec<TreeStats> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.stream(Domain::Theorem1, task_id(n as u64, t));
                let sample = sample_conditioned_height(dist, n, &mut rng, DEFAULT_TRIAL_CAP)?;
                let reduced = reduce(&sample.tree, n).expect("conditioned tree reaches n");
                tree_stats(&reduced, beta, delta, sample.trials, &mut rng)
            })
            .collect::<Result<_>>()?;
        push_tree_cells(&mut report, n, &stats);
        means.push(report.cell("entropy_exponent", n).unwrap().mean);
    }
    if means.len() >= 2 {
        let direction = if means[0] < beta { Trend::Increasing } else { Trend::Decreasing };
        let mk = mann_kendall(&means, direction);
        report.checks.push(Check::new(7, "exponent trend toward beta (Mann-Kendall p)", mk.p_value < 0.05, mk.p_value, 0.05));
        report.trend = Some(mk);
    }
    if let Some(&last) = means.last() {
        let gap = (last - beta).abs();
        report
            .checks
            .push(Check::new(7, format!("|mean exponent - beta| at n = {}", n_list.last().unwrap()), gap <= 0.1, gap, 0.1));
    }
    Ok(report.finish(started))
}

/// Mean exponents of two reports at the same `n` agree within `sigmas`
/// combined standard errors.
pub fn compare_exponents(
    criterion: u8,
    name: &str,
    a: &ExperimentReport,
    b: &ExperimentReport,
    n: usize,
    sigmas: f64,
) -> Result<Check> {
    fn get(r: &ExperimentReport, n: usize) -> Result<&Cell> {
        r.cell("entropy_exponent", n)
            .ok_or_else(|| Error::Config(format!("{} has no exponent cell at n = {n}", r.experiment)))
    }
    let (ca, cb) = (get(a, n)?, get(b, n)?);
    let z = z_between((ca.mean, ca.std_error), (cb.mean, cb.std_error));
    Ok(Check::new(criterion, name, z.abs() <= sigmas, z, sigmas))
}

/// Law of `n·C_n(T^{*n})` for each `n`, compared with the cloud in d₁.
pub fn run_conductance_convergence(
    dist: &OffspringDistribution,
    n_list: &[usize],
    trials: u64,
    cloud: &ParticleCloud,
    seed: Seed,
) -> Result<ExperimentReport> {
    if trials == 0 || n_list.is_empty() {
        return Err(Error::Config("conductance convergence needs trials > 0 and at least one n".into()));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "conductance",
        json!({
            "distribution": dist.name(),
            "n": n_list,
            "trials": trials,
            "seed": seed.0,
            "cloud_size": cloud.len(),
            "cloud_seed": cloud.seed(),
            "threads": rayon::current_num_threads(),
        }),
    );
    let mut distances = Vec::new();
    let mut bounds_ok = true;
    for &n in n_list {
        let mut samples: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.stream(Domain::Conductance, task_id(n as u64, t));
                let tree = sample_conditioned_height(dist, n, &mut rng, DEFAULT_TRIAL_CAP)?.tree;
                let reduced = reduce(&tree, n).expect("conditioned tree reaches n");
                let c = conductance_to_level(&reduced);
                check_conductance_bounds(&reduced, c).map_err(Error::Config)?;
                Ok(n as f64 * c)
            })
            .collect::<Result<_>>()?;
        let floor = n as f64 / (n as f64 + 1.0);
        bounds_ok &= samples.iter().all(|&s| s >= floor * (1.0 - 1e-12));
        report.cells.push(Cell::from_values("scaled_conductance", n, &samples));
        samples.sort_unstable_by(f64::total_cmp);
        let d1 = wasserstein1_sorted(&samples, cloud.samples());
        distances.push(d1);
        let mut cell = Cell::from_values("d1_to_cloud", n, &[d1]);
        cell.std_error = f64::NAN;
        report.cells.push(cell);
    }
    report.checks.push(Check::new(8, "all samples >= n/(n+1)", bounds_ok, 0.0, 0.0));
    if distances.len() >= 2 {
        let decreasing = distances.windows(2).all(|w| w[1] < w[0]);
        let mk = mann_kendall(&distances, Trend::Decreasing);
        report.checks.push(Check::new(8, "d1 to cloud decreasing in n", decreasing, mk.p_value, 0.05));
        report.trend = Some(mk);
    }
    Ok(report.finish(started))
}

/// `#T^{*n}_{n-p}` against `q_p / q_n` for each `p`.
pub fn run_levelset(
    dist: &OffspringDistribution,
    n: usize,
    p_list: &[usize],
    trials: u64,
    seed: Seed,
) -> Result<ExperimentReport> {
    if let Some(&p) = p_list.iter().find(|&&p| p < 1 || 2 * p > n) {
        return Err(Error::Config(format!("p = {p} outside 1 <= p <= n/2 for n = {n}")));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "levelset",
        json!({
            "distribution": dist.name(),
            "n": n,
            "p": p_list,
            "trials": trials,
            "seed": seed.0,
            "threads": rayon::current_num_threads(),
        }),
    );
    let counts: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream(Domain::LevelSet, task_id(n as u64, t));
            let tree = sample_conditioned_height(dist, n, &mut rng, DEFAULT_TRIAL_CAP)?.tree;
            let reduced = reduce(&tree, n).expect("conditioned tree reaches n");
            Ok(p_list.iter().map(|&p| reduced.tree().level_set(n - p).len() as f64).collect())
        })
        .collect::<Result<_>>()?;
    let q = dist.survival_probs(n);
    for (i, &p) in p_list.iter().enumerate() {
        let column: Vec<f64> = counts.iter().map(|row| row[i]).collect();
        let mut cell = Cell::from_values("level_size", n, &column).against(q[p] / q[n]);
        cell.p = Some(p);
        let z = cell.z.unwrap();
        report.checks.push(Check::new(10, format!("level n-{p} mean vs q_{p}/q_{n} (|z|)"), z.abs() <= 3.0, z, 3.0));
        report.cells.push(cell);
    }
    Ok(report.finish(started))
}

/// Trees with exactly `edges` edges, resampled until they reach generation
/// `n`, with the same per-tree statistics as [`run_theorem1`].
pub fn run_corollary_fixed_size(
    dist: &OffspringDistribution,
    edges: usize,
    n: usize,
    trials: u64,
    beta: f64,
    delta: f64,
    seed: Seed,
) -> Result<ExperimentReport> {
    if !matches!(dist.kind(), OffspringKind::Geometric | OffspringKind::Poisson) {
        return Err(Error::UnsupportedDistribution(dist.name()));
    }
    if n < 4 || (2 * n) as f64 > (edges as f64).sqrt() {
        return Err(Error::Config(format!(
            "fixed-size run needs 4 <= n <= sqrt(N)/2, got n = {n}, N = {edges}"
        )));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "fixed_size",
        json!({
            "distribution": dist.name(),
            "edges": edges,
            "n": n,
            "delta": delta,
            "trials": trials,
            "beta": beta,
            "seed": seed.0,
            "threads": rayon::current_num_threads(),
        }),
    );
    let stats: Vec<TreeStats> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed.stream(Domain::FixedSize, task_id(n as u64, t));
            let sample = sample_fixed_size_reaching(dist, edges, n, &mut rng, DEFAULT_TRIAL_CAP)?;
            let reduced = reduce(&sample.tree, n).expect("tree reaches n");
            tree_stats(&reduced, beta, delta, sample.trials, &mut rng)
        })
        .collect::<Result<_>>()?;
    push_tree_cells(&mut report, n, &stats);
    let accept = report.cell("trials_per_accept", n).unwrap().mean.recip();
    report.checks.push(Check::new(11, "acceptance rate of height >= n", accept > 0.0, accept, 0.0));
    Ok(report.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levelset_geometric_closed_form() {
        let geo = OffspringDistribution::geometric();
        let r = run_levelset(&geo, 100, &[20, 50], 4000, Seed(1)).unwrap();
        let c = r.cells.iter().find(|c| c.p == Some(20)).unwrap();
        assert!((c.expected.unwrap() - 101.0 / 21.0).abs() < 1e-9);
        assert!(r.passed(), "{:?}", r.checks);
        assert!(run_levelset(&geo, 100, &[51], 10, Seed(1)).is_err());
        assert!(run_levelset(&geo, 100, &[0], 10, Seed(1)).is_err());
    }

    #[test]
    fn theorem1_small_and_reproducible() {
        let geo = OffspringDistribution::geometric();
        let a = run_theorem1(&geo, &[8, 16], DEFAULT_DELTA, 200, 0.78, Seed(2)).unwrap();
        let b = run_theorem1(&geo, &[8, 16], DEFAULT_DELTA, 200, 0.78, Seed(2)).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        for c in a.cells_for("concentration") {
            assert!((0.0..=1.0).contains(&c.mean));
        }
        for c in a.cells_for("exponent") {
            assert!(c.mean > 0.0 && c.mean < 1.5);
        }
        // sampled and tree-averaged exponents estimate the same mean
        let (s, e) = (a.cell("exponent", 16).unwrap(), a.cell("entropy_exponent", 16).unwrap());
        assert!((s.mean - e.mean).abs() < 4.0 * s.std_error);
        assert!(e.std_error < s.std_error);
        assert!(run_theorem1(&geo, &[3], 0.25, 10, 0.78, Seed(2)).is_err());
        assert_eq!(a.file_stem(), "theorem1_geometric_2");
    }

    #[test]
    fn reports_serialize() {
        let geo = OffspringDistribution::geometric();
        let r = run_levelset(&geo, 20, &[5, 10], 300, Seed(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (json, csv) = r.save(dir.path()).unwrap();
        assert!(json.ends_with("levelset_geometric_3.json"));
        let back: ExperimentReport = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
        assert_eq!(back.cells, r.cells);
        let text = std::fs::read_to_string(csv).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(!std::fs::read_to_string(&json).unwrap().contains("wall_clock"));
    }

    #[test]
    fn fixed_size_guards() {
        let geo = OffspringDistribution::geometric();
        assert!(run_corollary_fixed_size(&geo, 100, 20, 10, 0.78, 0.25, Seed(1)).is_err());
        let bin = OffspringDistribution::binary();
        assert!(run_corollary_fixed_size(&bin, 40000, 80, 10, 0.78, 0.25, Seed(1)).is_err());
        let r = run_corollary_fixed_size(&geo, 1600, 20, 100, 0.78, 0.25, Seed(1)).unwrap();
        assert!(r.passed());
        assert_eq!(r.cell("exponent", 20).unwrap().count, 100);
    }

    #[test]
    fn conductance_small() {
        let geo = OffspringDistribution::geometric();
        let cloud = crate::rde::solve_fixpoint(50_000, 2e-3, 40, Seed(4)).unwrap().cloud;
        let r = run_conductance_convergence(&geo, &[10, 40], 500, &cloud, Seed(4)).unwrap();
        assert!(r.checks[0].passed);
        assert!(r.cell("d1_to_cloud", 10).unwrap().mean > 0.0);
    }
}
