//! The `gwh` command line.
//!
//! ```text
//! gwh rde solve       --particles 1000000 --tol 2e-3 --out runs/
//! gwh rde validate    --cloud runs/gamma.cloud
//! gwh beta            --cloud runs/gamma.cloud --method all
//! gwh discrete theorem1 --offspring geometric --n 50,100,200,400
//! gwh continuum dimension --cloud runs/gamma.cloud
//! ```
//!
//! Exit status is 0 when every statistical check passes, 1 when one fails
//! and 2 for usage or I/O errors. With `--expect-fail` the sense of the
//! statistical checks flips, for negative controls.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::beta::{cross_validate_methods, CrossValidation, Method};
use crate::continuum::{default_ladder, dimension_curve, EXTRAPOLATION_MODEL};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_exponents, run_conductance_convergence, run_corollary_fixed_size, run_levelset, run_theorem1,
    ExperimentReport, DEFAULT_DELTA,
};
use crate::offspring::OffspringDistribution;
use crate::rde::{estimate_floor, solve_fixpoint, validate_cloud, ParticleCloud};
use crate::rng::Seed;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "gwh", version, about = "Harmonic measure on critical Galton-Watson trees")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Report format; both are written when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Default sizes for every command.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Smoke)]
    pub preset: Preset,
    /// Succeed only if a statistical check fails (negative controls).
    #[arg(long, global = true)]
    pub expect_fail: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Smoke,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conductance fixed point.
    #[command(subcommand)]
    Rde(RdeCommand),
    /// Three estimates of beta with cross-validation.
    Beta(BetaArgs),
    /// Discrete-tree experiments.
    #[command(subcommand)]
    Discrete(DiscreteCommand),
    /// Continuum-tree experiments.
    #[command(subcommand)]
    Continuum(ContinuumCommand),
}

#[derive(Debug, Subcommand)]
pub enum RdeCommand {
    /// Iterate the particle map to its fixed point and write the cloud.
    Solve(SolveArgs),
    /// Check a cloud against the fixed-point identities.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Cloud size M.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Stop when successive clouds are this close in d1.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 60)]
    pub max_iters: u64,
    /// Cloud file to write (default `<out>/gamma.cloud`).
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Resampled pairs per identity check.
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    All,
    Triple,
    Moment,
    Shift,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    /// Resampled cloud values per estimator.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OffspringArg {
    /// geometric | poisson | binary | pary:<p> | strict-pary:<p> | custom:<file>
    #[arg(long, default_value = "geometric")]
    pub offspring: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaSource {
    /// Reference beta taken from a `gwh beta` JSON report.
    #[arg(long, conflicts_with = "beta")]
    pub beta_report: Option<PathBuf>,
    /// Reference beta given directly.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Cloud used to estimate beta when no report or value is given.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DiscreteCommand {
    /// Harmonic-measure exponent of trees conditioned on height n.
    Theorem1 {
        #[command(flatten)]
        offspring: OffspringArg,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Second offspring law compared at the largest n.
        #[arg(long)]
        compare_offspring: Option<String>,
        #[command(flatten)]
        beta: BetaSource,
    },
    /// Law of n C_n against the cloud.
    Conductance {
        #[command(flatten)]
        offspring: OffspringArg,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Reduced-tree level sizes against q_p / q_n.
    Levelset {
        #[command(flatten)]
        offspring: OffspringArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Trees with a fixed number of edges, compared with height conditioning.
    FixedSize {
        #[command(flatten)]
        offspring: OffspringArg,
        /// Number of edges N.
        #[arg(long)]
        edges: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[command(flatten)]
        beta: BetaSource,
    },
}

#[derive(Debug, Subcommand)]
pub enum ContinuumCommand {
    /// Ball-mass exponent of harmonic measure over an ε ladder.
    Dimension {
        #[arg(long)]
        cloud: Option<PathBuf>,
        /// Descending ε values.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

/// Resolved configuration, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub preset: Preset,
    pub out: PathBuf,
    pub params: serde_json::Value,
}

/// How a command ended, before `--expect-fail` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Passed,
    Failed,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Passed
        } else {
            Outcome::Failed
        }
    }
}

fn pick<T>(given: Option<T>, preset: Preset, smoke: T, full: T) -> T {
    given.unwrap_or(match preset {
        Preset::Smoke => smoke,
        Preset::Full => full,
    })
}

fn load_cloud(path: Option<&Path>) -> Result<ParticleCloud> {
    let path = path.ok_or_else(|| {
        Error::Config("this command needs a solved cloud: run `gwh rde solve` and pass `--cloud <file>`".into())
    })?;
    if !path.exists() {
        return Err(Error::Config(format!(
            "cloud file {} does not exist; create it with `gwh rde solve`",
            path.display()
        )));
    }
    ParticleCloud::load(path)
}

fn write_text(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_text(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)
    })
}

struct Runner {
    global: GlobalArgs,
}

impl Runner {
    fn config(&self, command: &str, params: serde_json::Value) -> RunConfig {
        RunConfig {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed: self.global.seed,
            threads: rayon::current_num_threads(),
            preset: self.global.preset,
            out: self.global.out.clone(),
            params,
        }
    }

    fn seed(&self) -> Seed {
        Seed(self.global.seed)
    }

    fn wants(&self, format: Format) -> bool {
        self.global.format.is_none_or(|f| f == format)
    }

    fn save_report(&self, mut report: ExperimentReport, config: &RunConfig) -> Result<ExperimentReport> {
        report.config["run"] = serde_json::to_value(config)?;
        let stem = report.file_stem();
        if self.wants(Format::Json) {
            let path = self.global.out.join(format!("{stem}.json"));
            write_json(&path, &report)?;
            println!("wrote {}", path.display());
        }
        if self.wants(Format::Csv) {
            let path = self.global.out.join(format!("{stem}.csv"));
            write_text(&path, |out| report.write_csv(out))?;
            println!("wrote {}", path.display());
        }
        for c in &report.checks {
            println!(
                "[{}] criterion {}: {} = {:.4} (threshold {})",
                if c.passed { "pass" } else { "FAIL" },
                c.criterion,
                c.name,
                c.value,
                c.threshold
            );
        }
        Ok(report)
    }

    /// Reference β: a saved report, an explicit value, or a fresh
    /// cross-validation on a cloud (solved here at small size if none given).
    fn reference_beta(&self, source: &BetaSource) -> Result<f64> {
        if let Some(path) = &source.beta_report {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let cv: CrossValidation = serde_json::from_value(value.get("cross_validation").cloned().unwrap_or(value))?;
            return Ok(cv.combined());
        }
        if let Some(b) = source.beta {
            return Ok(b);
        }
        let cloud = match &source.cloud {
            Some(path) => ParticleCloud::load(path)?,
            None => {
                log::info!("no beta source given, solving a 10^5 cloud for the reference value");
                solve_fixpoint(100_000, 2e-3, 60, self.seed().derive(0xBE7A))?.cloud
            }
        };
        let cv = cross_validate_methods(&cloud, &Method::ALL, 10_000_000, self.seed().derive(0xBE7B));
        let beta = cv.combined();
        log::info!("reference beta {beta:.4} from cross-validation");
        Ok(beta)
    }

    fn rde_solve(&self, args: &SolveArgs) -> Result<Outcome> {
        let preset = self.global.preset;
        let size = pick(args.particles, preset, 1_000_000, 10_000_000);
        let tol = pick(args.tol, preset, 2e-3, 6e-4);
        if size < 1000 {
            return Err(Error::Config(format!("--particles must be at least 1000, got {size}")));
        }
        let config = self.config("rde solve", json!({ "particles": size, "tol": tol, "max_iters": args.max_iters }));
        let floor = estimate_floor(size, self.seed())?;
        if tol < floor {
            log::warn!("tol {tol:e} is below the estimated Monte Carlo floor {floor:.2e}; expect to run to max_iters");
            eprintln!("warning: tol {tol:e} is below the estimated Monte Carlo floor {floor:.2e}");
        }
        let solution = solve_fixpoint(size, tol, args.max_iters, self.seed())?;
        let cloud_path = args.cloud.clone().unwrap_or_else(|| self.global.out.join("gamma.cloud"));
        if let Some(dir) = cloud_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        solution.cloud.save(&cloud_path)?;
        println!("wrote {}", cloud_path.display());
        let stem = format!("rde_solve_{}", self.global.seed);
        let trace_path = self.global.out.join(format!("{stem}_trace.csv"));
        write_text(&trace_path, |out| {
            writeln!(out, "iteration,d1")?;
            for row in &solution.trace {
                writeln!(out, "{},{}", row.iteration, row.d1)?;
            }
            Ok(())
        })?;
        write_json(
            &self.global.out.join(format!("{stem}.json")),
            &json!({
                "run": config,
                "cloud": cloud_path,
                "converged": solution.converged,
                "iterations": solution.trace.len(),
                "floor_estimate": floor,
                "mean": solution.cloud.mean(),
                "trace": solution.trace,
            }),
        )?;
        println!(
            "{} after {} iterations, E[C] = {:.4}",
            if solution.converged { "converged" } else { "not converged" },
            solution.trace.len(),
            solution.cloud.mean()
        );
        Ok(Outcome::from_pass(solution.converged))
    }

    fn rde_validate(&self, args: &ValidateArgs) -> Result<Outcome> {
        let cloud = ParticleCloud::load(&args.cloud)?;
        let pairs = pick(args.pairs, self.global.preset, 2_000_000, 20_000_000);
        let config = self.config("rde validate", json!({ "cloud": args.cloud, "pairs": pairs }));
        let v = validate_cloud(&cloud, pairs, self.seed());
        let path = self.global.out.join(format!("rde_validate_{}.json", self.global.seed));
        write_json(&path, &json!({ "run": config, "validation": v }))?;
        for c in &v.checks {
            println!("[{}] criterion {}: {} = {:.4}", if c.passed { "pass" } else { "FAIL" }, c.criterion, c.name, c.value);
        }
        println!("wrote {}", path.display());
        if self.global.expect_fail {
            // a negative control is judged on the identity checks alone
            return Ok(Outcome::from_pass(!v.identities_failed()));
        }
        Ok(Outcome::from_pass(v.passed()))
    }

    fn beta(&self, args: &BetaArgs) -> Result<Outcome> {
        let cloud = load_cloud(Some(&args.cloud))?;
        let budget = pick(args.samples, self.global.preset, 10_000_000, 100_000_000);
        let methods: Vec<Method> = match args.method {
            MethodArg::All => Method::ALL.to_vec(),
            MethodArg::Triple => vec![Method::Triple],
            MethodArg::Moment => vec![Method::Moment],
            MethodArg::Shift => vec![Method::Shift],
        };
        let config = self.config("beta", json!({ "cloud": args.cloud, "method": args.method, "samples": budget }));
        let cv = cross_validate_methods(&cloud, &methods, budget, self.seed());
        let stem = format!("beta_{}", self.global.seed);
        if self.wants(Format::Json) {
            let path = self.global.out.join(format!("{stem}.json"));
            write_json(&path, &json!({ "run": config, "cross_validation": cv, "combined": cv.combined() }))?;
            println!("wrote {}", path.display());
        }
        if self.wants(Format::Csv) {
            let path = self.global.out.join(format!("{stem}.csv"));
            write_text(&path, |out| cv.write_csv(out))?;
            println!("wrote {}", path.display());
        }
        for e in &cv.estimates {
            println!("{:>6}: {:.5} ± {:.5}", e.method, e.value, e.std_error);
        }
        for p in &cv.pairs {
            println!("z({}, {}) = {:.2}{}", p.a, p.b, p.z, if p.flagged { "  FLAGGED" } else { "" });
        }
        Ok(Outcome::from_pass(cv.consistent()))
    }

    fn discrete(&self, command: &DiscreteCommand) -> Result<Outcome> {
        let preset = self.global.preset;
        let seed = self.seed();
        let report = match command {
            DiscreteCommand::Theorem1 { offspring, n, trials, delta, compare_offspring, beta } => {
                let dist = OffspringDistribution::parse_spec(&offspring.offspring)?;
                let n = pick(n.clone(), preset, vec![16, 32, 64], vec![50, 100, 200, 400]);
                let trials = pick(*trials, preset, 300, 2000);
                let beta_ref = self.reference_beta(beta)?;
                let config = self.config(
                    "discrete theorem1",
                    json!({ "offspring": offspring.offspring, "n": n, "trials": trials, "delta": delta, "beta": beta_ref, "compare_offspring": compare_offspring }),
                );
                let mut report = run_theorem1(&dist, &n, *delta, trials, beta_ref, seed)?;
                if let Some(other) = compare_offspring {
                    let other_dist = OffspringDistribution::parse_spec(other)?;
                    let last = *n.last().unwrap();
                    let other_report = run_theorem1(&other_dist, &[last], *delta, trials, beta_ref, seed.derive(1))?;
                    let check = compare_exponents(7, &format!("{} vs {other} at n = {last} (|z|)", dist.name()), &report, &other_report, last, 2.0)?;
                    report.checks.push(check);
                    report.cells.extend(other_report.cells.into_iter().map(|mut c| {
                        c.metric = format!("{}:{}", other_dist.name(), c.metric);
                        c
                    }));
                }
                self.save_report(report, &config)?
            }
            DiscreteCommand::Conductance { offspring, n, trials, cloud } => {
                let cloud_data = load_cloud(cloud.as_deref())?;
                let dist = OffspringDistribution::parse_spec(&offspring.offspring)?;
                let n = pick(n.clone(), preset, vec![16, 32, 64], vec![50, 100, 200, 400]);
                let trials = pick(*trials, preset, 1000, 10_000);
                let config = self.config(
                    "discrete conductance",
                    json!({ "offspring": offspring.offspring, "n": n, "trials": trials, "cloud": cloud }),
                );
                let report = run_conductance_convergence(&dist, &n, trials, &cloud_data, seed)?;
                self.save_report(report, &config)?
            }
            DiscreteCommand::Levelset { offspring, n, p, trials } => {
                let dist = OffspringDistribution::parse_spec(&offspring.offspring)?;
                let n = pick(*n, preset, 50, 100);
                let p = pick(p.clone(), preset, vec![10, 25], vec![20, 50]);
                let trials = pick(*trials, preset, 2000, 10_000);
                let config = self.config("discrete levelset", json!({ "offspring": offspring.offspring, "n": n, "p": p, "trials": trials }));
                let report = run_levelset(&dist, n, &p, trials, seed)?;
                self.save_report(report, &config)?
            }
            DiscreteCommand::FixedSize { offspring, edges, n, trials, delta, beta } => {
                let dist = OffspringDistribution::parse_spec(&offspring.offspring)?;
                let edges = pick(*edges, preset, 2500, 40_000);
                let n = pick(*n, preset, 20, 80);
                if n > edges {
                    return Err(Error::Config(format!("n = {n} exceeds the edge count N = {edges}")));
                }
                let trials = pick(*trials, preset, 300, 2000);
                let beta_ref = self.reference_beta(beta)?;
                let config = self.config(
                    "discrete fixed-size",
                    json!({ "offspring": offspring.offspring, "edges": edges, "n": n, "trials": trials, "delta": delta, "beta": beta_ref }),
                );
                let mut report = run_corollary_fixed_size(&dist, edges, n, trials, beta_ref, *delta, seed)?;
                let height = run_theorem1(&dist, &[n], *delta, trials, beta_ref, seed.derive(2))?;
                report.checks.push(compare_exponents(11, &format!("fixed size vs height conditioning at n = {n} (|z|)"), &report, &height, n, 2.0)?);
                report.cells.extend(height.cells.into_iter().map(|mut c| {
                    c.metric = format!("height_conditioned:{}", c.metric);
                    c
                }));
                self.save_report(report, &config)?
            }
        };
        Ok(Outcome::from_pass(report.passed()))
    }

    fn continuum(&self, command: &ContinuumCommand) -> Result<Outcome> {
        let ContinuumCommand::Dimension { cloud, eps, trials } = command;
        let cloud_data = load_cloud(cloud.as_deref())?;
        let preset = self.global.preset;
        let eps = pick(eps.clone(), preset, (6..=10).map(|k| 2f64.powi(-k)).collect(), default_ladder());
        let trials = pick(*trials, preset, 1000, 10_000);
        let config = self.config("continuum dimension", json!({ "cloud": cloud, "eps": eps, "trials": trials }));
        let curve = dimension_curve(&cloud_data, &eps, trials, self.seed())?;
        let stem = format!("continuum_dimension_{}", self.global.seed);
        if self.wants(Format::Json) {
            let path = self.global.out.join(format!("{stem}.json"));
            write_json(&path, &json!({ "run": config, "curve": curve, "extrapolation_model": EXTRAPOLATION_MODEL, "trend": curve.extrapolated.and_then(|e| curve.trend_toward(e.value)) }))?;
            println!("wrote {}", path.display());
        }
        if self.wants(Format::Csv) {
            let path = self.global.out.join(format!("{stem}.csv"));
            write_text(&path, |out| curve.write_csv(out))?;
            println!("wrote {}", path.display());
        }
        for p in &curve.points {
            println!("eps = {:.3e}: {:.4} ± {:.4}", p.eps, p.exponent, p.std_error);
        }
        match curve.extrapolated {
            Some(e) => println!("extrapolated ({EXTRAPOLATION_MODEL}): {:.4} ± {:.4}", e.value, e.std_error),
            None => println!("no extrapolation (fewer than two scales or no trials)"),
        }
        let sane = curve.points.iter().all(|p| p.exponent > 0.0 && p.exponent < 1.0);
        let trend = curve.extrapolated.and_then(|e| curve.trend_toward(e.value));
        if let Some(t) = trend {
            println!("trend toward the extrapolated value: z = {:.2}, p = {:.3} (Mann-Kendall p = {:.3})", t.z, t.p_value, t.mann_kendall_p);
        }
        Ok(Outcome::from_pass(sane && trend.is_none_or(|t| t.p_value < 0.05)))
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let runner = Runner { global: cli.global.clone() };
    let result = match &cli.command {
        Command::Rde(RdeCommand::Solve(args)) => runner.rde_solve(args),
        Command::Rde(RdeCommand::Validate(args)) => runner.rde_validate(args),
        Command::Beta(args) => runner.beta(args),
        Command::Discrete(command) => runner.discrete(command),
        Command::Continuum(command) => runner.continuum(command),
    };
    match result {
        Ok(outcome) => {
            let pass = (outcome == Outcome::Passed) != cli.global.expect_fail;
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("statistical check failed{}", if cli.global.expect_fail { " (expected a failure)" } else { "" });
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Parses `std::env::args` and runs.
pub fn main() -> ExitCode {
    run(Cli::parse())
}
