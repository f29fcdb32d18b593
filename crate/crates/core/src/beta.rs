//! Three estimators of the harmonic-measure exponent β from a solved cloud.
//!
//! With `C, C₀, C₁, ...` independent draws from the conductance law γ:
//!
//! * moment: `β = ½ (E[C]² / E[C₀C₁/(C₀+C₁-1)] - 1)`
//! * triple: `β = 2 E[(rs/(r+s+t-1)) log((s+t)/s)] / E[st/(s+t-1)]`
//! * shift: `-β = 2 E[σ log σ κ(G)] / E[|log(1-U)| κ(G)]`, where
//!   `σ = C₁/(C₁+C₂)`, `G = G(U, C₁, C₂)` and `κ(r) = E[rs/(r+s+t-1)]`.
//!
//! The three agree only at the true fixed point, which makes their spread a
//! check on the cloud as well as on the code. Every expectation is a
//! resampling average over the cloud; batch `b` of method `m` draws from its
//! own stream, so estimates do not depend on the thread count.

use std::fmt;
use std::io::Write;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rde::{g, ParticleCloud};
use crate::rng::{task_id, Domain, Seed};
use crate::stats::{z_between, Accumulator};

/// Batches used for ratio standard errors.
pub const BATCHES: usize = 100;

/// Inner pairs per κ evaluation in [`beta_shift`].
pub const DEFAULT_INNER: usize = 64;

/// |z| above which two estimates are flagged as inconsistent.
pub const Z_FLAG: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Triple,
    Moment,
    Shift,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Triple, Method::Moment, Method::Shift];

    fn stream_tag(self) -> u64 {
        match self {
            Method::Triple => 1,
            Method::Moment => 2,
            Method::Shift => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Triple => "triple",
            Method::Moment => "moment",
            Method::Shift => "shift",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (triple, moment, shift)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    /// Resampled cloud values consumed.
    pub sample_count: u64,
}

impl BetaEstimate {
    pub fn z_against(&self, other: &BetaEstimate) -> f64 {
        z_between((self.value, self.std_error), (other.value, other.std_error))
    }
}

/// Splits `count` into [`BATCHES`] near-equal parts.
fn batch_sizes(count: u64) -> Vec<u64> {
    let base = count / BATCHES as u64;
    let extra = count % BATCHES as u64;
    (0..BATCHES as u64).map(|b| base + u64::from(b < extra)).collect()
}

/// Per-batch sums of a numerator and denominator.
fn batched_ratio<F>(method: Method, seed: Seed, draws: u64, tuple: F) -> (f64, f64, Vec<f64>)
where
    F: Fn(&mut dyn RngCore) -> (f64, f64) + Sync,
{
    let sums: Vec<(f64, f64)> = batch_sizes(draws)
        .into_par_iter()
        .enumerate()
        .map(|(b, n)| {
            let mut rng = seed.stream(Domain::Beta, task_id(method.stream_tag(), b as u64));
            let (mut num, mut den) = (0.0, 0.0);
            for _ in 0..n {
                let (a, d) = tuple(&mut rng);
                num += a;
                den += d;
            }
            (num, den)
        })
        .collect();
    let num: f64 = sums.iter().map(|s| s.0).sum();
    let den: f64 = sums.iter().map(|s| s.1).sum();
    let ratios = sums.iter().filter(|s| s.1 != 0.0).map(|s| s.0 / s.1).collect();
    (num, den, ratios)
}

fn batch_std_error(ratios: &[f64]) -> f64 {
    let acc: Accumulator = ratios.iter().copied().collect();
    acc.std_error()
}

/// `κ(r) = E[rs/(r+s+t-1)]` over `pairs` resampled pairs.
pub fn kappa(cloud: &ParticleCloud, r: f64, pairs: usize, seed: Seed) -> f64 {
    let mut rng = seed.derive(r.to_bits()).stream(Domain::Beta, 0);
    kappa_with(cloud, r, pairs, &mut rng)
}

#[inline]
fn kappa_with<R: RngCore + ?Sized>(cloud: &ParticleCloud, r: f64, pairs: usize, rng: &mut R) -> f64 {
    let mut sum = 0.0;
    for _ in 0..pairs {
        let s = cloud.draw(rng);
        let t = cloud.draw(rng);
        sum += r * s / (r + s + t - 1.0);
    }
    sum / pairs as f64
}

/// Moment formula over `sample_count / 2` resampled pairs, with a
/// delta-method standard error.
pub fn beta_moment(cloud: &ParticleCloud, sample_count: u64, seed: Seed) -> BetaEstimate {
    let pairs = (sample_count / 2).max(2);
    // sums of x = (C₀+C₁)/2, y = C₀C₁/(C₀+C₁-1) and their second moments
    let sums: Vec<[f64; 5]> = batch_sizes(pairs)
        .into_par_iter()
        .enumerate()
        .map(|(b, n)| {
            let mut rng = seed.stream(Domain::Beta, task_id(Method::Moment.stream_tag(), b as u64));
            let mut acc = [0.0; 5];
            for _ in 0..n {
                let c0 = cloud.draw(&mut rng);
                let c1 = cloud.draw(&mut rng);
                let x = 0.5 * (c0 + c1);
                let y = c0 * c1 / (c0 + c1 - 1.0);
                acc[0] += x;
                acc[1] += y;
                acc[2] += x * x;
                acc[3] += y * y;
                acc[4] += x * y;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 5];
    for s in &sums {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    let n = pairs as f64;
    let [mx, my, mxx, myy, mxy] = total.map(|v| v / n);
    let value = 0.5 * (mx * mx / my - 1.0);
    // gradient of ½(x²/y - 1)
    let (gx, gy) = (mx / my, -0.5 * mx * mx / (my * my));
    let var = gx * gx * (mxx - mx * mx) + gy * gy * (myy - my * my) + 2.0 * gx * gy * (mxy - mx * my);
    BetaEstimate {
        value,
        std_error: (var.max(0.0) / n).sqrt(),
        method: Method::Moment,
        sample_count: 2 * pairs,
    }
}

/// Triple formula: `sample_count / 5` rounds, each one triple for the
/// numerator and an independent pair for the denominator.
pub fn beta_triple(cloud: &ParticleCloud, sample_count: u64, seed: Seed) -> BetaEstimate {
    let rounds = (sample_count / 5).max(BATCHES as u64);
    let (num, den, ratios) = batched_ratio(Method::Triple, seed, rounds, |rng| {
        let r = cloud.draw(rng);
        let s = cloud.draw(rng);
        let t = cloud.draw(rng);
        let top = 2.0 * r * s / (r + s + t - 1.0) * ((s + t) / s).ln();
        let s2 = cloud.draw(rng);
        let t2 = cloud.draw(rng);
        (top, s2 * t2 / (s2 + t2 - 1.0))
    });
    BetaEstimate {
        value: num / den,
        std_error: batch_std_error(&ratios),
        method: Method::Triple,
        sample_count: 5 * rounds,
    }
}

/// Shift formula with [`DEFAULT_INNER`] inner pairs per weight.
pub fn beta_shift(cloud: &ParticleCloud, sample_count: u64, seed: Seed) -> BetaEstimate {
    beta_shift_with_inner(cloud, sample_count, DEFAULT_INNER, seed)
}

/// Shift formula. Each outer draw `(U, C₁, C₂)` costs `2 + 2·inner` cloud
/// values; the weight `κ̂(G(U, C₁, C₂))` averages `inner` pairs. The
/// numerator uses the symmetrized `σ log σ + (1-σ) log(1-σ)`, which has the
/// same expectation as `2σ log σ` because `G` is symmetric in `C₁, C₂`.
pub fn beta_shift_with_inner(cloud: &ParticleCloud, sample_count: u64, inner: usize, seed: Seed) -> BetaEstimate {
    let per_draw = 2 + 2 * inner as u64;
    let outer = (sample_count / per_draw).max(BATCHES as u64);
    let (num, den, ratios) = batched_ratio(Method::Shift, seed, outer, |rng| {
        let u: f64 = rng.random();
        let c1 = cloud.draw(rng);
        let c2 = cloud.draw(rng);
        let w = kappa_with(cloud, g(u, c1, c2), inner, rng);
        let sigma = c1 / (c1 + c2);
        let entropy = -(sigma * sigma.ln() + (1.0 - sigma) * (1.0 - sigma).ln());
        (w * entropy, w * -(1.0 - u).ln())
    });
    BetaEstimate {
        value: num / den,
        std_error: batch_std_error(&ratios),
        method: Method::Shift,
        sample_count: outer * per_draw,
    }
}

pub fn estimate(method: Method, cloud: &ParticleCloud, sample_count: u64, seed: Seed) -> BetaEstimate {
    match method {
        Method::Triple => beta_triple(cloud, sample_count, seed),
        Method::Moment => beta_moment(cloud, sample_count, seed),
        Method::Shift => beta_shift(cloud, sample_count, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairZ {
    pub a: Method,
    pub b: Method,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub estimates: Vec<BetaEstimate>,
    pub pairs: Vec<PairZ>,
    pub seed: u64,
    pub budget: u64,
}

impl CrossValidation {
    /// No pair disagrees by more than [`Z_FLAG`].
    pub fn consistent(&self) -> bool {
        self.pairs.iter().all(|p| !p.flagged)
    }

    pub fn get(&self, method: Method) -> Option<&BetaEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }

    /// Inverse-variance weighted mean of the estimates.
    pub fn combined(&self) -> f64 {
        let weights: Vec<f64> = self
            .estimates
            .iter()
            .map(|e| if e.std_error > 0.0 { e.std_error.powi(-2) } else { 1.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        self.estimates.iter().zip(&weights).map(|(e, w)| e.value * w).sum::<f64>() / total
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }

    /// `method,value,std_error,samples,seed`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,value,std_error,samples,seed")?;
        for e in &self.estimates {
            writeln!(out, "{},{},{},{},{}", e.method, e.value, e.std_error, e.sample_count, self.seed)?;
        }
        Ok(())
    }
}

/// Runs `methods` with `budget` cloud values each and compares every pair.
pub fn cross_validate_methods(cloud: &ParticleCloud, methods: &[Method], budget: u64, seed: Seed) -> CrossValidation {
    let estimates: Vec<BetaEstimate> = methods.iter().map(|&m| estimate(m, cloud, budget, seed)).collect();
    let mut pairs = Vec::new();
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            let z = estimates[i].z_against(&estimates[j]);
            pairs.push(PairZ {
                a: estimates[i].method,
                b: estimates[j].method,
                z,
                flagged: z.is_nan() || z.abs() > Z_FLAG,
            });
        }
    }
    CrossValidation {
        estimates,
        pairs,
        seed: seed.0,
        budget,
    }
}

pub fn cross_validate(cloud: &ParticleCloud, budget: u64, seed: Seed) -> CrossValidation {
    cross_validate_methods(cloud, &Method::ALL, budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rde::solve_fixpoint;
    use std::f64::consts::LN_2;
    use std::sync::OnceLock;

    fn ones() -> ParticleCloud {
        ParticleCloud::constant(1.0, 1000).unwrap()
    }

    fn solved() -> &'static ParticleCloud {
        static CLOUD: OnceLock<ParticleCloud> = OnceLock::new();
        CLOUD.get_or_init(|| solve_fixpoint(300_000, 1e-3, 40, Seed(11)).unwrap().cloud)
    }

    /// `∫₀¹ f` by composite Simpson on `n` panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (f(a) + f(b) + inner) * h / 3.0
    }

    #[test]
    fn kappa_on_ones_and_monotone() {
        for r in [1.0, 1.5, 3.0] {
            assert!((kappa(&ones(), r, 10, Seed(1)) - r / (r + 1.0)).abs() < 1e-15);
        }
        let cloud = solved();
        let k: Vec<f64> = [1.0, 1.5, 2.0, 4.0].iter().map(|&r| {
            let mut rng = Seed(2).stream(Domain::Beta, 0);
            kappa_with(cloud, r, 20_000, &mut rng)
        }).collect();
        assert!(k.windows(2).all(|w| w[0] < w[1]), "{k:?}");
        assert!(k[0] > 0.0 && k[0] < 1.0);
    }

    #[test]
    fn all_ones_diagnostics() {
        let m = beta_moment(&ones(), 10_000, Seed(1));
        assert!(m.value.abs() < 1e-15);
        let t = beta_triple(&ones(), 10_000, Seed(1));
        assert!((t.value - LN_2).abs() < 1e-12);
        // κ(r) = r/(r+1) with r = 2/(1+U) gives weight 2/(3+U); with
        // 1 - U = e^{-x} the log-weighted denominator becomes smooth
        let num = LN_2 * simpson(|u| 2.0 / (3.0 + u), 0.0, 1.0, 2000);
        let den = simpson(|x| x * (-x).exp() * 2.0 / (4.0 - (-x).exp()), 0.0, 50.0, 20_000);
        let expected = num / den;
        assert!((expected - 0.745).abs() < 2e-3, "{expected}");
        let s = beta_shift(&ones(), 20_000_000, Seed(1));
        assert!((s.value - expected).abs() < 4.0 * s.std_error + 1e-3, "{s:?} vs {expected}");
        let cv = cross_validate(&ones(), 1_000_000, Seed(1));
        assert!(!cv.consistent());
    }

    #[test]
    fn estimators_on_solved_cloud() {
        let cloud = solved();
        let cv = cross_validate(cloud, 20_000_000, Seed(5));
        for e in &cv.estimates {
            assert!(e.std_error > 0.0);
            assert!((e.value - 0.78).abs() < 0.02, "{e:?}");
        }
        // at this cloud size the cloud's own error dominates the resampling
        // error, so the spread is bounded in absolute terms only
        for p in &cv.pairs {
            let (a, b) = (cv.get(p.a).unwrap().value, cv.get(p.b).unwrap().value);
            assert!((a - b).abs() < 0.008, "{cv:?}");
        }
        assert!((cv.combined() - 0.78).abs() < 0.02);
    }

    #[test]
    fn moment_se_scales_and_duplication_invariance() {
        let cloud = solved();
        let a = beta_moment(cloud, 2_000_000, Seed(3));
        let b = beta_moment(cloud, 4_000_000, Seed(3));
        let ratio = a.std_error / b.std_error;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
        // the empirical law of a replicated cloud is the same; exact
        // plug-in on a small cloud shows the invariance directly
        let small = ParticleCloud::new(cloud.samples().iter().step_by(3000).copied().collect(), 0, 0).unwrap();
        let exact = |c: &ParticleCloud| {
            let xs = c.samples();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let mut p = 0.0;
            for &s in xs {
                for &t in xs {
                    p += s * t / (s + t - 1.0);
                }
            }
            p /= (xs.len() * xs.len()) as f64;
            0.5 * (m * m / p - 1.0)
        };
        assert!((exact(&small) - exact(&small.replicated(2))).abs() < 1e-12);
        let est = beta_moment(&small, 20_000_000, Seed(8));
        assert!((est.value - exact(&small)).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn shift_inner_count_bias_audit() {
        let cloud = solved();
        let a = beta_shift_with_inner(cloud, 20_000_000, 64, Seed(4));
        let b = beta_shift_with_inner(cloud, 40_000_000, 128, Seed(4));
        assert!((a.value - b.value).abs() < 2.0 * a.std_error.max(b.std_error), "{a:?} {b:?}");
    }

    #[test]
    fn deterministic_and_reports() {
        let cloud = solved();
        let a = cross_validate(cloud, 200_000, Seed(9));
        let b = cross_validate(cloud, 200_000, Seed(9));
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("method,value,std_error,samples,seed\n"));
        assert_eq!(text.lines().count(), 4);
        let mut json = Vec::new();
        a.write_json(&mut json).unwrap();
        let back: CrossValidation = serde_json::from_slice(&json).unwrap();
        assert_eq!(back.estimates.len(), 3);
        assert_eq!("shift".parse::<Method>().unwrap(), Method::Shift);
    }
}
