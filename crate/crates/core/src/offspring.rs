//! Critical offspring laws, their generating functions and survival
//! probabilities `q_n = P(height >= n)`.

use std::fmt;
use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Poisson weights below this are dropped and the table renormalized.
pub const POISSON_CUTOFF: f64 = 1e-16;

const INPUT_NORMALIZATION_TOL: f64 = 1e-9;
const CRITICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OffspringKind {
    /// `θ(k) = 2^{-k-1}`.
    Geometric,
    /// Mean-one Poisson, truncated at [`POISSON_CUTOFF`].
    Poisson,
    /// `θ(0) = 1 - 1/p`, `θ(p) = 1/p`.
    StrictPary { p: usize },
    /// Binomial(p, 1/p) on `{0, ..., p}`.
    Pary { p: usize },
    Custom,
}

#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    kind: OffspringKind,
    pmf: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
    variance: f64,
    truncated_tail: f64,
}

impl OffspringDistribution {
    pub fn geometric() -> Self {
        // Stored table is only used for pmf lookups; pgf and sampling are exact.
        let mut pmf = Vec::new();
        let mut w = 0.5;
        while w >= POISSON_CUTOFF {
            pmf.push(w);
            w *= 0.5;
        }
        let mut dist = Self::from_table(OffspringKind::Geometric, pmf);
        dist.mean = 1.0;
        dist.variance = 2.0;
        dist.truncated_tail = 0.0;
        dist
    }

    pub fn poisson() -> Self {
        let e = (-1.0f64).exp();
        let mut pmf = vec![e];
        let mut k = 1.0;
        loop {
            let next = pmf.last().unwrap() / k;
            if next < POISSON_CUTOFF {
                break;
            }
            pmf.push(next);
            k += 1.0;
        }
        let total: f64 = pmf.iter().sum();
        let tail = 1.0 - total;
        log::debug!(
            "poisson(1) truncated at k = {}, dropped tail mass {tail:.3e}",
            pmf.len() - 1
        );
        pmf.iter_mut().for_each(|p| *p /= total);
        let mut dist = Self::from_table(OffspringKind::Poisson, pmf);
        dist.truncated_tail = tail;
        dist
    }

    pub fn binary() -> Self {
        Self::strict_pary(2).expect("p = 2 is valid")
    }

    pub fn strict_pary(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Distribution(format!("strict p-ary needs p >= 2, got {p}")));
        }
        let mut pmf = vec![0.0; p + 1];
        pmf[0] = 1.0 - 1.0 / p as f64;
        pmf[p] = 1.0 / p as f64;
        Ok(Self::from_table(OffspringKind::StrictPary { p }, pmf))
    }

    pub fn pary(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Distribution(format!("p-ary needs p >= 2, got {p}")));
        }
        let prob = 1.0 / p as f64;
        let pmf = (0..=p)
            .map(|k| binomial(p, k) * prob.powi(k as i32) * (1.0 - prob).powi((p - k) as i32))
            .collect();
        Ok(Self::from_table(OffspringKind::Pary { p }, pmf))
    }

    /// Finitely supported law given as `(k, θ(k))` pairs. Only normalization is
    /// enforced here; see [`Self::ensure_critical`].
    pub fn custom(pairs: &[(usize, f64)]) -> Result<Self> {
        let max_k = pairs
            .iter()
            .map(|&(k, _)| k)
            .max()
            .ok_or_else(|| Error::Distribution("empty pmf".into()))?;
        let mut pmf = vec![0.0; max_k + 1];
        for &(k, w) in pairs {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Distribution(format!("weight for k = {k} is {w}")));
            }
            pmf[k] += w;
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("weights sum to {total}, not 1")));
        }
        pmf.iter_mut().for_each(|p| *p /= total);
        debug_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
            pmf.pop();
        }
        Ok(Self::from_table(OffspringKind::Custom, pmf))
    }

    /// Reads a two-column `k value` text file. Blank lines and `#` comments are
    /// skipped.
    pub fn from_pmf_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, msg: &str| Error::Format {
            path: path.to_path_buf(),
            reason: format!("line {line}: {msg}"),
        };
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let (Some(k), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(bad(i + 1, "expected two columns `k value`"));
            };
            let k: usize = k.parse().map_err(|_| bad(i + 1, "k is not a nonnegative integer"))?;
            let v: f64 = v.parse().map_err(|_| bad(i + 1, "value is not a number"))?;
            pairs.push((k, v));
        }
        Self::custom(&pairs)
    }

    /// Parses the command-line names `geometric`, `poisson`, `binary`,
    /// `pary:<p>`, `strict-pary:<p>` and `custom:<path>`. The result is
    /// checked for criticality.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let p_arg = |rest: &str| -> Result<usize> {
            rest.parse()
                .map_err(|_| Error::Distribution(format!("bad p in `{spec}`")))
        };
        let dist = match spec.split_once(':') {
            None => match spec {
                "geometric" => Self::geometric(),
                "poisson" => Self::poisson(),
                "binary" => Self::binary(),
                _ => return Err(Error::Distribution(format!("unknown offspring law `{spec}`"))),
            },
            Some(("pary", rest)) => Self::pary(p_arg(rest)?)?,
            Some(("strict-pary", rest)) => Self::strict_pary(p_arg(rest)?)?,
            Some(("custom", path)) => Self::from_pmf_file(path)?,
            Some(_) => return Err(Error::Distribution(format!("unknown offspring law `{spec}`"))),
        };
        dist.ensure_critical()?;
        Ok(dist)
    }

    fn from_table(kind: OffspringKind, pmf: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mean = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>();
        let second = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum::<f64>();
        Self {
            kind,
            pmf,
            cumulative,
            mean,
            variance: second - mean * mean,
            truncated_tail: 0.0,
        }
    }

    /// Checks mean one and positive variance.
    pub fn ensure_critical(&self) -> Result<()> {
        if (self.mean - 1.0).abs() > CRITICALITY_TOL {
            return Err(Error::Distribution(format!("mean is {}, not 1", self.mean)));
        }
        if self.variance <= 0.0 {
            return Err(Error::Distribution("variance must be positive".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> &OffspringKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// σ².
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Probability mass dropped when the table was truncated (Poisson only).
    pub fn truncated_tail(&self) -> f64 {
        self.truncated_tail
    }

    pub fn pmf(&self, k: usize) -> f64 {
        match self.kind {
            OffspringKind::Geometric => 0.5f64.powi(k as i32 + 1),
            _ => self.pmf.get(k).copied().unwrap_or(0.0),
        }
    }

    /// Largest k with stored mass (the table support for truncated laws).
    pub fn support_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `G(s) = Σ θ(k) s^k` for `s` in `[0, 1]`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain {
                name: "s",
                value: s,
                expected: "[0, 1]",
            });
        }
        Ok(match self.kind {
            OffspringKind::Geometric => 1.0 / (2.0 - s),
            _ => self.pmf.iter().rev().fold(0.0, |acc, p| acc * s + p),
        })
    }

    /// `1 - G(1 - q)`, evaluated without cancellation for small `q`.
    fn survival_step(&self, q: f64) -> f64 {
        match self.kind {
            OffspringKind::Geometric => q / (1.0 + q),
            OffspringKind::Poisson if self.truncated_tail == 0.0 => -(-q).exp_m1(),
            _ => {
                let log_keep = (-q).ln_1p();
                self.pmf
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, p)| p * -(k as f64 * log_keep).exp_m1())
                    .sum()
            }
        }
    }

    /// `q_n = 1 - G^{∘n}(0)`.
    pub fn survival_prob(&self, n: usize) -> f64 {
        (0..n).fold(1.0, |q, _| self.survival_step(q))
    }

    /// `[q_0, q_1, ..., q_n]`.
    pub fn survival_probs(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut q = 1.0;
        out.push(q);
        for _ in 0..n {
            q = self.survival_step(q);
            out.push(q);
        }
        out
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        match self.kind {
            OffspringKind::Geometric => loop {
                let bits = rng.next_u64();
                if bits != 0 {
                    break bits.trailing_zeros() as usize;
                }
            },
            _ => {
                let u: f64 = rng.random();
                self.cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(self.cumulative.len() - 1)
            }
        }
    }
}

impl fmt::Display for OffspringDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OffspringKind::Geometric => write!(f, "geometric"),
            OffspringKind::Poisson => write!(f, "poisson"),
            OffspringKind::StrictPary { p: 2 } => write!(f, "binary"),
            OffspringKind::StrictPary { p } => write!(f, "strict-pary:{p}"),
            OffspringKind::Pary { p } => write!(f, "pary:{p}"),
            OffspringKind::Custom => write!(f, "custom"),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
