//! Small statistical helpers shared by the estimators and experiment drivers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.mean += delta * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn summary(&self) -> MeanSe {
        MeanSe {
            mean: self.mean(),
            std_error: self.std_error(),
            count: self.count,
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

impl MeanSe {
    /// z-score of `self.mean - value`. Infinite when the standard error is zero
    /// and the difference is not.
    pub fn z_against(&self, value: f64) -> f64 {
        z_score(self.mean - value, self.std_error)
    }
}

pub fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// z-score for the difference of two independent estimates.
pub fn z_between(a: (f64, f64), b: (f64, f64)) -> f64 {
    z_score(a.0 - b.0, (a.1 * a.1 + b.1 * b.1).sqrt())
}

/// Mean and standard error from per-batch estimates (batch-means method).
pub fn batch_means(batches: &[f64]) -> (f64, f64) {
    let acc: Accumulator = batches.iter().copied().collect();
    (acc.mean(), acc.std_error())
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Linear-interpolated quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// A pass/fail flag tied to an acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn new(criterion: u8, name: impl Into<String>, passed: bool, value: f64, threshold: f64) -> Self {
        Check {
            criterion,
            name: name.into(),
            passed,
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    pub statistic: i64,
    /// One-sided p-value for the requested direction.
    pub p_value: f64,
    pub exact: bool,
}

/// One-sided Mann–Kendall trend test. Exact permutation distribution for up
/// to 8 points, normal approximation with continuity correction beyond.
pub fn mann_kendall(series: &[f64], direction: Trend) -> MannKendall {
    let s = kendall_s(series);
    let oriented = match direction {
        Trend::Increasing => s,
        Trend::Decreasing => -s,
    };
    let n = series.len();
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = 0u64;
        let mut hits = 0u64;
        permute(&mut perm, 0, &mut |p| {
            total += 1;
            let xs: Vec<f64> = p.iter().map(|&i| i as f64).collect();
            if kendall_s(&xs) >= oriented {
                hits += 1;
            }
        });
        MannKendall {
            statistic: s,
            p_value: hits as f64 / total as f64,
            exact: true,
        }
    } else {
        let nf = n as f64;
        let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
        let z = (oriented as f64 - 1.0) / var.sqrt();
        MannKendall {
            statistic: s,
            p_value: 1.0 - normal_cdf(z),
            exact: false,
        }
    }
}

fn kendall_s(xs: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            s += match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}
