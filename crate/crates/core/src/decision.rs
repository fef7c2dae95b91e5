//! Global tests, per-group bootstrap tests and multiple-testing adjustment.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::classical::chi_square_counts;
use crate::counts::GroupedDataset;
use crate::rng::{entropy_seed, stream, Phase};
use crate::sampling::sample_multinomial_into;
use crate::ustat::{aggregate_statistic, check_min_total, ustat_counts};
use crate::variance::{pooled_probs, var0_estimate, BootstrapOptions, Estimator, VarianceEstimate, DEFAULT_BOOTSTRAP_B};
use crate::{Error, Result};

/// Bootstrap replications per group for [`pergroup_bootstrap_pvalues`].
pub const DEFAULT_PERGROUP_B: usize = 1000;

/// Standard normal CDF, `Φ(z) = ½ erfc(−z/√2)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `1 − Φ(z)`, computed without cancellation for large `z`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF.
///
/// Peter J. Acklam's rational approximation (2003): a degree 5/5 rational
/// function in `q = p − ½` on the central region `[0.02425, 0.97575]` and a
/// degree 5/4 rational function in `√(−2 log p)` on each tail. Absolute
/// error is below 1.15e−9 over `(0, 1)`. Returns `±∞` at 1 and 0.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;

    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let tail = |p: f64| {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < LOW {
        tail(p)
    } else if p > 1.0 - LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// `z_{1−α}`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(normal_quantile(1.0 - alpha))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Outcome of standardising a statistic by a variance estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardized {
    pub z: Option<f64>,
    pub p_value: f64,
    pub degenerate: bool,
}

/// One-sided upper-tail p-value of `statistic / √variance`. A non-positive
/// or non-finite variance gives `p = 0` when the statistic is positive and
/// `p = 1` otherwise, flagged as degenerate.
pub fn standardize(statistic: f64, variance: f64) -> Standardized {
    if variance > 0.0 && variance.is_finite() {
        let z = statistic / variance.sqrt();
        Standardized {
            z: Some(z),
            p_value: normal_sf(z),
            degenerate: false,
        }
    } else {
        Standardized {
            z: None,
            p_value: if statistic > 0.0 { 0.0 } else { 1.0 },
            degenerate: true,
        }
    }
}

/// Rejection rule for a precomputed critical value, consistent with
/// [`standardize`] on the degenerate branch.
#[inline]
pub(crate) fn rejects(statistic: f64, variance: f64, z_crit: f64) -> bool {
    if variance > 0.0 && variance.is_finite() {
        statistic / variance.sqrt() >= z_crit
    } else {
        statistic > 0.0
    }
}

/// Result of one global test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub estimator: Estimator,
    /// `T_U`.
    pub statistic: f64,
    pub variance_estimate: VarianceEstimate,
    /// `None` when the variance estimate is degenerate.
    pub z: Option<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub degenerate_variance: bool,
    /// Seed of the Test 7 bootstrap; `None` for the closed-form estimators.
    pub seed: Option<u64>,
}

/// Options for [`run_global_test_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalTestOptions {
    pub alpha: f64,
    /// Bootstrap seed for Test 7; drawn from system entropy when `None`.
    pub seed: Option<u64>,
    /// Bootstrap size for Test 7.
    pub b: usize,
}

impl Default for GlobalTestOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            seed: None,
            b: DEFAULT_BOOTSTRAP_B,
        }
    }
}

/// Test `H0: π_{1r} = π_{2r} for all r` by rejecting when
/// `T_U / √var̂_0(T_U) ≥ z_{1−α}`.
pub fn run_global_test(ds: &GroupedDataset, estimator: Estimator, alpha: f64, seed: Option<u64>) -> Result<TestReport> {
    run_global_test_with(
        ds,
        estimator,
        GlobalTestOptions {
            alpha,
            seed,
            ..Default::default()
        },
    )
}

pub fn run_global_test_with(ds: &GroupedDataset, estimator: Estimator, opts: GlobalTestOptions) -> Result<TestReport> {
    let z_crit = critical_value(opts.alpha)?;
    let statistic = aggregate_statistic(ds)?;
    let seed = match estimator {
        Estimator::Test7 => Some(opts.seed.unwrap_or_else(entropy_seed)),
        _ => None,
    };
    let variance_estimate = var0_estimate(
        ds,
        estimator,
        BootstrapOptions {
            b: opts.b,
            seed: seed.unwrap_or(0),
        },
    )?;
    let s = standardize(statistic, variance_estimate.value);
    let reject = match s.z {
        Some(z) => z >= z_crit,
        None => s.p_value <= opts.alpha,
    };
    Ok(TestReport {
        estimator,
        statistic,
        variance_estimate,
        z: s.z,
        p_value: s.p_value,
        alpha: opts.alpha,
        reject,
        degenerate_variance: s.degenerate,
        seed,
    })
}

/// Pearson chi-square on the table obtained by summing counts over groups,
/// with its `χ²_{d−1}` upper-tail p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn pooled_chi_square(ds: &GroupedDataset) -> PooledChiSquare {
    let (a, b) = ds.collapsed();
    let statistic = chi_square_counts(a.counts(), a.total(), b.counts(), b.total());
    let df = ds.dim() - 1;
    PooledChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    }
}

pub(crate) fn chi_square_sf(x: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).expect("df >= 1").sf(x)
}

/// Multiple-testing adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjustment {
    Bonferroni,
    /// Benjamini–Hochberg step-up.
    Bh,
}

impl fmt::Display for Adjustment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Adjustment::Bonferroni => "bonferroni",
            Adjustment::Bh => "bh",
        })
    }
}

impl FromStr for Adjustment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bonferroni" => Ok(Adjustment::Bonferroni),
            "bh" | "fdr" => Ok(Adjustment::Bh),
            _ => Err(Error::InvalidSetting(format!("unknown adjustment `{s}`"))),
        }
    }
}

fn check_pvalues(p: &[f64]) -> Result<()> {
    match p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(&bad) => Err(Error::OutOfRange(bad)),
        None => Ok(()),
    }
}

/// Adjusted p-values, in input order.
pub fn adjust_pvalues(p: &[f64], method: Adjustment) -> Result<Vec<f64>> {
    check_pvalues(p)?;
    let m = p.len() as f64;
    Ok(match method {
        Adjustment::Bonferroni => p.iter().map(|x| (m * x).min(1.0)).collect(),
        Adjustment::Bh => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            let mut out = vec![0.0; p.len()];
            let mut running = 1.0f64;
            for (rank, &i) in order.iter().enumerate().rev() {
                running = running.min(p[i] * (m / (rank + 1) as f64));
                out[i] = running.min(1.0);
            }
            out
        }
    })
}

/// `min_i p_i ≤ α/k`; the Bonferroni and BH global decisions coincide.
pub fn global_minp_rule(p: &[f64], alpha: f64) -> Result<bool> {
    check_pvalues(p)?;
    check_alpha(alpha)?;
    if p.is_empty() {
        return Ok(false);
    }
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min <= alpha / p.len() as f64)
}

/// Per-group bootstrap test of `H_{0r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerGroupResult {
    pub group_id: String,
    /// `T_{U_r}`.
    pub statistic: f64,
    pub p_raw: f64,
    pub p_bh: f64,
    pub p_bonferroni: f64,
    /// The pooled sample has a single observed category, so every
    /// bootstrap replicate equals the observed statistic.
    pub degenerate: bool,
}

/// Bootstrap p-values for every group: `B` replicates of `T_{U_r}` with both
/// samples redrawn from the pooled proportions, `p = #{T* > T_obs} / B`, or
/// `(#{T* ≥ T_obs} + 1) / (B + 1)` when `smoothed`. Group `r` draws from the
/// stream keyed by `(seed, r)`, so the result does not depend on the thread
/// count.
pub fn pergroup_bootstrap_pvalues(ds: &GroupedDataset, b: usize, seed: u64, smoothed: bool) -> Result<Vec<PerGroupResult>> {
    if b < 1 {
        return Err(Error::InvalidB(b));
    }
    for g in ds.groups() {
        check_min_total(g.sample1().total(), 2).map_err(|e| e.in_group(g.group_id()))?;
        check_min_total(g.sample2().total(), 2).map_err(|e| e.in_group(g.group_id()))?;
    }
    let d = ds.dim();
    let raw: Vec<(f64, f64, bool)> = ds
        .groups()
        .par_iter()
        .enumerate()
        .map(|(r, g)| {
            let (a, b_) = (g.sample1(), g.sample2());
            let (n1, n2) = (a.total(), b_.total());
            let t_obs = ustat_counts(a.counts(), n1, b_.counts(), n2);
            let probs = pooled_probs(g);
            let degenerate = probs.iter().filter(|&&p| p > 0.0).count() <= 1;
            let (gt, ge) = group_bootstrap_counts(t_obs, n1, n2, &probs, d, b, seed, r as u64);
            let p = if smoothed {
                (ge + 1) as f64 / (b + 1) as f64
            } else {
                gt as f64 / b as f64
            };
            (t_obs, p, degenerate)
        })
        .collect();
    let p: Vec<f64> = raw.iter().map(|r| r.1).collect();
    let bh = adjust_pvalues(&p, Adjustment::Bh)?;
    let bonf = adjust_pvalues(&p, Adjustment::Bonferroni)?;
    Ok(ds
        .groups()
        .iter()
        .zip(raw)
        .enumerate()
        .map(|(i, (g, (statistic, p_raw, degenerate)))| PerGroupResult {
            group_id: g.group_id().to_string(),
            statistic,
            p_raw,
            p_bh: bh[i],
            p_bonferroni: bonf[i],
            degenerate,
        })
        .collect())
}

/// Counts of bootstrap replicates strictly above and at-or-above `t_obs`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn group_bootstrap_counts(
    t_obs: f64,
    n1: u64,
    n2: u64,
    probs: &[f64],
    d: usize,
    b: usize,
    seed: u64,
    group: u64,
) -> (usize, usize) {
    let mut rng = stream(seed, 0, group, Phase::GroupBootstrap);
    let (mut x1, mut x2) = (vec![0u64; d], vec![0u64; d]);
    let (mut gt, mut ge) = (0, 0);
    for _ in 0..b {
        sample_multinomial_into(n1, probs, &mut rng, &mut x1);
        sample_multinomial_into(n2, probs, &mut rng, &mut x2);
        let t = ustat_counts(&x1, n1, &x2, n2);
        if t > t_obs {
            gt += 1;
        }
        if t >= t_obs {
            ge += 1;
        }
    }
    (gt, ge)
}

/// Global min-p decision over per-group results, leaving out degenerate
/// groups. `k` in `α/k` counts the groups that take part.
pub fn pergroup_global_decision(results: &[PerGroupResult], alpha: f64) -> Result<bool> {
    let p: Vec<f64> = results.iter().filter(|r| !r.degenerate).map(|r| r.p_raw).collect();
    global_minp_rule(&p, alpha)
}
