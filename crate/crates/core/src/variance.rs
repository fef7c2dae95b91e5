//! Estimators of the null variance `var_0(T_U)` and the exact population
//! variance formulas.
//!
//! Under homogeneity the variance of a single group's statistic is
//!
//! ```text
//! var_0(T_{U_r}) = 2/(n1(n1−1))·tr(Σ²_{π1}) + 2/(n2(n2−1))·tr(Σ²_{π2}) + 4/(n1 n2)·tr(Σ_{π1}Σ_{π2})
//! ```
//!
//! with `Σ_π = diag(π) − ππᵀ`, and `var_0(T_U)` is the mean of these terms
//! over groups. The estimators differ in how the three traces are filled in:
//!
//! | estimator | traces |
//! |-----------|--------|
//! | Test 1 | unbiased `tr(Σ̂²)` per sample, unbiased `tr(Σ̂1 Σ̂2)` |
//! | Test 2 | all three by `tr(Σ̂1 Σ̂2)` |
//! | Test 3 | all three by unbiased `tr(Σ̂²)` of the pooled sample |
//! | Test 4–6 | plug-in `Σ_{π̂}` analogues of Tests 1–3 |
//! | Test 7 | bootstrap variance of `T_U` under pooled resampling |
//!
//! The unbiased estimators (Tests 1–3) can be negative in very small
//! samples; the sign is kept.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{empirical_proportions, pooled_counts, CountVector, GroupPair, GroupedDataset, ProbVector};
use crate::rng::{stream, Phase};
use crate::sampling::sample_multinomial_into;
use crate::ustat::{check_min_total, ustat_counts};
use crate::{Error, Result};

/// Default number of bootstrap samples for Test 7.
pub const DEFAULT_BOOTSTRAP_B: usize = 200;

/// The seven null-variance estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Test1,
    Test2,
    Test3,
    Test4,
    Test5,
    Test6,
    Test7,
}

impl Estimator {
    pub const ALL: [Estimator; 7] = [
        Estimator::Test1,
        Estimator::Test2,
        Estimator::Test3,
        Estimator::Test4,
        Estimator::Test5,
        Estimator::Test6,
        Estimator::Test7,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Estimator::Test1 => "test1",
            Estimator::Test2 => "test2",
            Estimator::Test3 => "test3",
            Estimator::Test4 => "test4",
            Estimator::Test5 => "test5",
            Estimator::Test6 => "test6",
            Estimator::Test7 => "test7",
        }
    }

    /// Unbiased under the null (Tests 1–3).
    pub fn is_unbiased(self) -> bool {
        matches!(self, Estimator::Test1 | Estimator::Test2 | Estimator::Test3)
    }

    /// Check the estimator's sample-size requirement for `(n1, n2)`.
    pub fn check_sizes(self, n1: u64, n2: u64) -> Result<()> {
        check_min_total(n1, 2)?;
        check_min_total(n2, 2)?;
        match self {
            Estimator::Test1 => {
                check_min_total(n1, 4)?;
                check_min_total(n2, 4)
            }
            Estimator::Test3 => check_min_total(n1 + n2, 4),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("test").unwrap_or(&s);
        match s {
            "1" => Ok(Estimator::Test1),
            "2" => Ok(Estimator::Test2),
            "3" => Ok(Estimator::Test3),
            "4" => Ok(Estimator::Test4),
            "5" => Ok(Estimator::Test5),
            "6" => Ok(Estimator::Test6),
            "7" => Ok(Estimator::Test7),
            _ => Err(Error::InvalidSetting(format!("unknown estimator `{s}`"))),
        }
    }
}

/// Where a variance value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    Estimated(Estimator),
    TrueNull,
    TrueFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub source: VarianceSource,
}

/// A symmetric `d × d` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= c);
        self
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.dim).map(|r| r.iter().sum()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

/// `Σ_π = diag(π) − ππᵀ`.
pub fn centered_outer(p: &ProbVector) -> CovMatrix {
    let x = p.probs();
    let d = x.len();
    let mut m = CovMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let diag = if i == j { x[i] } else { 0.0 };
            m.data[i * d + j] = diag - x[i] * x[j];
        }
    }
    m
}

/// Unbiased estimator of `Σ_π` from one sample: `n/(n−1)·Σ_{π̂}`.
pub fn unbiased_sigma(c: &CountVector) -> Result<CovMatrix> {
    check_min_total(c.total(), 2)?;
    let n = c.total() as f64;
    Ok(centered_outer(&empirical_proportions(c)?).scaled(n / (n - 1.0)))
}

/// `tr(a·b)` for symmetric `a`, `b`, as `Σ_ij a_ij b_ij`.
pub fn trace_product(a: &CovMatrix, b: &CovMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// Unbiased estimator of `tr(Σ²_π)` from one sample, summed over ordered
/// category pairs `t ≠ s`:
///
/// ```text
/// ½·(n−2)/(n(n−1)(n−3)) · Σ_{t≠s} n_t n_s {(n_t+n_s−2)/(n−2) − ((n_t−n_s)/(n−2))²}
/// ```
///
/// Requires `n ≥ 4`.
pub fn trace_sigma_sq_unbiased(c: &CountVector) -> Result<f64> {
    check_min_total(c.total(), 4)?;
    Ok(trace_sigma_sq_counts(c.counts(), c.total()))
}

pub(crate) fn trace_sigma_sq_counts(c: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let m = nf - 2.0;
    let mut sum = 0.0;
    for (t, &ct) in c.iter().enumerate() {
        if ct == 0 {
            continue;
        }
        let ct = ct as f64;
        for (s, &cs) in c.iter().enumerate() {
            if s == t || cs == 0 {
                continue;
            }
            let cs = cs as f64;
            let diff = (ct - cs) / m;
            sum += ct * cs * ((ct + cs - 2.0) / m - diff * diff);
        }
    }
    0.5 * m / (nf * (nf - 1.0) * (nf - 3.0)) * sum
}

/// `tr(Σ_x Σ_y) = x·y − Σ x_i y_i (x_i + y_i) + (x·y)²`, the `O(d)` expansion
/// of `Σ_ij (Σ_x)_ij (Σ_y)_ij`.
#[inline]
pub(crate) fn trace_plugin_product(x: &[f64], y: &[f64]) -> f64 {
    let (mut dot, mut cross) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        dot += a * b;
        cross += a * b * (a + b);
    }
    dot - cross + dot * dot
}

/// Same as [`trace_plugin_product`] with proportions given as counts.
#[inline]
fn trace_plugin_product_counts(c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    let (mut dot, mut cross) = (0.0, 0.0);
    for (&a, &b) in c1.iter().zip(c2) {
        let (a, b) = (a as f64 / n1, b as f64 / n2);
        dot += a * b;
        cross += a * b * (a + b);
    }
    dot - cross + dot * dot
}

struct Coefs {
    a1: f64,
    a2: f64,
    cross: f64,
}

impl Coefs {
    fn new(n1: u64, n2: u64) -> Self {
        let (n1, n2) = (n1 as f64, n2 as f64);
        Self {
            a1: 2.0 / (n1 * (n1 - 1.0)),
            a2: 2.0 / (n2 * (n2 - 1.0)),
            cross: 4.0 / (n1 * n2),
        }
    }

    fn sum(&self) -> f64 {
        self.a1 + self.a2 + self.cross
    }
}

/// Per-group null-variance estimate on raw counts; `est` must not be Test 7
/// and sizes must already satisfy [`Estimator::check_sizes`].
pub(crate) fn group_var_counts(est: Estimator, c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
    let k = Coefs::new(n1, n2);
    let (f1, f2) = (n1 as f64, n2 as f64);
    let bessel = f1 / (f1 - 1.0) * f2 / (f2 - 1.0);
    match est {
        Estimator::Test1 => {
            k.a1 * trace_sigma_sq_counts(c1, n1)
                + k.a2 * trace_sigma_sq_counts(c2, n2)
                + k.cross * bessel * trace_plugin_product_counts(c1, n1, c2, n2)
        }
        Estimator::Test2 => k.sum() * bessel * trace_plugin_product_counts(c1, n1, c2, n2),
        Estimator::Test3 => k.sum() * pooled_apply(c1, c2, trace_sigma_sq_counts),
        Estimator::Test4 => {
            k.a1 * trace_plugin_product_counts(c1, n1, c1, n1)
                + k.a2 * trace_plugin_product_counts(c2, n2, c2, n2)
                + k.cross * trace_plugin_product_counts(c1, n1, c2, n2)
        }
        Estimator::Test5 => k.sum() * trace_plugin_product_counts(c1, n1, c2, n2),
        Estimator::Test6 => {
            k.sum() * pooled_apply(c1, c2, |c, n| trace_plugin_product_counts(c, n, c, n))
        }
        Estimator::Test7 => unreachable!("bootstrap variance is not a per-group quantity"),
    }
}

fn pooled_apply(c1: &[u64], c2: &[u64], f: impl Fn(&[u64], u64) -> f64) -> f64 {
    let mut buf = [0u64; 64];
    let d = c1.len();
    if d <= buf.len() {
        let mut n = 0;
        for j in 0..d {
            buf[j] = c1[j] + c2[j];
            n += buf[j];
        }
        f(&buf[..d], n)
    } else {
        let pooled: Vec<u64> = c1.iter().zip(c2).map(|(a, b)| a + b).collect();
        let n = pooled.iter().sum();
        f(&pooled, n)
    }
}

fn group_var(est: Estimator, p: &GroupPair) -> Result<f64> {
    let (a, b) = (p.sample1(), p.sample2());
    est.check_sizes(a.total(), b.total())?;
    Ok(group_var_counts(est, a.counts(), a.total(), b.counts(), b.total()))
}

/// Test 1 per-group estimate of `var_0(T_{U_r})`. Both totals must be ≥ 4.
pub fn var0_group_test1(p: &GroupPair) -> Result<f64> {
    group_var(Estimator::Test1, p)
}

/// Test 2: every trace replaced by the unbiased `tr(Σ̂1 Σ̂2)`.
pub fn var0_group_test2(p: &GroupPair) -> Result<f64> {
    group_var(Estimator::Test2, p)
}

/// Test 3: every trace replaced by the unbiased `tr(Σ̂²)` of the pooled
/// counts. Pooled total must be ≥ 4.
pub fn var0_group_test3(p: &GroupPair) -> Result<f64> {
    group_var(Estimator::Test3, p)
}

/// Plug-in analogues (Tests 4–6) of Tests 1–3 using `Σ_{π̂}` in place of the
/// unbiased pieces.
pub fn var0_group_plugin(p: &GroupPair, variant: Estimator) -> Result<f64> {
    match variant {
        Estimator::Test4 | Estimator::Test5 | Estimator::Test6 => group_var(variant, p),
        other => Err(Error::InvalidSetting(format!("{other} is not a plug-in estimator"))),
    }
}

/// Pooled per-group proportions used for null-respecting resampling.
pub(crate) fn pooled_probs(p: &GroupPair) -> Vec<f64> {
    let pooled = pooled_counts(p);
    let n = pooled.total() as f64;
    pooled.counts().iter().map(|&c| c as f64 / n).collect()
}

/// Bootstrap variance of `T_U` (Test 7). Each replicate redraws every group
/// from `M(n_{ir.}, π̂_r)` with `π̂_r` the pooled proportions of group `r`;
/// the result is the sample variance (divisor `B − 1`) of the replicate
/// statistics. Deterministic in `seed` for any thread count.
pub fn var0_bootstrap(ds: &GroupedDataset, b: usize, seed: u64) -> Result<f64> {
    if b < 2 {
        return Err(Error::InvalidB(b));
    }
    for g in ds.groups() {
        Estimator::Test7
            .check_sizes(g.sample1().total(), g.sample2().total())
            .map_err(|e| e.in_group(g.group_id()))?;
    }
    let plan: Vec<(u64, u64, Vec<f64>)> = ds
        .groups()
        .iter()
        .map(|g| (g.sample1().total(), g.sample2().total(), pooled_probs(g)))
        .collect();
    Ok(bootstrap_variance(&plan, ds.dim(), b, seed))
}

pub(crate) fn bootstrap_variance(plan: &[(u64, u64, Vec<f64>)], d: usize, b: usize, seed: u64) -> f64 {
    let scale = 1.0 / (plan.len() as f64).sqrt();
    let stats: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut x1 = vec![0u64; d];
            let mut x2 = vec![0u64; d];
            let mut sum = 0.0;
            for (r, (n1, n2, probs)) in plan.iter().enumerate() {
                let mut rng = stream(seed, rep as u64, r as u64, Phase::VarianceBootstrap);
                sample_multinomial_into(*n1, probs, &mut rng, &mut x1);
                sample_multinomial_into(*n2, probs, &mut rng, &mut x2);
                sum += ustat_counts(&x1, *n1, &x2, *n2);
            }
            sum * scale
        })
        .collect();
    sample_variance(&stats)
}

pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Options for [`var0_estimate`]; only Test 7 reads them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub b: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            b: DEFAULT_BOOTSTRAP_B,
            seed: 0,
        }
    }
}

/// Dataset-level estimate `(1/k) Σ_r var̂_0(T_{U_r})` for Tests 1–6, or the
/// bootstrap variance for Test 7.
pub fn var0_estimate(ds: &GroupedDataset, est: Estimator, boot: BootstrapOptions) -> Result<VarianceEstimate> {
    let value = match est {
        Estimator::Test7 => var0_bootstrap(ds, boot.b, boot.seed)?,
        _ => {
            let mut sum = 0.0;
            for g in ds.groups() {
                sum += group_var(est, g).map_err(|e| e.in_group(g.group_id()))?;
            }
            sum / ds.k() as f64
        }
    };
    Ok(VarianceEstimate {
        value,
        source: VarianceSource::Estimated(est),
    })
}

/// `tr(Σ²_π)`.
pub fn trace_sigma_sq(p: &ProbVector) -> f64 {
    trace_plugin_product(p.probs(), p.probs())
}

/// Exact `var_0(T_U)` for known per-group null vectors `π_r` and sizes.
pub fn var0_true(pis: &[ProbVector], sizes: &[(u64, u64)]) -> Result<f64> {
    if pis.len() != sizes.len() {
        return Err(Error::DimensionMismatch {
            left: pis.len(),
            right: sizes.len(),
        });
    }
    if pis.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sum = 0.0;
    for (pi, &(n1, n2)) in pis.iter().zip(sizes) {
        check_min_total(n1.min(n2), 2)?;
        sum += Coefs::new(n1, n2).sum() * trace_sigma_sq(pi);
    }
    Ok(sum / pis.len() as f64)
}

/// Exact `var(T_{U_1})` for arbitrary `π1`, `π2`.
pub fn var_true_full(pi1: &ProbVector, pi2: &ProbVector, n1: u64, n2: u64) -> Result<f64> {
    if pi1.dim() != pi2.dim() {
        return Err(Error::DimensionMismatch {
            left: pi1.dim(),
            right: pi2.dim(),
        });
    }
    check_min_total(n1.min(n2), 2)?;
    let (mean1, mean2) = mean_difference_terms(pi1, pi2, n1, n2);
    let k = Coefs::new(n1, n2);
    let (x, y) = (pi1.probs(), pi2.probs());
    Ok(mean1
        + mean2
        + k.a1 * trace_plugin_product(x, x)
        + k.a2 * trace_plugin_product(y, y)
        + k.cross * trace_plugin_product(x, y))
}

/// The two quadratic-form terms `(4/n_i)·δᵀ Σ_{π_i} δ`, `δ = π1 − π2`.
pub fn mean_difference_terms(pi1: &ProbVector, pi2: &ProbVector, n1: u64, n2: u64) -> (f64, f64) {
    let quad = |pi: &[f64], delta: &[f64]| {
        // δᵀ(diag(π) − ππᵀ)δ = Σ π δ² − (π·δ)²
        let a: f64 = pi.iter().zip(delta).map(|(p, d)| p * d * d).sum();
        let b: f64 = pi.iter().zip(delta).map(|(p, d)| p * d).sum();
        a - b * b
    };
    let delta: Vec<f64> = pi1.probs().iter().zip(pi2.probs()).map(|(a, b)| a - b).collect();
    (
        4.0 / n1 as f64 * quad(pi1.probs(), &delta),
        4.0 / n2 as f64 * quad(pi2.probs(), &delta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{compositions, multinomial_pmf};
    use crate::ustat::group_ustat;
    use proptest::prelude::*;

    fn cv(c: &[u64]) -> CountVector {
        CountVector::new(c.to_vec()).unwrap()
    }

    fn pair(a: &[u64], b: &[u64]) -> GroupPair {
        GroupPair::new("g", cv(a), cv(b)).unwrap()
    }

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Full `d×d` product trace, independent of the closed forms above.
    fn trace_matmul(a: &CovMatrix, b: &CovMatrix) -> f64 {
        let d = a.dim();
        (0..d).map(|i| (0..d).map(|j| a.get(i, j) * b.get(j, i)).sum::<f64>()).sum()
    }

    #[test]
    fn centered_outer_examples() {
        assert!(centered_outer(&pv(&[1.0, 0.0])).data.iter().all(|&x| x == 0.0));
        let m = centered_outer(&pv(&[0.5, 0.5]));
        assert_eq!(m.data, vec![0.25, -0.25, -0.25, 0.25]);
        let m = centered_outer(&ProbVector::uniform(5).unwrap());
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 0.16 } else { -0.04 };
                assert!(close(m.get(i, j), want, 1e-15));
            }
        }
        assert!(m.is_symmetric(1e-12));
        assert!(m.row_sums().iter().all(|s| s.abs() < 1e-10));
    }

    #[test]
    fn unbiased_sigma_examples() {
        assert!(unbiased_sigma(&cv(&[6, 0])).unwrap().data.iter().all(|&x| x == 0.0));
        assert_eq!(unbiased_sigma(&cv(&[1, 1])).unwrap().data, vec![0.5, -0.5, -0.5, 0.5]);
        let m = unbiased_sigma(&cv(&[2, 2])).unwrap();
        for (x, want) in m.data.iter().zip([0.25, -0.25, -0.25, 0.25]) {
            assert!(close(*x, 4.0 / 3.0 * want, 1e-15));
        }
        assert!(unbiased_sigma(&cv(&[1, 0])).unwrap_err().is_precondition());
    }

    #[test]
    fn trace_sigma_sq_examples() {
        assert_eq!(trace_sigma_sq_unbiased(&cv(&[7, 0, 0])).unwrap(), 0.0);
        assert!(close(trace_sigma_sq_unbiased(&cv(&[2, 2])).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(close(trace_sigma_sq_unbiased(&cv(&[3, 1])).unwrap(), 0.0, 1e-15));
        assert!(trace_sigma_sq_unbiased(&cv(&[2, 1])).unwrap_err().is_precondition());
    }

    #[test]
    fn ordered_and_unordered_pair_forms_agree() {
        for c in [vec![4u64, 3, 2, 1], vec![10, 0, 5], vec![1, 1, 1, 1, 1, 9]] {
            let n = c.iter().sum::<u64>() as f64;
            let m = n - 2.0;
            let mut unordered = 0.0;
            for t in 0..c.len() {
                for s in (t + 1)..c.len() {
                    let (a, b) = (c[t] as f64, c[s] as f64);
                    unordered += 2.0 * a * b * ((a + b - 2.0) / m - ((a - b) / m).powi(2));
                }
            }
            let unordered = 0.5 * m / (n * (n - 1.0) * (n - 3.0)) * unordered;
            assert!(close(trace_sigma_sq_unbiased(&cv(&c)).unwrap(), unordered, 1e-14));
        }
    }

    #[test]
    fn trace_product_examples() {
        let z = CovMatrix::zeros(2);
        let s = centered_outer(&pv(&[0.5, 0.5]));
        assert_eq!(trace_product(&z, &s).unwrap(), 0.0);
        assert!(close(trace_product(&s, &s).unwrap(), 0.25, 1e-15));
        assert!(trace_product(&s, &CovMatrix::zeros(3)).is_err());
    }

    #[test]
    fn test1_examples() {
        assert_eq!(var0_group_test1(&pair(&[5, 0], &[4, 0])).unwrap(), 0.0);
        assert!(close(var0_group_test1(&pair(&[2, 2], &[2, 2])).unwrap(), 1.0 / 3.0, 1e-14));
        assert!(var0_group_test1(&pair(&[2, 1], &[2, 2])).unwrap_err().is_precondition());
    }

    #[test]
    fn test2_examples() {
        assert_eq!(var0_group_test2(&pair(&[5, 0], &[3, 0])).unwrap(), 0.0);
        let v = var0_group_test2(&pair(&[2, 2], &[2, 2])).unwrap();
        assert!(close(v, (1.0 / 6.0 + 1.0 / 6.0 + 0.25) * 16.0 / 9.0 * 0.25, 1e-14));
        assert!(close(v, 0.259259, 1e-6));
        assert!(close(var0_group_test2(&pair(&[1, 1], &[1, 1])).unwrap(), 3.0, 1e-14));
    }

    #[test]
    fn test3_examples() {
        assert_eq!(var0_group_test3(&pair(&[5, 0], &[3, 0])).unwrap(), 0.0);
        let v = var0_group_test3(&pair(&[2, 2], &[2, 2])).unwrap();
        let want = (1.0 / 6.0 + 1.0 / 6.0 + 0.25) * trace_sigma_sq_unbiased(&cv(&[4, 4])).unwrap();
        assert!(close(v, want, 1e-15));
        // pooled total 4 is enough even though each sample has 2
        assert!(var0_group_test3(&pair(&[1, 1], &[1, 1])).is_ok());
    }

    #[test]
    fn plugin_examples() {
        for v in [Estimator::Test4, Estimator::Test5, Estimator::Test6] {
            assert_eq!(var0_group_plugin(&pair(&[5, 0], &[3, 0]), v).unwrap(), 0.0);
        }
        let v = var0_group_plugin(&pair(&[2, 2], &[2, 2]), Estimator::Test5).unwrap();
        assert!(close(v, 0.145833, 1e-6));
        assert!(var0_group_plugin(&pair(&[2, 2], &[2, 2]), Estimator::Test1).is_err());
    }

    #[test]
    fn plugin_over_unbiased_tends_to_one() {
        let probs = [0.2, 0.3, 0.5];
        let counts: Vec<u64> = probs.iter().map(|p| (p * 1000.0) as u64).collect();
        let p = pair(&counts, &counts);
        let ratio = var0_group_plugin(&p, Estimator::Test4).unwrap() / var0_group_test1(&p).unwrap();
        assert!(close(ratio, 1.0, 0.01), "ratio {ratio}");
    }

    #[test]
    fn closed_form_traces_match_matrices() {
        let c1 = cv(&[3, 5, 0, 2]);
        let c2 = cv(&[1, 1, 4, 4]);
        let s1 = unbiased_sigma(&c1).unwrap();
        let s2 = unbiased_sigma(&c2).unwrap();
        let fast = trace_plugin_product_counts(c1.counts(), 10, c2.counts(), 10) * (10.0 / 9.0) * (10.0 / 9.0);
        assert!(close(trace_product(&s1, &s2).unwrap(), fast, 1e-14));
        assert!(close(trace_matmul(&s1, &s2), fast, 1e-14));
    }

    #[test]
    fn estimator_agreement_for_large_samples() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        for n in [100u64, 1000, 10_000] {
            let counts: Vec<u64> = probs.iter().map(|p| (p * n as f64).round() as u64).collect();
            let p = pair(&counts, &counts);
            let vals: Vec<f64> = Estimator::ALL[..6].iter().map(|&e| group_var(e, &p).unwrap()).collect();
            if n == 10_000 {
                let max = vals.iter().cloned().fold(f64::MIN, f64::max);
                let min = vals.iter().cloned().fold(f64::MAX, f64::min);
                assert!((max - min) / min < 0.05, "{vals:?}");
            }
        }
    }

    #[test]
    fn bootstrap_degenerate_and_deterministic() {
        let ds = GroupedDataset::new(vec![
            GroupPair::new("a", cv(&[5, 0]), cv(&[3, 0])).unwrap(),
            GroupPair::new("b", cv(&[0, 4]), cv(&[0, 6])).unwrap(),
        ])
        .unwrap();
        assert_eq!(var0_bootstrap(&ds, 50, 9).unwrap(), 0.0);
        assert_eq!(var0_bootstrap(&ds, 1, 9).unwrap_err(), Error::InvalidB(1));

        let ds = GroupedDataset::new(vec![
            GroupPair::new("a", cv(&[3, 2, 1]), cv(&[1, 2, 3])).unwrap(),
            GroupPair::new("b", cv(&[2, 2, 2]), cv(&[4, 1, 1])).unwrap(),
        ])
        .unwrap();
        let v1 = var0_bootstrap(&ds, 200, 77).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let v2 = pool.install(|| var0_bootstrap(&ds, 200, 77).unwrap());
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert!(v1 > 0.0);
    }

    #[test]
    fn true_variance_examples() {
        assert_eq!(var0_true(&[pv(&[1.0, 0.0])], &[(4, 4)]).unwrap(), 0.0);
        let half = pv(&[0.5, 0.5]);
        let v = var0_true(&[half.clone()], &[(4, 4)]).unwrap();
        assert!(close(v, 0.25 * (2.0 / 12.0 + 2.0 / 12.0 + 4.0 / 16.0), 1e-15));
        assert!(close(v, 0.1458333, 1e-7));
        let v2 = var0_true(&[half.clone(), half.clone()], &[(4, 4), (4, 4)]).unwrap();
        assert!(close(v, v2, 1e-15));

        let p = pv(&[0.2, 0.3, 0.5]);
        assert!(close(
            var_true_full(&p, &p, 6, 9).unwrap(),
            var0_true(&[p.clone()], &[(6, 9)]).unwrap(),
            1e-15
        ));
        assert_eq!(var_true_full(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0]), 5, 5).unwrap(), 0.0);
    }

    /// Exact variance of `T_{U_1}` by enumerating every outcome pair, for
    /// comparison with the closed-form population variance.
    #[test]
    fn full_variance_matches_enumeration() {
        let (p1, p2) = (pv(&[0.5, 0.5]), pv(&[0.25, 0.75]));
        let (n1, n2) = (10u64, 10u64);
        let (a, b) = (compositions(n1, 2), compositions(n2, 2));
        let (mut m1, mut m2) = (0.0, 0.0);
        for x in &a {
            let px = multinomial_pmf(x, p1.probs());
            for y in &b {
                let w = px * multinomial_pmf(y, p2.probs());
                let t = group_ustat(&pair(x, y)).unwrap();
                m1 += w * t;
                m2 += w * t * t;
            }
        }
        assert!(close(m1, p1.sq_distance(&p2), 1e-12));
        assert!(close(m2 - m1 * m1, var_true_full(&p1, &p2, n1, n2).unwrap(), 1e-12));
    }

    #[test]
    fn unbiasedness_by_enumeration() {
        let grid3 = [[0.2, 0.3, 0.5], [0.1, 0.1, 0.8], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], [0.0, 0.4, 0.6]];
        for n in 4..=6u64 {
            for probs in grid3.iter().map(|p| p.to_vec()).chain([vec![0.3, 0.7], vec![0.9, 0.1]]) {
                let pi = pv(&probs);
                let outcomes = compositions(n, pi.dim());
                let mut e_tr = 0.0;
                let mut e_sigma = CovMatrix::zeros(pi.dim());
                for c in &outcomes {
                    let w = multinomial_pmf(c, &probs);
                    e_tr += w * trace_sigma_sq_unbiased(&cv(c)).unwrap();
                    let s = unbiased_sigma(&cv(c)).unwrap();
                    for (acc, x) in e_sigma.data.iter_mut().zip(&s.data) {
                        *acc += w * x;
                    }
                }
                let truth = centered_outer(&pi);
                assert!(close(e_tr, trace_matmul(&truth, &truth), 1e-10), "n={n} {probs:?}");
                for (a, b) in e_sigma.data.iter().zip(&truth.data) {
                    assert!(close(*a, *b, 1e-10));
                }
            }
        }
    }

    /// Tests 1–3 are unbiased for `var_0(T_{U_r})` under the null.
    #[test]
    fn tests_one_to_three_unbiased_under_null() {
        let probs = [0.5, 0.5];
        let outcomes = compositions(4, 2);
        let truth = var0_true(&[pv(&probs)], &[(4, 4)]).unwrap();
        for est in [Estimator::Test1, Estimator::Test2, Estimator::Test3] {
            let mut e = 0.0;
            for x in &outcomes {
                for y in &outcomes {
                    let w = multinomial_pmf(x, &probs) * multinomial_pmf(y, &probs);
                    e += w * group_var(est, &pair(x, y)).unwrap();
                }
            }
            assert!(close(e, truth, 1e-12), "{est}: {e} vs {truth}");
        }
    }

    fn arb_prob(d: usize) -> impl Strategy<Value = ProbVector> {
        proptest::collection::vec(0.0f64..1.0, d).prop_filter_map("zero mass", |w| {
            let s: f64 = w.iter().sum();
            if s < 1e-6 {
                return None;
            }
            let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
            let rest: f64 = p[1..].iter().sum();
            p[0] = (1.0 - rest).max(0.0);
            ProbVector::new(p).ok()
        })
    }

    proptest! {
        #[test]
        fn trace_sigma_sq_bounded(p in (2usize..12).prop_flat_map(arb_prob)) {
            let t = trace_sigma_sq(&p);
            prop_assert!((0.0..=2.0).contains(&t));
            let m = centered_outer(&p);
            prop_assert!(m.is_symmetric(1e-12));
            prop_assert!(m.row_sums().iter().all(|s| s.abs() < 1e-10));
            prop_assert!(trace_product(&m, &m).unwrap() >= 0.0);
        }

        #[test]
        fn mean_difference_terms_nonnegative(
            (p1, p2) in (2usize..8).prop_flat_map(|d| (arb_prob(d), arb_prob(d))),
            n1 in 2u64..50, n2 in 2u64..50,
        ) {
            let (a, b) = mean_difference_terms(&p1, &p2, n1, n2);
            prop_assert!(a >= -1e-15 && b >= -1e-15);
        }

        /// Ratio bounds of the alternative-variance expressions against the
        /// null-form variance when the trace ratio is at most `M`.
        #[test]
        fn alternative_variance_ratio_bounds(
            (p1, p2) in (2usize..8).prop_flat_map(|d| (arb_prob(d), arb_prob(d))),
            n1 in 2u64..40, n2 in 2u64..40,
        ) {
            let (x, y) = (p1.probs(), p2.probs());
            let (t1, t2, t12) = (trace_plugin_product(x, x), trace_plugin_product(y, y), trace_plugin_product(x, y));
            prop_assume!(t1.min(t2) > 1e-9);
            let m = t1.max(t2) / t1.min(t2);
            let k = Coefs::new(n1, n2);
            let var0 = k.a1 * t1 + k.a2 * t2 + k.cross * t12;
            let var01 = k.sum() * t12;
            let lambda = n1 as f64 / (n1 + n2) as f64;
            let mix = centered_outer(&p1).scaled(lambda);
            let mix2 = centered_outer(&p2).scaled(1.0 - lambda);
            let combined = CovMatrix {
                dim: mix.dim,
                data: mix.data.iter().zip(&mix2.data).map(|(a, b)| a + b).collect(),
            };
            let var02 = k.sum() * trace_product(&combined, &combined).unwrap();
            prop_assert!(var01 >= 0.0 && var01 <= m * var0 * (1.0 + 1e-12));
            prop_assert!(var02 >= 0.0 && var02 <= (m + 1.0) * var0 * (1.0 + 1e-12));
        }
    }
}
