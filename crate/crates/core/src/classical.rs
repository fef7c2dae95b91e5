//! Classical baselines: per-group chi-square and likelihood-ratio statistics
//! and their large-`k` aggregates.
//!
//! `W_k` centres and scales the summed chi-square statistics with the
//! large-sample moments `E_0(T_r) = d − 1`, `var_0(T_r) = 2(d − 1)`; `W_k′`
//! uses the exact finite-sample null moments instead, which requires knowing
//! the true `π_r` and so is only usable in simulations. `V_k` and `V_k′` are
//! the same constructions on `−2 log λ_r`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counts::{GroupPair, GroupedDataset, ProbVector};
use crate::rng::{stream, Phase};
use crate::sampling::{composition_count, compositions, multinomial_pmf, sample_multinomial_into};
use crate::{Error, Result};

/// Largest outcome-pair count enumerated exactly.
pub const EXACT_OUTCOME_LIMIT: f64 = 1e7;

/// Monte Carlo replicate count used when exact enumeration is infeasible.
pub const DEFAULT_MOMENT_REPS: usize = 100_000;

/// Null mean and variance of a per-group statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub variance: f64,
}

/// Which per-group classical statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupStatistic {
    ChiSquare,
    Lrt,
}

impl GroupStatistic {
    pub(crate) fn eval(self, c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
        match self {
            GroupStatistic::ChiSquare => chi_square_counts(c1, n1, c2, n2),
            GroupStatistic::Lrt => lrt_counts(c1, n1, c2, n2),
        }
    }
}

/// How [`null_moments`] obtains the moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Enumerate every outcome pair; fails beyond [`EXACT_OUTCOME_LIMIT`].
    Exact,
    MonteCarlo { reps: usize, seed: u64 },
    /// Exact when feasible, otherwise Monte Carlo with the given settings.
    Auto { reps: usize, seed: u64 },
}

/// Which path [`null_moments`] actually took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentPath {
    Exact,
    MonteCarlo { reps: usize },
}

impl FromStr for GroupStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" | "chisquare" | "chi-square" => Ok(GroupStatistic::ChiSquare),
            "lrt" => Ok(GroupStatistic::Lrt),
            _ => Err(Error::InvalidSetting(format!("unknown statistic `{s}`"))),
        }
    }
}

/// Pearson chi-square on a `2 × d` table. Cells whose pooled count is zero
/// contribute zero.
pub(crate) fn chi_square_counts(c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let mut q = 0.0;
    for (&a, &b) in c1.iter().zip(c2) {
        let pooled = a + b;
        if pooled == 0 {
            continue;
        }
        let diff = a as f64 / f1 - b as f64 / f2;
        q += diff * diff / (pooled as f64 / n);
    }
    f1 * f2 / n * q
}

/// `−2 log λ_r = 2 Σ_j [n_1j log(π̂_1j/π̂_j) + n_2j log(π̂_2j/π̂_j)]` with
/// `0·log 0 = 0`.
pub(crate) fn lrt_counts(c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
    let (f1, f2) = (n1 as f64, n2 as f64);
    let n = f1 + f2;
    let mut s = 0.0;
    for (&a, &b) in c1.iter().zip(c2) {
        let pooled = (a + b) as f64 / n;
        if a > 0 {
            let a = a as f64;
            s += a * (a / f1 / pooled).ln();
        }
        if b > 0 {
            let b = b as f64;
            s += b * (b / f2 / pooled).ln();
        }
    }
    (2.0 * s).max(0.0)
}

fn check_pair(p: &GroupPair) -> Result<()> {
    if p.sample1().total() == 0 || p.sample2().total() == 0 {
        Err(Error::ZeroTotal)
    } else {
        Ok(())
    }
}

/// Chi-square statistic `T_r` of one group.
pub fn chi_square_group(p: &GroupPair) -> Result<f64> {
    check_pair(p)?;
    let (a, b) = (p.sample1(), p.sample2());
    Ok(chi_square_counts(a.counts(), a.total(), b.counts(), b.total()))
}

/// `−2 log λ_r` of one group.
pub fn lrt_group(p: &GroupPair) -> Result<f64> {
    check_pair(p)?;
    let (a, b) = (p.sample1(), p.sample2());
    Ok(lrt_counts(a.counts(), a.total(), b.counts(), b.total()))
}

fn per_group(ds: &GroupedDataset, stat: GroupStatistic) -> Vec<f64> {
    ds.groups()
        .iter()
        .map(|g| {
            let (a, b) = (g.sample1(), g.sample2());
            stat.eval(a.counts(), a.total(), b.counts(), b.total())
        })
        .collect()
}

/// Union–intersection statistic `Σ_r T_r`.
pub fn uit_statistic(ds: &GroupedDataset) -> Result<f64> {
    Ok(per_group(ds, GroupStatistic::ChiSquare).iter().sum())
}

/// `Σ_r (T_r − (d − 1)) / √(2(d − 1)k)` on already computed statistics.
pub fn standardize_asymptotic(stats: &[f64], d: usize) -> f64 {
    let df = (d - 1) as f64;
    let k = stats.len() as f64;
    stats.iter().map(|t| t - df).sum::<f64>() / (k.sqrt() * (2.0 * df).sqrt())
}

/// `Σ_r (T_r − E_0 T_r) / √(Σ_r var_0 T_r)`.
pub fn standardize_with_moments(stats: &[f64], moments: &[MomentPair]) -> Result<f64> {
    if stats.len() != moments.len() {
        return Err(Error::DimensionMismatch {
            left: stats.len(),
            right: moments.len(),
        });
    }
    let centred: f64 = stats.iter().zip(moments).map(|(t, m)| t - m.mean).sum();
    let var: f64 = moments.iter().map(|m| m.variance).sum();
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::ZeroVariance);
    }
    Ok(centred / var.sqrt())
}

/// `W_k` with the asymptotic chi-square moments.
pub fn wk_statistic(ds: &GroupedDataset) -> Result<f64> {
    Ok(standardize_asymptotic(&per_group(ds, GroupStatistic::ChiSquare), ds.dim()))
}

/// `W_k′` with supplied per-group null moments.
pub fn wk_prime(ds: &GroupedDataset, moments: &[MomentPair]) -> Result<f64> {
    standardize_with_moments(&per_group(ds, GroupStatistic::ChiSquare), moments)
}

/// `V_k`: `W_k` built on the LRT statistics.
pub fn vk_statistic(ds: &GroupedDataset) -> Result<f64> {
    Ok(standardize_asymptotic(&per_group(ds, GroupStatistic::Lrt), ds.dim()))
}

/// `V_k′`: `W_k′` built on the LRT statistics.
pub fn vk_prime(ds: &GroupedDataset, moments: &[MomentPair]) -> Result<f64> {
    standardize_with_moments(&per_group(ds, GroupStatistic::Lrt), moments)
}

/// Null mean and variance of `stat` when both samples are `M(n_i, π)`.
pub fn null_moments(
    stat: GroupStatistic,
    pi: &ProbVector,
    n1: u64,
    n2: u64,
    method: MomentMethod,
) -> Result<(MomentPair, MomentPath)> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::ZeroTotal);
    }
    let d = pi.dim();
    let outcomes = composition_count(n1, d) * composition_count(n2, d);
    match method {
        MomentMethod::Exact => exact_moments(stat, pi, n1, n2, outcomes).map(|m| (m, MomentPath::Exact)),
        MomentMethod::MonteCarlo { reps, seed } => {
            mc_moments(stat, pi, n1, n2, reps, seed).map(|m| (m, MomentPath::MonteCarlo { reps }))
        }
        MomentMethod::Auto { reps, seed } => {
            if outcomes <= EXACT_OUTCOME_LIMIT {
                exact_moments(stat, pi, n1, n2, outcomes).map(|m| (m, MomentPath::Exact))
            } else {
                mc_moments(stat, pi, n1, n2, reps, seed).map(|m| (m, MomentPath::MonteCarlo { reps }))
            }
        }
    }
}

/// [`null_moments`] for the chi-square statistic.
pub fn chi_square_moments_oracle(pi: &ProbVector, n1: u64, n2: u64, method: MomentMethod) -> Result<MomentPair> {
    null_moments(GroupStatistic::ChiSquare, pi, n1, n2, method).map(|(m, _)| m)
}

fn support(n: u64, pi: &ProbVector) -> Vec<(Vec<u64>, f64)> {
    compositions(n, pi.dim())
        .into_iter()
        .map(|c| {
            let w = multinomial_pmf(&c, pi.probs());
            (c, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

fn exact_moments(stat: GroupStatistic, pi: &ProbVector, n1: u64, n2: u64, outcomes: f64) -> Result<MomentPair> {
    if outcomes > EXACT_OUTCOME_LIMIT {
        return Err(Error::TooManyOutcomes {
            outcomes,
            limit: EXACT_OUTCOME_LIMIT,
        });
    }
    let (s1, s2) = (support(n1, pi), support(n2, pi));
    let (mut m1, mut m2) = (0.0, 0.0);
    for (x, wx) in &s1 {
        let (mut a, mut b) = (0.0, 0.0);
        for (y, wy) in &s2 {
            let t = stat.eval(x, n1, y, n2);
            a += wy * t;
            b += wy * t * t;
        }
        m1 += wx * a;
        m2 += wx * b;
    }
    Ok(MomentPair {
        mean: m1,
        variance: (m2 - m1 * m1).max(0.0),
    })
}

fn mc_moments(stat: GroupStatistic, pi: &ProbVector, n1: u64, n2: u64, reps: usize, seed: u64) -> Result<MomentPair> {
    if reps < 2 {
        return Err(Error::InvalidReps(reps));
    }
    use rayon::prelude::*;
    let d = pi.dim();
    const CHUNK: usize = 4096;
    let chunks = reps.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let (mut x, mut y) = (vec![0u64; d], vec![0u64; d]);
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(reps);
            (lo..hi)
                .map(|i| {
                    let mut rng = stream(seed, i as u64, 0, Phase::Moments);
                    sample_multinomial_into(n1, pi.probs(), &mut rng, &mut x);
                    sample_multinomial_into(n2, pi.probs(), &mut rng, &mut y);
                    stat.eval(&x, n1, &y, n2)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / reps as f64;
    Ok(MomentPair {
        mean,
        variance: crate::variance::sample_variance(&values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::CountVector;
    use proptest::prelude::*;

    fn pair(a: &[u64], b: &[u64]) -> GroupPair {
        GroupPair::new(
            "g",
            CountVector::new(a.to_vec()).unwrap(),
            CountVector::new(b.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn dataset(pairs: &[(&[u64], &[u64])]) -> GroupedDataset {
        GroupedDataset::new(
            pairs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    GroupPair::new(
                        format!("g{i}"),
                        CountVector::new(a.to_vec()).unwrap(),
                        CountVector::new(b.to_vec()).unwrap(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_group(&pair(&[2, 2], &[2, 2])).unwrap(), 0.0);
        assert!((chi_square_group(&pair(&[3, 1], &[1, 3])).unwrap() - 2.0).abs() < 1e-12);
        assert!((chi_square_group(&pair(&[4, 0], &[0, 4])).unwrap() - 8.0).abs() < 1e-12);
        // an empty pooled cell is skipped
        assert!((chi_square_group(&pair(&[3, 1, 0], &[1, 3, 0])).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uit_and_wk() {
        let same = dataset(&[(&[2, 2], &[2, 2]), (&[1, 3], &[1, 3])]);
        assert_eq!(uit_statistic(&same).unwrap(), 0.0);
        let two = dataset(&[(&[3, 1], &[1, 3]), (&[4, 0], &[0, 4])]);
        assert!((uit_statistic(&two).unwrap() - 10.0).abs() < 1e-12);
        let one = dataset(&[(&[3, 1], &[1, 3])]);
        assert_eq!(uit_statistic(&one).unwrap(), chi_square_group(&pair(&[3, 1], &[1, 3])).unwrap());
        assert!((wk_statistic(&one).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(standardize_asymptotic(&[4.0, 4.0, 4.0], 5), 0.0);
    }

    #[test]
    fn wk_prime_examples() {
        let one = dataset(&[(&[3, 1], &[1, 3])]);
        let m = MomentPair { mean: 1.0, variance: 2.0 };
        assert!((wk_prime(&one, &[m]).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let centred = MomentPair { mean: 2.0, variance: 2.0 };
        assert_eq!(wk_prime(&one, &[centred]).unwrap(), 0.0);
        let zero = MomentPair { mean: 2.0, variance: 0.0 };
        assert_eq!(wk_prime(&one, &[zero]).unwrap_err(), Error::ZeroVariance);
    }

    #[test]
    fn lrt_examples() {
        assert_eq!(lrt_group(&pair(&[2, 2], &[2, 2])).unwrap(), 0.0);
        let v = lrt_group(&pair(&[4, 0], &[0, 4])).unwrap();
        assert!((v - 16.0 * 2f64.ln()).abs() < 1e-12);
        assert!((v - 11.0904).abs() < 1e-4);
        // direct evaluation: pooled (0.5, 0.5), samples (0.75, 0.25) / (0.25, 0.75)
        let direct = -2.0 * (0.5f64.powi(8) / (0.75f64.powi(3) * 0.25 * 0.25 * 0.75f64.powi(3))).ln();
        assert!((lrt_group(&pair(&[3, 1], &[1, 3])).unwrap() - direct).abs() < 1e-12);
        assert!(direct > 0.0);
    }

    #[test]
    fn vk_centering_when_lambda_is_one() {
        let ds = dataset(&[(&[2u64, 2, 2][..], &[1u64, 1, 1][..]); 4]);
        let k = 4f64;
        let d = 3f64;
        let want = -k.sqrt() * (d - 1.0) / (2.0 * (d - 1.0)).sqrt();
        assert!((vk_statistic(&ds).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn degenerate_moments() {
        let e1 = ProbVector::new(vec![1.0, 0.0]).unwrap();
        for stat in [GroupStatistic::ChiSquare, GroupStatistic::Lrt] {
            let (m, path) = null_moments(stat, &e1, 5, 7, MomentMethod::Exact).unwrap();
            assert_eq!((m.mean, m.variance, path), (0.0, 0.0, MomentPath::Exact));
        }
    }

    /// π = (½, ½), n1 = n2 = 2: outcome x ∈ {0,1,2} with weights (¼, ½, ¼)
    /// for each sample, chi-square by hand for every pair.
    #[test]
    fn exact_moments_small_case() {
        let pi = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let w = [0.25, 0.5, 0.25];
        let (mut m1, mut m2) = (0.0, 0.0);
        for x in 0..3u64 {
            for y in 0..3u64 {
                let t = chi_square_counts(&[x, 2 - x], 2, &[y, 2 - y], 2);
                m1 += w[x as usize] * w[y as usize] * t;
                m2 += w[x as usize] * w[y as usize] * t * t;
            }
        }
        let m = chi_square_moments_oracle(&pi, 2, 2, MomentMethod::Exact).unwrap();
        assert!((m.mean - m1).abs() < 1e-14);
        assert!((m.variance - (m2 - m1 * m1)).abs() < 1e-14);
        // x = y gives 0, |x−y| = 1 gives 4/3, |x−y| = 2 gives 4.
        assert!((m.mean - (0.5 * 4.0 / 3.0 + 0.125 * 4.0)).abs() < 1e-14);
    }

    #[test]
    fn exact_and_monte_carlo_agree() {
        let pi = ProbVector::uniform(3).unwrap();
        let exact = chi_square_moments_oracle(&pi, 5, 8, MomentMethod::Exact).unwrap();
        let reps = 200_000;
        let mc = chi_square_moments_oracle(&pi, 5, 8, MomentMethod::MonteCarlo { reps, seed: 3 }).unwrap();
        let se = (exact.variance / reps as f64).sqrt();
        assert!((mc.mean - exact.mean).abs() < 3.0 * se, "{mc:?} vs {exact:?}");
    }

    #[test]
    fn exact_limit_enforced() {
        let pi = ProbVector::uniform(10).unwrap();
        assert!(matches!(
            null_moments(GroupStatistic::ChiSquare, &pi, 30, 30, MomentMethod::Exact),
            Err(Error::TooManyOutcomes { .. })
        ));
        let (_, path) = null_moments(
            GroupStatistic::ChiSquare,
            &pi,
            30,
            30,
            MomentMethod::Auto { reps: 100, seed: 1 },
        )
        .unwrap();
        assert_eq!(path, MomentPath::MonteCarlo { reps: 100 });
        assert_eq!(
            null_moments(GroupStatistic::Lrt, &pi, 3, 3, MomentMethod::MonteCarlo { reps: 1, seed: 1 }).unwrap_err(),
            Error::InvalidReps(1)
        );
    }

    #[test]
    fn chi_square_and_lrt_close_for_large_samples() {
        let pi = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let reps = 10_000u64;
        let n = 10_000u64;
        let (mut chi, mut lrt) = (0.0, 0.0);
        let (mut x, mut y) = ([0u64; 2], [0u64; 2]);
        for i in 0..reps {
            let mut rng = stream(5, i, 0, Phase::Moments);
            sample_multinomial_into(n, pi.probs(), &mut rng, &mut x);
            sample_multinomial_into(n, pi.probs(), &mut rng, &mut y);
            chi += chi_square_counts(&x, n, &y, n);
            lrt += lrt_counts(&x, n, &y, n);
        }
        assert!((chi - lrt).abs() / chi < 0.05, "{chi} vs {lrt}");
    }

    proptest! {
        #[test]
        fn statistics_are_nonnegative(
            a in proptest::collection::vec(0u64..12, 3),
            b in proptest::collection::vec(0u64..12, 3),
        ) {
            prop_assume!(a.iter().sum::<u64>() > 0 && b.iter().sum::<u64>() > 0);
            let p = pair(&a, &b);
            let chi = chi_square_group(&p).unwrap();
            prop_assert!(chi >= 0.0);
            prop_assert!(lrt_group(&p).unwrap() >= 0.0);
            let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
            let same = a.iter().zip(&b).all(|(x, y)| (*x as f64 / na - *y as f64 / nb).abs() < 1e-15);
            prop_assert_eq!(chi.abs() < 1e-12, same);
        }
    }
}
