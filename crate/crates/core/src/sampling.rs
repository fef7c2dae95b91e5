//! Multinomial sampling and exact enumeration of multinomial outcomes.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::counts::{CountVector, ProbVector};

/// Draw `M(n, π)` into `out` by the conditional-binomial method:
/// `x_j ~ Bin(n − Σ_{i<j} x_i, π_j / Σ_{i≥j} π_i)`, with the last category
/// taking the remainder. `O(d)` binomial draws regardless of `n`.
pub fn sample_multinomial_into<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R, out: &mut [u64]) {
    debug_assert_eq!(probs.len(), out.len());
    out.fill(0);
    let d = probs.len();
    let mut left = n;
    let mut mass = 1.0f64;
    for j in 0..d {
        if left == 0 {
            break;
        }
        if j + 1 == d {
            out[j] = left;
            break;
        }
        let p = probs[j];
        let x = if p <= 0.0 {
            0
        } else if p >= mass {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("q in [0, 1]").sample(rng)
        };
        out[j] = x;
        left -= x;
        mass -= p;
    }
}

/// Draw one `CountVector` from `M(n, π)`.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, pi: &ProbVector, rng: &mut R) -> CountVector {
    let mut out = vec![0u64; pi.dim()];
    sample_multinomial_into(n, pi.probs(), rng, &mut out);
    CountVector::new(out).expect("dim >= 2")
}

/// Number of count vectors of total `n` over `d` categories, `C(n+d−1, d−1)`.
pub fn composition_count(n: u64, d: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..d {
        c *= (n as f64 + i as f64) / i as f64;
    }
    c.round()
}

/// Every count vector of total `n` over `d` categories, in lexicographic
/// order of the leading entries.
pub fn compositions(n: u64, d: usize) -> Vec<Vec<u64>> {
    fn rec(left: u64, d: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if d == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(left - x, d - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(composition_count(n, d) as usize);
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Multinomial probability of `counts` under `π`, with `0⁰ = 1`.
pub fn multinomial_pmf(counts: &[u64], probs: &[f64]) -> f64 {
    let mut log_p = statrs::function::factorial::ln_factorial(counts.iter().sum());
    for (&c, &p) in counts.iter().zip(probs) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return 0.0;
        }
        log_p += c as f64 * p.ln() - statrs::function::factorial::ln_factorial(c);
    }
    log_p.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Phase};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn degenerate_inputs() {
        let mut rng = stream(1, 0, 0, Phase::Data);
        let pi = ProbVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(sample_multinomial(0, &pi, &mut rng).counts(), &[0, 0]);
        let e1 = ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_multinomial(17, &e1, &mut rng).counts(), &[17, 0, 0]);
        }
        let e3 = ProbVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(sample_multinomial(5, &e3, &mut rng).counts(), &[0, 0, 5]);
    }

    #[test]
    fn large_n_concentration() {
        let mut rng = stream(7, 0, 0, Phase::Data);
        let pi = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let c = sample_multinomial(1_000_000, &pi, &mut rng);
        assert_eq!(c.total(), 1_000_000);
        assert!((c.counts()[0] as f64 - 500_000.0).abs() <= 4.0 * 500.0);
    }

    #[test]
    fn enumeration_basics() {
        assert_eq!(composition_count(4, 3), 15.0);
        let all = compositions(4, 3);
        assert_eq!(all.len(), 15);
        assert!(all.iter().all(|c| c.iter().sum::<u64>() == 4));
        let probs = [0.2, 0.3, 0.5];
        let total: f64 = all.iter().map(|c| multinomial_pmf(c, &probs)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(multinomial_pmf(&[3, 0], &[1.0, 0.0]), 1.0);
        assert_eq!(multinomial_pmf(&[2, 1], &[1.0, 0.0]), 0.0);
    }

    /// 10⁶ draws of `M(3, π)` over `d = 3` compared cell by cell with the
    /// exact outcome probabilities.
    #[test]
    fn goodness_of_fit_against_exact_pmf() {
        let probs = [0.2, 0.5, 0.3];
        let outcomes = compositions(3, 3);
        let index = |c: &[u64]| outcomes.iter().position(|o| o == c).unwrap();
        let mut observed = vec![0u64; outcomes.len()];
        let mut rng = stream(2024, 0, 0, Phase::Data);
        let mut buf = [0u64; 3];
        let draws = 1_000_000u64;
        for _ in 0..draws {
            sample_multinomial_into(3, &probs, &mut rng, &mut buf);
            observed[index(&buf)] += 1;
        }
        let stat: f64 = outcomes
            .iter()
            .zip(&observed)
            .map(|(o, &obs)| {
                let e = draws as f64 * multinomial_pmf(o, &probs);
                (obs as f64 - e).powi(2) / e
            })
            .sum();
        let df = (outcomes.len() - 1) as f64;
        let p = ChiSquared::new(df).unwrap().sf(stat);
        assert!(p > 1e-4, "chi-square {stat} on {df} df, p = {p}");
    }
}
