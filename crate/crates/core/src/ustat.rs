//! The per-group U-statistic `T_{U_r}` and the aggregate `T_U`.
//!
//! `T_{U_r}` is the unbiased estimator of `‖π_{1r} − π_{2r}‖²`:
//!
//! ```text
//! T_{U_r} = n1/(n1−1)·π̂1ᵀπ̂1 − 1/(n1−1) + n2/(n2−1)·π̂2ᵀπ̂2 − 1/(n2−1) − 2·π̂1ᵀπ̂2
//! ```
//!
//! Both samples need at least two observations.

use serde::{Deserialize, Serialize};

use crate::counts::{GroupPair, GroupedDataset};
use crate::{Error, Result};

/// `T_{U_r}` of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub group_id: String,
    pub t_u: f64,
}

pub(crate) fn check_min_total(n: u64, required: u64) -> Result<()> {
    if n < required {
        Err(Error::SampleTooSmall {
            group: None,
            required,
            found: n,
        })
    } else {
        Ok(())
    }
}

/// Closed form on raw counts. `n1·π̂1ᵀπ̂1/(n1−1) − 1/(n1−1)` is rewritten as
/// `Σ c(c−1) / (n1(n1−1))`, which is the same quantity without the
/// cancellation between the two terms.
#[inline]
pub(crate) fn ustat_counts(c1: &[u64], n1: u64, c2: &[u64], n2: u64) -> f64 {
    let (mut s11, mut s22, mut s12) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in c1.iter().zip(c2) {
        let (a, b) = (a as f64, b as f64);
        s11 += a * (a - 1.0);
        s22 += b * (b - 1.0);
        s12 += a * b;
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    s11 / (n1 * (n1 - 1.0)) + s22 / (n2 * (n2 - 1.0)) - 2.0 * s12 / (n1 * n2)
}

/// `T_{U_r}` for one group.
pub fn group_ustat(p: &GroupPair) -> Result<f64> {
    let (a, b) = (p.sample1(), p.sample2());
    check_min_total(a.total(), 2)?;
    check_min_total(b.total(), 2)?;
    Ok(ustat_counts(a.counts(), a.total(), b.counts(), b.total()))
}

/// Two-sample symmetric kernel of the U-statistic.
fn kernel<L: PartialEq>(x1u: &L, x1v: &L, x2s: &L, x2t: &L) -> f64 {
    let ind = |a: &L, b: &L| if a == b { 1.0 } else { 0.0 };
    ind(x1u, x1v) + ind(x2s, x2t)
        - 0.5 * (ind(x1u, x2s) + ind(x1u, x2t) + ind(x1v, x2s) + ind(x1v, x2t))
}

/// `T_{U_1}` by brute-force averaging of the kernel over all ordered index
/// pairs `u ≠ v` of the first sample and `s ≠ t` of the second, from the
/// unsummarised category labels. `O(n1² n2²)`; meant as a reference for
/// small samples.
pub fn group_ustat_kernel_oracle<L: PartialEq>(x1: &[L], x2: &[L]) -> Result<f64> {
    check_min_total(x1.len() as u64, 2)?;
    check_min_total(x2.len() as u64, 2)?;
    let mut sum = 0.0;
    for (u, a) in x1.iter().enumerate() {
        for (v, b) in x1.iter().enumerate() {
            if u == v {
                continue;
            }
            for (s, c) in x2.iter().enumerate() {
                for (t, e) in x2.iter().enumerate() {
                    if s != t {
                        sum += kernel(a, b, c, e);
                    }
                }
            }
        }
    }
    let (n1, n2) = (x1.len() as f64, x2.len() as f64);
    Ok(sum / (n1 * (n1 - 1.0) * n2 * (n2 - 1.0)))
}

/// `T_{U_r}` for every group, in dataset order.
pub fn group_stats(ds: &GroupedDataset) -> Result<Vec<GroupStat>> {
    ds.groups()
        .iter()
        .map(|g| {
            Ok(GroupStat {
                group_id: g.group_id().to_string(),
                t_u: group_ustat(g).map_err(|e| e.in_group(g.group_id()))?,
            })
        })
        .collect()
}

/// `T_U = (1/√k) Σ_r T_{U_r}`.
pub fn aggregate_statistic(ds: &GroupedDataset) -> Result<f64> {
    let mut sum = 0.0;
    for g in ds.groups() {
        sum += group_ustat(g).map_err(|e| e.in_group(g.group_id()))?;
    }
    Ok(sum / (ds.k() as f64).sqrt())
}
