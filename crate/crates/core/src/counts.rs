//! Grouped count data: validation, CSV ingestion/export and the elementary
//! empirical quantities every statistic is built from.
//!
//! The CSV layout is `group,population,c1,...,cd` with a mandatory header,
//! `population ∈ {1, 2}` and non-negative integer counts. `d` is taken from
//! the header. Groups keep the order in which they first appear.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// Observed frequencies of one sample over `d ≥ 2` categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::TooFewCategories(counts.len()));
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::TooFewCategories(probs.len()));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidProbVector(format!("entry {bad} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbVector(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// The equiprobable vector `(1/d, ..., 1/d)`.
    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(vec![1.0 / d as f64; d])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Same entries in reverse category order.
    pub fn reversed(&self) -> Self {
        let mut probs = self.probs.clone();
        probs.reverse();
        Self { probs }
    }

    /// Squared Euclidean distance to `other`.
    pub fn sq_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The two independent samples observed in one group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPair {
    group_id: String,
    sample1: CountVector,
    sample2: CountVector,
}

impl GroupPair {
    pub fn new(group_id: impl Into<String>, sample1: CountVector, sample2: CountVector) -> Result<Self> {
        if sample1.dim() != sample2.dim() {
            return Err(Error::DimensionMismatch {
                left: sample1.dim(),
                right: sample2.dim(),
            });
        }
        let min_total = sample1.total().min(sample2.total());
        if min_total < 1 {
            return Err(Error::ZeroTotal);
        }
        Ok(Self {
            group_id: group_id.into(),
            sample1,
            sample2,
        })
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn sample1(&self) -> &CountVector {
        &self.sample1
    }

    pub fn sample2(&self) -> &CountVector {
        &self.sample2
    }

    pub fn dim(&self) -> usize {
        self.sample1.dim()
    }
}

/// An ordered collection of `k ≥ 1` groups sharing the category count `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedDataset {
    groups: Vec<GroupPair>,
    dim: usize,
}

impl GroupedDataset {
    pub fn new(groups: Vec<GroupPair>) -> Result<Self> {
        let first = groups.first().ok_or(Error::EmptyInput)?;
        let dim = first.dim();
        let mut seen = std::collections::HashSet::with_capacity(groups.len());
        for g in &groups {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: g.dim(),
                });
            }
            if !seen.insert(g.group_id()) {
                return Err(Error::DuplicateGroup(g.group_id().to_string()));
            }
        }
        Ok(Self { groups, dim })
    }

    pub fn groups(&self) -> &[GroupPair] {
        &self.groups
    }

    /// Number of groups `k`.
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Number of categories `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One row per (group, population), in dataset order.
    pub fn to_rows(&self) -> Vec<RawRow> {
        self.groups
            .iter()
            .flat_map(|g| {
                [(1u8, &g.sample1), (2u8, &g.sample2)].map(|(population, s)| RawRow {
                    group: g.group_id.clone(),
                    population,
                    counts: s.counts.iter().map(|&c| c as i64).collect(),
                })
            })
            .collect()
    }

    /// Both samples summed over groups (the "no grouping" view).
    pub fn collapsed(&self) -> (CountVector, CountVector) {
        let mut a = vec![0u64; self.dim];
        let mut b = vec![0u64; self.dim];
        for g in &self.groups {
            for (acc, c) in a.iter_mut().zip(g.sample1.counts()) {
                *acc += c;
            }
            for (acc, c) in b.iter_mut().zip(g.sample2.counts()) {
                *acc += c;
            }
        }
        (
            CountVector::new(a).expect("dim >= 2"),
            CountVector::new(b).expect("dim >= 2"),
        )
    }
}

/// One unvalidated input row: a sample of `population` in `group`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRow {
    pub group: String,
    pub population: u8,
    pub counts: Vec<i64>,
}

/// Assemble rows into a [`GroupedDataset`]. Row numbers in errors are
/// 1-based positions in `rows`.
pub fn validate_dataset(rows: &[RawRow]) -> Result<GroupedDataset> {
    let first = rows.first().ok_or(Error::EmptyInput)?;
    let dim = first.counts.len();
    let mut order: Vec<&str> = Vec::new();
    let mut slots: HashMap<&str, [Option<CountVector>; 2]> = HashMap::new();

    for (i, row) in rows.iter().enumerate() {
        let row_no = i + 1;
        if row.counts.len() != dim {
            return Err(Error::MixedDimension {
                row: row_no,
                expected: dim,
                found: row.counts.len(),
            });
        }
        if !(1..=2).contains(&row.population) {
            return Err(Error::Parse {
                row: row_no,
                message: format!("population must be 1 or 2, got {}", row.population),
            });
        }
        let mut counts = Vec::with_capacity(dim);
        for (j, &c) in row.counts.iter().enumerate() {
            if c < 0 {
                return Err(Error::NegativeCount {
                    row: row_no,
                    column: j + 1,
                    value: c,
                });
            }
            counts.push(c as u64);
        }
        let cv = CountVector::new(counts).map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        let entry = slots.entry(row.group.as_str()).or_insert_with(|| {
            order.push(row.group.as_str());
            [None, None]
        });
        let slot = &mut entry[(row.population - 1) as usize];
        if slot.is_some() {
            return Err(Error::DuplicateSample {
                row: row_no,
                group: row.group.clone(),
                population: row.population,
            });
        }
        *slot = Some(cv);
    }

    let mut groups = Vec::with_capacity(order.len());
    for id in order {
        let [s1, s2] = slots.remove(id).expect("group recorded");
        let (s1, s2) = match (s1, s2) {
            (Some(a), Some(b)) => (a, b),
            (None, _) => {
                return Err(Error::MissingMate {
                    group: id.to_string(),
                    missing: 1,
                })
            }
            (_, None) => {
                return Err(Error::MissingMate {
                    group: id.to_string(),
                    missing: 2,
                })
            }
        };
        groups.push(GroupPair::new(id, s1, s2).map_err(|e| match e {
            Error::ZeroTotal => Error::Parse {
                row: 0,
                message: format!("group `{id}` has a sample with zero total"),
            },
            other => other,
        })?);
    }
    GroupedDataset::new(groups)
}

/// Parse the CSV layout into raw rows. Row numbers in errors count data
/// rows from 1 (the header is row 0).
pub fn read_rows<R: Read>(reader: R) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 4 {
        return Err(Error::Parse {
            row: 0,
            message: format!(
                "header needs `group,population` and at least 2 count columns, got {} columns",
                headers.len()
            ),
        });
    }
    let dim = headers.len() - 2;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, .. } => Error::MixedDimension {
                row: row_no,
                expected: dim,
                found: (*len as usize).saturating_sub(2),
            },
            _ => Error::Parse {
                row: row_no,
                message: e.to_string(),
            },
        })?;
        let parse_err = |message: String| Error::Parse { row: row_no, message };
        let group = rec.get(0).unwrap_or_default().to_string();
        if group.is_empty() {
            return Err(parse_err("empty group label".into()));
        }
        let population: u8 = rec
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|_| parse_err(format!("bad population `{}`", rec.get(1).unwrap_or_default())))?;
        let counts = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<i64>()
                    .map_err(|_| parse_err(format!("bad count `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(RawRow {
            group,
            population,
            counts,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

/// Read and validate a dataset in one step.
pub fn read_dataset<R: Read>(reader: R) -> Result<GroupedDataset> {
    validate_dataset(&read_rows(reader)?)
}

/// Write `ds` in the ingestion layout; `read_dataset` recovers it exactly.
pub fn write_dataset<W: Write>(ds: &GroupedDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["group".to_string(), "population".to_string()];
    header.extend((1..=ds.dim()).map(|j| format!("c{j}")));
    w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
    for row in ds.to_rows() {
        let mut rec = vec![row.group, row.population.to_string()];
        rec.extend(row.counts.iter().map(|c| c.to_string()));
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `counts / total`.
pub fn empirical_proportions(c: &CountVector) -> Result<ProbVector> {
    if c.total == 0 {
        return Err(Error::ZeroTotal);
    }
    let n = c.total as f64;
    Ok(ProbVector {
        probs: c.counts.iter().map(|&x| x as f64 / n).collect(),
    })
}

/// Elementwise sum of the two samples of a group.
pub fn pooled_counts(p: &GroupPair) -> CountVector {
    let counts: Vec<u64> = p
        .sample1
        .counts
        .iter()
        .zip(&p.sample2.counts)
        .map(|(a, b)| a + b)
        .collect();
    CountVector {
        total: p.sample1.total + p.sample2.total,
        counts,
    }
}
