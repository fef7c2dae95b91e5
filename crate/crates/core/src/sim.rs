//! Seeded, parallel Monte Carlo engine for level and power studies.
//!
//! A replicate draws `k` groups according to one of five settings, then
//! every requested procedure is applied to the same data. Group `r` of
//! replicate `i` reads only the stream keyed by `(seed, i, r)`, so results
//! are bit-identical for any number of workers.
//!
//! | setting | per-group `(π_{1r}, π_{2r})` |
//! |---------|------------------------------|
//! | 1 | both uniform on `d` categories |
//! | 2 | `(πⁱ, πⁱ)`, `i` uniform on 1..5 |
//! | 3 | `(πⁱ, πⁱ)` for `i = 1..4` w.p. 0.2 each, `(π¹, π⁰)` w.p. 0.2 |
//! | 4 | as 3, but `(π¹, π⁰)` and `(π¹, rev π⁰)` w.p. 0.1 each |
//! | 5 | `π_{1r}`, `π_{2r}` independent, uniform on `π¹..π⁵` |

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{null_moments, GroupStatistic, MomentMethod, MomentPair, MomentPath};
use crate::counts::{CountVector, GroupPair, GroupedDataset, ProbVector};
use crate::decision::{check_alpha, chi_square_sf, critical_value, global_minp_rule, group_bootstrap_counts, rejects};
use crate::rng::{derive_seed, stream, Phase};
use crate::sampling::sample_multinomial_into;
use crate::ustat::ustat_counts;
use crate::variance::{bootstrap_variance, group_var_counts, var0_estimate, BootstrapOptions, Estimator, DEFAULT_BOOTSTRAP_B};
use crate::{Error, Result, BUILD_DESCRIBE, VERSION};

/// Replicates per cell for level and power tables.
pub const DEFAULT_REPS: usize = 10_000;

/// Replicates per cell for the per-group bootstrap power table.
pub const DEFAULT_MINP_REPS: usize = 1_000;

/// Monte Carlo replicates behind null moments that cannot be enumerated.
pub const DEFAULT_SIM_MOMENT_REPS: usize = 1_000_000;

const TAG_TEST7: u64 = 7;
const TAG_MINP: u64 = 11;
const TAG_MOMENTS: u64 = 13;
const TAG_TABLE: u64 = 17;

/// The vectors `π¹..π⁵` for `d ∈ {5, 10}` with their printed squared
/// distances `‖π¹ − πⁱ‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiLibrary {
    vectors: Vec<ProbVector>,
    printed: [f64; 5],
}

impl PiLibrary {
    pub fn new(d: usize) -> Result<Self> {
        let (raw, printed): (Vec<Vec<f64>>, [f64; 5]) = match d {
            5 => (
                vec![
                    vec![0.2; 5],
                    vec![0.1, 0.15, 0.2, 0.25, 0.3],
                    vec![0.05, 0.125, 0.2, 0.275, 0.35],
                    vec![0.05, 0.05, 0.2, 0.35, 0.35],
                    vec![0.05, 0.125, 0.125, 0.125, 0.575],
                ],
                [0.0, 0.025, 0.056, 0.090, 0.180],
            ),
            10 => (
                vec![
                    vec![0.1; 10],
                    vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.10, 0.12, 0.14, 0.16, 0.18],
                    vec![0.01, 0.01, 0.03, 0.03, 0.10, 0.10, 0.12, 0.2, 0.2, 0.2],
                    vec![0.01, 0.01, 0.02, 0.03, 0.03, 0.03, 0.21, 0.22, 0.22, 0.22],
                    vec![0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.10, 0.20, 0.20, 0.44],
                ],
                [0.0, 0.024, 0.056, 0.092, 0.184],
            ),
            _ => return Err(Error::UnsupportedDimension { setting: 2, d }),
        };
        let vectors = raw.into_iter().map(ProbVector::new).collect::<Result<_>>()?;
        Ok(Self { vectors, printed })
    }

    /// `πⁱ` for `i ∈ 1..=5`.
    pub fn get(&self, i: usize) -> &ProbVector {
        &self.vectors[i - 1]
    }

    pub fn vectors(&self) -> &[ProbVector] {
        &self.vectors
    }

    pub fn printed_distances(&self) -> [f64; 5] {
        self.printed
    }

    pub fn distances(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.vectors[0].sq_distance(&self.vectors[i]))
    }
}

/// Choice of `π⁰` in Settings 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pi0 {
    Pi2,
    Pi4,
}

impl Pi0 {
    fn index(self) -> usize {
        match self {
            Pi0::Pi2 => 1,
            Pi0::Pi4 => 3,
        }
    }
}

impl FromStr for Pi0 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pi2" | "2" => Ok(Pi0::Pi2),
            "pi4" | "4" => Ok(Pi0::Pi4),
            _ => Err(Error::InvalidSetting(format!("pi0 must be pi2 or pi4, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    One,
    Two,
    Three(Pi0),
    Four(Pi0),
    Five,
}

impl Setting {
    /// `pi0` is required for Settings 3 and 4 and rejected otherwise.
    pub fn new(id: u8, pi0: Option<Pi0>) -> Result<Self> {
        match (id, pi0) {
            (1, None) => Ok(Setting::One),
            (2, None) => Ok(Setting::Two),
            (3, Some(p)) => Ok(Setting::Three(p)),
            (4, Some(p)) => Ok(Setting::Four(p)),
            (5, None) => Ok(Setting::Five),
            (3 | 4, None) => Err(Error::InvalidSetting(format!("setting {id} needs pi0"))),
            (1 | 2 | 5, Some(_)) => Err(Error::InvalidSetting(format!("setting {id} takes no pi0"))),
            _ => Err(Error::InvalidSetting(format!("unknown setting {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Setting::One => 1,
            Setting::Two => 2,
            Setting::Three(_) => 3,
            Setting::Four(_) => 4,
            Setting::Five => 5,
        }
    }

    pub fn pi0(self) -> Option<Pi0> {
        match self {
            Setting::Three(p) | Setting::Four(p) => Some(p),
            _ => None,
        }
    }

    /// Every group satisfies `π_{1r} = π_{2r}`.
    pub fn is_null(self) -> bool {
        matches!(self, Setting::One | Setting::Two)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pi0() {
            Some(Pi0::Pi2) => write!(f, "setting {} (pi0 = pi2)", self.id()),
            Some(Pi0::Pi4) => write!(f, "setting {} (pi0 = pi4)", self.id()),
            None => write!(f, "setting {}", self.id()),
        }
    }
}

/// Per-group sample sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeRule {
    Constant(u64, u64),
    PerGroup(Vec<(u64, u64)>),
}

impl SizeRule {
    #[inline]
    pub fn get(&self, r: usize) -> (u64, u64) {
        match self {
            SizeRule::Constant(a, b) => (*a, *b),
            SizeRule::PerGroup(v) => v[r],
        }
    }

    fn distinct(&self) -> Vec<(u64, u64)> {
        match self {
            SizeRule::Constant(a, b) => vec![(*a, *b)],
            SizeRule::PerGroup(v) => {
                let mut out = v.clone();
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }
}

/// One simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub setting: Setting,
    pub d: usize,
    pub k: usize,
    pub sizes: SizeRule,
    pub seed: u64,
}

impl SettingSpec {
    pub fn new(setting: Setting, d: usize, k: usize, sizes: SizeRule, seed: u64) -> Result<Self> {
        let spec = Self {
            setting,
            d,
            k,
            sizes,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Constant sizes `(n1, n2)` in every group.
    pub fn constant(setting: Setting, d: usize, k: usize, n1: u64, n2: u64, seed: u64) -> Result<Self> {
        Self::new(setting, d, k, SizeRule::Constant(n1, n2), seed)
    }

    pub fn validate(&self) -> Result<()> {
        let supported = match self.setting {
            Setting::One => matches!(self.d, 5 | 10 | 20),
            _ => matches!(self.d, 5 | 10),
        };
        if !supported {
            return Err(Error::UnsupportedDimension {
                setting: self.setting.id(),
                d: self.d,
            });
        }
        if self.k == 0 {
            return Err(Error::EmptyInput);
        }
        match &self.sizes {
            SizeRule::PerGroup(v) if v.len() != self.k => Err(Error::DimensionMismatch {
                left: self.k,
                right: v.len(),
            }),
            sizes => {
                if sizes.distinct().iter().any(|&(a, b)| a == 0 || b == 0) {
                    Err(Error::ZeroTotal)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// The probability vectors a setting draws from, by index, and the mixture
/// over index pairs.
struct Design {
    table: Vec<ProbVector>,
    setting: Setting,
}

impl Design {
    fn new(spec: &SettingSpec) -> Result<Self> {
        spec.validate()?;
        let table = match spec.setting {
            Setting::One => vec![ProbVector::uniform(spec.d)?],
            setting => {
                let mut v = PiLibrary::new(spec.d)?.vectors;
                if let Some(p) = setting.pi0() {
                    let rev = v[p.index()].reversed();
                    v.push(rev);
                }
                v
            }
        };
        Ok(Self {
            table,
            setting: spec.setting,
        })
    }

    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        match self.setting {
            Setting::One => (0, 0),
            Setting::Two => {
                let i = rng.random_range(0..5);
                (i, i)
            }
            Setting::Three(p) => match rng.random_range(0..5) {
                4 => (0, p.index()),
                i => (i, i),
            },
            Setting::Four(p) => match rng.random_range(0..10) {
                8 => (0, p.index()),
                9 => (0, 5),
                u => (u / 2, u / 2),
            },
            Setting::Five => (rng.random_range(0..5), rng.random_range(0..5)),
        }
    }
}

/// Flat per-replicate buffers: counts are `k × d`, row-major by group.
struct Replicate {
    d: usize,
    c1: Vec<u64>,
    c2: Vec<u64>,
    pair: Vec<(usize, usize)>,
}

impl Replicate {
    fn new(k: usize, d: usize) -> Self {
        Self {
            d,
            c1: vec![0; k * d],
            c2: vec![0; k * d],
            pair: vec![(0, 0); k],
        }
    }

    fn fill(&mut self, design: &Design, spec: &SettingSpec, rep: u64) {
        let d = self.d;
        for r in 0..spec.k {
            let mut rng = stream(spec.seed, rep, r as u64, Phase::Data);
            let (i1, i2) = design.draw(&mut rng);
            let (n1, n2) = spec.sizes.get(r);
            sample_multinomial_into(n1, design.table[i1].probs(), &mut rng, &mut self.c1[r * d..(r + 1) * d]);
            sample_multinomial_into(n2, design.table[i2].probs(), &mut rng, &mut self.c2[r * d..(r + 1) * d]);
            self.pair[r] = (i1, i2);
        }
    }

    #[inline]
    fn group(&self, r: usize) -> (&[u64], &[u64]) {
        let d = self.d;
        (&self.c1[r * d..(r + 1) * d], &self.c2[r * d..(r + 1) * d])
    }

    fn to_dataset(&self, spec: &SettingSpec) -> GroupedDataset {
        let groups = (0..spec.k)
            .map(|r| {
                let (a, b) = self.group(r);
                GroupPair::new(
                    format!("g{}", r + 1),
                    CountVector::new(a.to_vec()).expect("d >= 2"),
                    CountVector::new(b.to_vec()).expect("d >= 2"),
                )
                .expect("sizes validated")
            })
            .collect();
        GroupedDataset::new(groups).expect("k >= 1")
    }
}

/// Draw replicate `rep` of `spec`. The flags are `true` for groups with
/// `π_{1r} = π_{2r}`.
pub fn generate_replicate(spec: &SettingSpec, rep: u64) -> Result<(GroupedDataset, Vec<bool>)> {
    let design = Design::new(spec)?;
    let mut buf = Replicate::new(spec.k, spec.d);
    buf.fill(&design, spec, rep);
    let null = buf.pair.iter().map(|&(a, b)| design.table[a] == design.table[b]).collect();
    Ok((buf.to_dataset(spec), null))
}

/// A rejection rule applied to each simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// `T_U / √var̂_0 ≥ z_{1−α}` with the given estimator.
    Test(Estimator),
    Wk,
    /// `W_k` standardised by the exact null moments of the true `π_r`.
    WkPrime,
    Vk,
    VkPrime,
    /// Chi-square on counts summed over groups, `χ²_{d−1}` reference.
    Chi2Pooled,
    /// Per-group bootstrap p-values with the `min p ≤ α/k` rule.
    MinP,
}

impl Procedure {
    pub fn id(self) -> &'static str {
        match self {
            Procedure::Test(e) => e.id(),
            Procedure::Wk => "wk",
            Procedure::WkPrime => "wk_prime",
            Procedure::Vk => "vk",
            Procedure::VkPrime => "vk_prime",
            Procedure::Chi2Pooled => "chi2",
            Procedure::MinP => "minp",
        }
    }

    fn uses_moments(self) -> Option<GroupStatistic> {
        match self {
            Procedure::WkPrime => Some(GroupStatistic::ChiSquare),
            Procedure::VkPrime => Some(GroupStatistic::Lrt),
            _ => None,
        }
    }

    fn check(self, spec: &SettingSpec) -> Result<()> {
        if self.uses_moments().is_some() && !spec.setting.is_null() {
            return Err(Error::InvalidSetting(format!(
                "{} needs known null vectors and is only available in settings 1 and 2",
                self.id()
            )));
        }
        for (n1, n2) in spec.sizes.distinct() {
            match self {
                Procedure::Test(e) => e.check_sizes(n1, n2)?,
                Procedure::MinP => Estimator::Test2.check_sizes(n1, n2)?,
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wk" => Ok(Procedure::Wk),
            "wk_prime" | "wkprime" => Ok(Procedure::WkPrime),
            "vk" => Ok(Procedure::Vk),
            "vk_prime" | "vkprime" => Ok(Procedure::VkPrime),
            "chi2" => Ok(Procedure::Chi2Pooled),
            "minp" => Ok(Procedure::MinP),
            other => other.parse().map(Procedure::Test),
        }
    }
}

/// Knobs shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub alpha: f64,
    pub workers: usize,
    /// Bootstrap size for Test 7.
    pub bootstrap_b: usize,
    /// Bootstrap size per group for [`Procedure::MinP`].
    pub pergroup_b: usize,
    /// Monte Carlo replicates for null moments when enumeration is too large.
    pub moment_reps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            bootstrap_b: DEFAULT_BOOTSTRAP_B,
            pergroup_b: crate::decision::DEFAULT_PERGROUP_B,
            moment_reps: DEFAULT_SIM_MOMENT_REPS,
        }
    }
}

/// Rejection rate of one procedure in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub procedure: Procedure,
    pub rate: f64,
    /// `√(rate (1 − rate) / reps)`.
    pub se: f64,
    pub reps: usize,
    pub rejections: usize,
    /// Replicates whose variance estimate was not positive.
    pub degenerate: usize,
    /// How the null moments were obtained, for `W_k′` and `V_k′`.
    pub moments: Option<MomentPath>,
    /// Wall-clock seconds for the whole cell.
    pub wall_seconds: f64,
}

type MomentTable = HashMap<(GroupStatistic, usize, u64, u64), MomentPair>;

struct Cell<'a> {
    spec: &'a SettingSpec,
    design: Design,
    procs: &'a [Procedure],
    opts: RunOptions,
    z_crit: f64,
    moments: MomentTable,
}

impl<'a> Cell<'a> {
    fn new(spec: &'a SettingSpec, procs: &'a [Procedure], opts: RunOptions) -> Result<(Self, HashMap<GroupStatistic, MomentPath>)> {
        let design = Design::new(spec)?;
        check_alpha(opts.alpha)?;
        if opts.workers == 0 {
            return Err(Error::InvalidSetting("worker count must be at least 1".into()));
        }
        for p in procs {
            p.check(spec)?;
        }
        if procs.contains(&Procedure::Test(Estimator::Test7)) && opts.bootstrap_b < 2 {
            return Err(Error::InvalidB(opts.bootstrap_b));
        }
        if procs.contains(&Procedure::MinP) && opts.pergroup_b < 1 {
            return Err(Error::InvalidB(opts.pergroup_b));
        }
        let mut moments = MomentTable::new();
        let mut paths = HashMap::new();
        for stat in procs.iter().filter_map(|p| p.uses_moments()) {
            for (idx, pi) in design.table.iter().enumerate() {
                for (n1, n2) in spec.sizes.distinct() {
                    let seed = derive_seed(spec.seed, idx as u64, TAG_MOMENTS + (n1 << 20) + (n2 << 40));
                    let method = MomentMethod::Auto {
                        reps: opts.moment_reps,
                        seed,
                    };
                    let (m, path) = null_moments(stat, pi, n1, n2, method)?;
                    moments.insert((stat, idx, n1, n2), m);
                    let entry = paths.entry(stat).or_insert(path);
                    if path != MomentPath::Exact {
                        *entry = path;
                    }
                }
            }
        }
        Ok((
            Self {
                spec,
                design,
                procs,
                opts,
                z_crit: critical_value(opts.alpha)?,
                moments,
            },
            paths,
        ))
    }

    /// `(reject, degenerate)` for every procedure on one replicate.
    fn evaluate(&self, buf: &Replicate, rep: u64, out: &mut [(bool, bool)]) {
        let spec = self.spec;
        let (k, d) = (spec.k, spec.d);
        let want = |p: Procedure| self.procs.contains(&p);
        let mut est_sums = [0.0f64; 6];
        let mut closed: Vec<Estimator> = Vec::new();
        for p in self.procs {
            if let Procedure::Test(e) = p {
                if *e != Estimator::Test7 {
                    closed.push(*e);
                }
            }
        }
        let need_chi = want(Procedure::Wk) || want(Procedure::WkPrime);
        let need_lrt = want(Procedure::Vk) || want(Procedure::VkPrime);
        let need_pool = want(Procedure::Chi2Pooled);
        let (mut t_sum, mut chi_sum, mut lrt_sum) = (0.0, 0.0, 0.0);
        let (mut chi_m, mut lrt_m) = ((0.0, 0.0), (0.0, 0.0));
        let (mut pool1, mut pool2) = (vec![0u64; if need_pool { d } else { 0 }], vec![0u64; if need_pool { d } else { 0 }]);
        let (mut tot1, mut tot2) = (0u64, 0u64);
        for r in 0..k {
            let (a, b) = buf.group(r);
            let (n1, n2) = spec.sizes.get(r);
            if n1 >= 2 && n2 >= 2 {
                t_sum += ustat_counts(a, n1, b, n2);
            }
            for &e in &closed {
                est_sums[e as usize] += group_var_counts(e, a, n1, b, n2);
            }
            if need_chi {
                chi_sum += GroupStatistic::ChiSquare.eval(a, n1, b, n2);
                if want(Procedure::WkPrime) {
                    let m = self.moments[&(GroupStatistic::ChiSquare, buf.pair[r].0, n1, n2)];
                    chi_m.0 += m.mean;
                    chi_m.1 += m.variance;
                }
            }
            if need_lrt {
                lrt_sum += GroupStatistic::Lrt.eval(a, n1, b, n2);
                if want(Procedure::VkPrime) {
                    let m = self.moments[&(GroupStatistic::Lrt, buf.pair[r].0, n1, n2)];
                    lrt_m.0 += m.mean;
                    lrt_m.1 += m.variance;
                }
            }
            if need_pool {
                for j in 0..d {
                    pool1[j] += a[j];
                    pool2[j] += b[j];
                }
                tot1 += n1;
                tot2 += n2;
            }
        }
        let kf = k as f64;
        let t_u = t_sum / kf.sqrt();
        let df = (d - 1) as f64;
        for (slot, &p) in out.iter_mut().zip(self.procs) {
            *slot = match p {
                Procedure::Test(Estimator::Test7) => {
                    let plan: Vec<(u64, u64, Vec<f64>)> = (0..k)
                        .map(|r| {
                            let (a, b) = buf.group(r);
                            let (n1, n2) = spec.sizes.get(r);
                            let n = (n1 + n2) as f64;
                            (n1, n2, a.iter().zip(b).map(|(x, y)| (x + y) as f64 / n).collect())
                        })
                        .collect();
                    let seed = derive_seed(spec.seed, rep, TAG_TEST7);
                    let v = bootstrap_variance(&plan, d, self.opts.bootstrap_b, seed);
                    (rejects(t_u, v, self.z_crit), !(v > 0.0))
                }
                Procedure::Test(e) => {
                    let v = est_sums[e as usize] / kf;
                    (rejects(t_u, v, self.z_crit), !(v > 0.0))
                }
                Procedure::Wk => ((chi_sum - kf * df) / (kf * 2.0 * df).sqrt() >= self.z_crit, false),
                Procedure::Vk => ((lrt_sum - kf * df) / (kf * 2.0 * df).sqrt() >= self.z_crit, false),
                Procedure::WkPrime => (rejects(chi_sum - chi_m.0, chi_m.1, self.z_crit), !(chi_m.1 > 0.0)),
                Procedure::VkPrime => (rejects(lrt_sum - lrt_m.0, lrt_m.1, self.z_crit), !(lrt_m.1 > 0.0)),
                Procedure::Chi2Pooled => {
                    let stat = GroupStatistic::ChiSquare.eval(&pool1, tot1, &pool2, tot2);
                    (chi_square_sf(stat, d - 1) <= self.opts.alpha, false)
                }
                Procedure::MinP => {
                    let seed = derive_seed(spec.seed, rep, TAG_MINP);
                    let b = self.opts.pergroup_b;
                    let mut pvals = Vec::with_capacity(k);
                    let mut probs = vec![0.0; d];
                    for r in 0..k {
                        let (a, bb) = buf.group(r);
                        let (n1, n2) = spec.sizes.get(r);
                        let n = (n1 + n2) as f64;
                        let mut support = 0;
                        for j in 0..d {
                            probs[j] = (a[j] + bb[j]) as f64 / n;
                            support += usize::from(a[j] + bb[j] > 0);
                        }
                        if support <= 1 {
                            continue;
                        }
                        let t_obs = ustat_counts(a, n1, bb, n2);
                        let (gt, _) = group_bootstrap_counts(t_obs, n1, n2, &probs, d, b, seed, r as u64);
                        pvals.push(gt as f64 / b as f64);
                    }
                    (
                        global_minp_rule(&pvals, self.opts.alpha).expect("p-values in [0, 1]"),
                        pvals.is_empty(),
                    )
                }
            };
        }
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidSetting(format!("thread pool: {e}")))
}

/// Rejection rate of every procedure in `procs` over `reps` replicates of
/// `spec`, all procedures sharing the same simulated data. A procedure
/// whose sample-size requirement fails for the cell aborts the whole call.
pub fn estimate_rejection_rate(spec: &SettingSpec, procs: &[Procedure], reps: usize, opts: RunOptions) -> Result<Vec<MCResult>> {
    if reps == 0 {
        return Err(Error::InvalidReps(reps));
    }
    let start = Instant::now();
    let (cell, paths) = Cell::new(spec, procs, opts)?;
    let np = procs.len();
    let pool = thread_pool(opts.workers)?;
    let counts: Vec<usize> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map_init(
                || (Replicate::new(spec.k, spec.d), vec![(false, false); np]),
                |(buf, out), rep| {
                    buf.fill(&cell.design, spec, rep);
                    cell.evaluate(buf, rep, out);
                    out.iter().flat_map(|&(r, g)| [usize::from(r), usize::from(g)]).collect::<Vec<_>>()
                },
            )
            .reduce(
                || vec![0; 2 * np],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });
    let wall_seconds = start.elapsed().as_secs_f64();
    Ok(procs
        .iter()
        .enumerate()
        .map(|(i, &procedure)| {
            let rejections = counts[2 * i];
            let rate = rejections as f64 / reps as f64;
            MCResult {
                procedure,
                rate,
                se: (rate * (1.0 - rate) / reps as f64).sqrt(),
                reps,
                rejections,
                degenerate: counts[2 * i + 1],
                moments: procedure.uses_moments().and_then(|s| paths.get(&s).copied()),
                wall_seconds,
            }
        })
        .collect())
}

/// `T_U / √var̂_0(T_U)` for each of `reps` replicates of `spec`, in
/// replicate order; `None` where the variance estimate is not positive.
pub fn replicate_z_values(spec: &SettingSpec, est: Estimator, reps: usize, opts: RunOptions) -> Result<Vec<Option<f64>>> {
    if reps == 0 {
        return Err(Error::InvalidReps(reps));
    }
    let design = Design::new(spec)?;
    Procedure::Test(est).check(spec)?;
    let pool = thread_pool(opts.workers)?;
    pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map_init(
                || Replicate::new(spec.k, spec.d),
                |buf, rep| {
                    buf.fill(&design, spec, rep);
                    let ds = buf.to_dataset(spec);
                    let t = crate::ustat::aggregate_statistic(&ds)?;
                    let boot = BootstrapOptions {
                        b: opts.bootstrap_b,
                        seed: derive_seed(spec.seed, rep, TAG_TEST7),
                    };
                    let v = var0_estimate(&ds, est, boot)?.value;
                    Ok((v > 0.0).then(|| t / v.sqrt()))
                },
            )
            .collect()
    })
}

/// Tables the harness can regenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableId {
    /// `W_k` level, Setting 1, `d ∈ {5, 10, 20}`.
    Tab8,
    /// `W_k′` level.
    Tab88,
    /// `V_k` level.
    Trv1,
    /// `V_k′` level.
    Trv2,
    /// Tests 1–3 level, Setting 1, `d = 5`.
    Tab2,
    /// Tests 1–3 level, Setting 1, `d = 10`.
    Tab3,
    /// Tests 1–3 level, Setting 1, `d = 20`.
    Tab4,
    /// Tests 1–3 level, Setting 2, `d = 5`.
    Tab5,
    /// Tests 1–3 level, Setting 2, `d = 10`.
    Tab6,
    /// Tests 4–7 level, Setting 1, `d = 5`.
    Rev1,
    Rev2,
    Rev3,
    /// Tests 1–3 and pooled chi-square power, Setting 3.
    Power1,
    /// Setting 4.
    Power2,
    /// Setting 5.
    Power3,
    /// Per-group bootstrap min-p power, Settings 3–5.
    PowerCm,
}

impl TableId {
    pub const ALL: [TableId; 16] = [
        TableId::Tab8,
        TableId::Tab88,
        TableId::Trv1,
        TableId::Trv2,
        TableId::Tab2,
        TableId::Tab3,
        TableId::Tab4,
        TableId::Tab5,
        TableId::Tab6,
        TableId::Rev1,
        TableId::Rev2,
        TableId::Rev3,
        TableId::Power1,
        TableId::Power2,
        TableId::Power3,
        TableId::PowerCm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TableId::Tab8 => "tab8",
            TableId::Tab88 => "tab88",
            TableId::Trv1 => "trv1",
            TableId::Trv2 => "trv2",
            TableId::Tab2 => "tab2",
            TableId::Tab3 => "tab3",
            TableId::Tab4 => "tab4",
            TableId::Tab5 => "tab5",
            TableId::Tab6 => "tab6",
            TableId::Rev1 => "rev1",
            TableId::Rev2 => "rev2",
            TableId::Rev3 => "rev3",
            TableId::Power1 => "power1",
            TableId::Power2 => "power2",
            TableId::Power3 => "power3",
            TableId::PowerCm => "powerCM",
        }
    }

    /// Replicate count used when the caller does not choose one.
    pub fn default_reps(self) -> usize {
        match self {
            TableId::PowerCm => DEFAULT_MINP_REPS,
            _ => DEFAULT_REPS,
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTable(s.to_string()))
    }
}

/// `k` values of the level tables.
pub const LEVEL_KS: [usize; 6] = [20, 50, 100, 200, 500, 750];
/// `(n1, n2)` values of the level tables.
pub const LEVEL_SIZES: [(u64, u64); 4] = [(5, 10), (10, 10), (20, 30), (30, 30)];
/// `k` values of the power tables.
pub const POWER_KS: [usize; 3] = [20, 50, 200];
/// `(n1, n2)` values of the power tables.
pub const POWER_SIZES: [(u64, u64); 5] = [(5, 5), (5, 10), (10, 10), (20, 30), (30, 30)];

/// One simulated cell of a table: a row key, a column-group label and the
/// procedures evaluated on shared data.
#[derive(Debug, Clone, PartialEq)]
pub struct TableBlock {
    pub row: Vec<String>,
    pub group: String,
    pub setting: Setting,
    pub d: usize,
    pub k: usize,
    pub n1: u64,
    pub n2: u64,
    pub procs: Vec<Procedure>,
}

/// The key columns and blocks of a table, before any simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TableLayout {
    pub key_columns: Vec<&'static str>,
    pub blocks: Vec<TableBlock>,
}

fn level_blocks(setting: Setting, dims: &[usize], procs: &[Procedure], group_by_d: bool) -> Vec<TableBlock> {
    let mut out = Vec::new();
    for &k in &LEVEL_KS {
        for &(n1, n2) in &LEVEL_SIZES {
            for &d in dims {
                out.push(TableBlock {
                    row: vec![k.to_string(), n1.to_string(), n2.to_string()],
                    group: if group_by_d { format!("d{d}") } else { String::new() },
                    setting,
                    d,
                    k,
                    n1,
                    n2,
                    procs: procs.to_vec(),
                });
            }
        }
    }
    out
}

fn tests(ids: &[Estimator]) -> Vec<Procedure> {
    ids.iter().map(|&e| Procedure::Test(e)).collect()
}

/// Row and column structure of `id`.
pub fn table_layout(id: TableId) -> TableLayout {
    use Estimator::*;
    let kn = vec!["k", "n1", "n2"];
    let t123 = tests(&[Test1, Test2, Test3]);
    let t4567 = tests(&[Test4, Test5, Test6, Test7]);
    let mut power = t123.clone();
    power.push(Procedure::Chi2Pooled);
    match id {
        TableId::Tab8 => TableLayout {
            key_columns: kn,
            blocks: level_blocks(Setting::One, &[5, 10, 20], &[Procedure::Wk], true),
        },
        TableId::Tab88 => TableLayout {
            key_columns: kn,
            blocks: level_blocks(Setting::One, &[5, 10, 20], &[Procedure::WkPrime], true),
        },
        TableId::Trv1 => TableLayout {
            key_columns: kn,
            blocks: level_blocks(Setting::One, &[5, 10, 20], &[Procedure::Vk], true),
        },
        TableId::Trv2 => TableLayout {
            key_columns: kn,
            blocks: level_blocks(Setting::One, &[5, 10, 20], &[Procedure::VkPrime], true),
        },
        TableId::Tab2 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[5], &t123, false) },
        TableId::Tab3 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[10], &t123, false) },
        TableId::Tab4 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[20], &t123, false) },
        TableId::Tab5 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::Two, &[5], &t123, false) },
        TableId::Tab6 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::Two, &[10], &t123, false) },
        TableId::Rev1 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[5], &t4567, false) },
        TableId::Rev2 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[10], &t4567, false) },
        TableId::Rev3 => TableLayout { key_columns: kn, blocks: level_blocks(Setting::One, &[20], &t4567, false) },
        TableId::Power1 | TableId::Power2 => {
            let make = |p| if id == TableId::Power1 { Setting::Three(p) } else { Setting::Four(p) };
            let mut blocks = Vec::new();
            for d in [5, 10] {
                for &k in &POWER_KS {
                    for &(n1, n2) in &POWER_SIZES {
                        for (label, p) in [("pi2", Pi0::Pi2), ("pi4", Pi0::Pi4)] {
                            blocks.push(TableBlock {
                                row: vec![d.to_string(), k.to_string(), n1.to_string(), n2.to_string()],
                                group: label.to_string(),
                                setting: make(p),
                                d,
                                k,
                                n1,
                                n2,
                                procs: power.clone(),
                            });
                        }
                    }
                }
            }
            TableLayout {
                key_columns: vec!["d", "k", "n1", "n2"],
                blocks,
            }
        }
        TableId::Power3 => {
            let mut blocks = Vec::new();
            for &k in &POWER_KS {
                for &(n1, n2) in &POWER_SIZES {
                    for d in [5, 10] {
                        blocks.push(TableBlock {
                            row: vec![k.to_string(), n1.to_string(), n2.to_string()],
                            group: format!("d{d}"),
                            setting: Setting::Five,
                            d,
                            k,
                            n1,
                            n2,
                            procs: power.clone(),
                        });
                    }
                }
            }
            TableLayout { key_columns: kn, blocks }
        }
        TableId::PowerCm => {
            let variants = [
                ("s3_pi2", Setting::Three(Pi0::Pi2)),
                ("s3_pi4", Setting::Three(Pi0::Pi4)),
                ("s4_pi2", Setting::Four(Pi0::Pi2)),
                ("s4_pi4", Setting::Four(Pi0::Pi4)),
                ("s5", Setting::Five),
            ];
            let mut blocks = Vec::new();
            for &k in &POWER_KS {
                for &(n1, n2) in &POWER_SIZES {
                    for d in [5, 10] {
                        for (label, setting) in variants {
                            blocks.push(TableBlock {
                                row: vec![k.to_string(), n1.to_string(), n2.to_string()],
                                group: format!("d{d}_{label}"),
                                setting,
                                d,
                                k,
                                n1,
                                n2,
                                procs: vec![Procedure::MinP],
                            });
                        }
                    }
                }
            }
            TableLayout { key_columns: kn, blocks }
        }
    }
}

/// Settings of a table run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub reps: usize,
    pub seed: u64,
    pub run: RunOptions,
}

/// Per-cell provenance recorded in the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub row: Vec<String>,
    pub group: String,
    pub setting: Setting,
    pub d: usize,
    pub k: usize,
    pub n1: u64,
    pub n2: u64,
    pub seed: u64,
    pub results: Vec<MCResult>,
}

/// Provenance written next to a table CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub build: String,
    pub table: String,
    pub seed: u64,
    pub reps: usize,
    pub alpha: f64,
    pub workers: usize,
    pub bootstrap_b: usize,
    pub pergroup_b: usize,
    pub moment_reps: usize,
    pub wall_seconds: f64,
    pub cells: Vec<CellRecord>,
}

/// A regenerated table: one row per key, a rate and `_se` column per
/// (column group, procedure).
#[derive(Debug, Clone, PartialEq)]
pub struct TableArtifact {
    pub key_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<(Vec<String>, Vec<Option<(f64, f64)>>)>,
    pub sidecar: Sidecar,
}

impl TableArtifact {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = self.key_columns.clone();
        for c in &self.value_columns {
            header.push(c.clone());
            header.push(format!("{c}_se"));
        }
        out.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for (key, values) in &self.rows {
            let mut rec = key.clone();
            for v in values {
                match v {
                    Some((rate, se)) => {
                        rec.push(format!("{rate:.4}"));
                        rec.push(format!("{se:.4}"));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            out.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_sidecar<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.sidecar).map_err(|e| Error::Io(e.to_string()))
    }

    /// Rate and standard error at `row` for column `column`.
    pub fn get(&self, row: &[&str], column: &str) -> Option<(f64, f64)> {
        let c = self.value_columns.iter().position(|v| v == column)?;
        self.rows
            .iter()
            .find(|(k, _)| k.iter().map(String::as_str).eq(row.iter().copied()))
            .and_then(|(_, v)| v[c])
    }
}

fn column_label(group: &str, proc_count: usize, proc: Procedure) -> String {
    match (group.is_empty(), proc_count) {
        (true, _) => proc.id().to_string(),
        (false, 1) => group.to_string(),
        (false, _) => format!("{group}_{}", proc.id()),
    }
}

/// Run the blocks of a layout (optionally a filtered subset of it) and
/// assemble the table.
pub fn run_layout(id: TableId, layout: &TableLayout, opts: TableOptions) -> Result<TableArtifact> {
    if opts.reps == 0 {
        return Err(Error::InvalidReps(0));
    }
    let start = Instant::now();
    let mut value_columns: Vec<String> = Vec::new();
    let mut rows: Vec<(Vec<String>, Vec<Option<(f64, f64)>>)> = Vec::new();
    let mut cells = Vec::new();
    for (i, block) in layout.blocks.iter().enumerate() {
        let seed = derive_seed(opts.seed, i as u64, TAG_TABLE);
        let spec = SettingSpec::constant(block.setting, block.d, block.k, block.n1, block.n2, seed)?;
        let results = estimate_rejection_rate(&spec, &block.procs, opts.reps, opts.run)?;
        let row_idx = match rows.iter().position(|(k, _)| *k == block.row) {
            Some(r) => r,
            None => {
                rows.push((block.row.clone(), Vec::new()));
                rows.len() - 1
            }
        };
        for res in &results {
            let label = column_label(&block.group, block.procs.len(), res.procedure);
            let col = match value_columns.iter().position(|c| *c == label) {
                Some(c) => c,
                None => {
                    value_columns.push(label);
                    value_columns.len() - 1
                }
            };
            let values = &mut rows[row_idx].1;
            if values.len() <= col {
                values.resize(col + 1, None);
            }
            values[col] = Some((res.rate, res.se));
        }
        cells.push(CellRecord {
            row: block.row.clone(),
            group: block.group.clone(),
            setting: block.setting,
            d: block.d,
            k: block.k,
            n1: block.n1,
            n2: block.n2,
            seed,
            results,
        });
    }
    for (_, v) in rows.iter_mut() {
        v.resize(value_columns.len(), None);
    }
    Ok(TableArtifact {
        key_columns: layout.key_columns.iter().map(|s| s.to_string()).collect(),
        value_columns,
        rows,
        sidecar: Sidecar {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: VERSION.to_string(),
            build: BUILD_DESCRIBE.to_string(),
            table: id.id().to_string(),
            seed: opts.seed,
            reps: opts.reps,
            alpha: opts.run.alpha,
            workers: opts.run.workers,
            bootstrap_b: opts.run.bootstrap_b,
            pergroup_b: opts.run.pergroup_b,
            moment_reps: opts.run.moment_reps,
            wall_seconds: start.elapsed().as_secs_f64(),
            cells,
        },
    })
}

/// Regenerate a whole table.
pub fn reproduce_table(id: TableId, opts: TableOptions) -> Result<TableArtifact> {
    run_layout(id, &table_layout(id), opts)
}

/// Median time of one estimator on one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub d: usize,
    pub n1: u64,
    pub n2: u64,
    pub estimator: Estimator,
    pub median_seconds: f64,
}

/// Time `T_U` plus each variance estimate on a Setting 1 dataset for every
/// `(k, d)` in the grid, reporting the median over `reps` runs.
pub fn benchmark_statistics(ks: &[usize], ds: &[usize], n1: u64, n2: u64, reps: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if reps == 0 {
        return Err(Error::InvalidReps(0));
    }
    let mut out = Vec::new();
    for &d in ds {
        for &k in ks {
            let spec = SettingSpec::constant(Setting::One, d, k, n1, n2, seed)?;
            let (data, _) = generate_replicate(&spec, 0)?;
            for est in Estimator::ALL {
                est.check_sizes(n1, n2)?;
                let mut times: Vec<f64> = (0..reps)
                    .map(|i| {
                        let start = Instant::now();
                        let t = crate::ustat::aggregate_statistic(&data).expect("validated");
                        let boot = BootstrapOptions {
                            b: DEFAULT_BOOTSTRAP_B,
                            seed: derive_seed(seed, i as u64, Phase::Benchmark as u64),
                        };
                        let v = var0_estimate(&data, est, boot).expect("validated");
                        std::hint::black_box((t, v));
                        start.elapsed().as_secs_f64()
                    })
                    .collect();
                times.sort_by(f64::total_cmp);
                out.push(BenchRow {
                    k,
                    d,
                    n1,
                    n2,
                    estimator: est,
                    median_seconds: times[times.len() / 2],
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(workers: usize) -> RunOptions {
        RunOptions {
            workers,
            moment_reps: 20_000,
            ..Default::default()
        }
    }

    /// The printed distances are the exact ones truncated to three decimals;
    /// all but d = 10, π⁴ (0.0926 printed as 0.092) are also within 5e−4.
    #[test]
    fn pi_library_distances() {
        for d in [5, 10] {
            let lib = PiLibrary::new(d).unwrap();
            for (i, (got, want)) in lib.distances().iter().zip(lib.printed_distances()).enumerate() {
                assert!(((got * 1000.0 + 1e-9).floor() / 1000.0 - want).abs() < 1e-12, "d={d}: {got} vs {want}");
                if (d, i) != (10, 3) {
                    assert!((got - want).abs() < 5e-4, "d={d}: {got} vs {want}");
                }
            }
            for v in lib.vectors() {
                assert!((v.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert!((PiLibrary::new(10).unwrap().distances()[3] - 0.0926).abs() < 1e-12);
        assert!(PiLibrary::new(20).is_err());
    }

    #[test]
    fn setting_validation() {
        assert!(Setting::new(3, None).is_err());
        assert!(Setting::new(1, Some(Pi0::Pi2)).is_err());
        assert!(Setting::new(6, None).is_err());
        assert_eq!(
            SettingSpec::constant(Setting::Two, 20, 5, 5, 5, 0).unwrap_err(),
            Error::UnsupportedDimension { setting: 2, d: 20 }
        );
        assert!(SettingSpec::constant(Setting::One, 20, 5, 5, 5, 0).is_ok());
        assert!(SettingSpec::constant(Setting::One, 7, 5, 5, 5, 0).is_err());
        assert!(SettingSpec::new(Setting::One, 5, 3, SizeRule::PerGroup(vec![(5, 5); 2]), 0).is_err());
    }

    #[test]
    fn replicate_is_deterministic_and_sized() {
        let spec = SettingSpec::new(Setting::Five, 10, 30, SizeRule::PerGroup((0..30).map(|r| (4 + r, 7)).collect()), 9).unwrap();
        let (a, _) = generate_replicate(&spec, 3).unwrap();
        let (b, _) = generate_replicate(&spec, 3).unwrap();
        let (c, _) = generate_replicate(&spec, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (r, g) in a.groups().iter().enumerate() {
            assert_eq!((g.sample1().total(), g.sample2().total()), (4 + r as u64, 7));
        }
    }

    #[test]
    fn truth_bookkeeping() {
        for setting in [Setting::One, Setting::Two] {
            let spec = SettingSpec::constant(setting, 5, 200, 5, 5, 1).unwrap();
            let (_, null) = generate_replicate(&spec, 0).unwrap();
            assert!(null.iter().all(|&n| n));
        }
        for setting in [Setting::Three(Pi0::Pi4), Setting::Four(Pi0::Pi2)] {
            let spec = SettingSpec::constant(setting, 5, 1000, 2, 2, 5).unwrap();
            let mut alt = 0usize;
            let reps = 100;
            for rep in 0..reps {
                alt += generate_replicate(&spec, rep).unwrap().1.iter().filter(|n| !**n).count();
            }
            let total = (reps as usize * 1000) as f64;
            let se = (0.2 * 0.8 / total).sqrt();
            assert!((alt as f64 / total - 0.2).abs() < 3.0 * se, "{setting}: {}", alt as f64 / total);
        }
    }

    #[test]
    fn setting3_alternative_is_pi1_vs_pi0() {
        let spec = SettingSpec::constant(Setting::Three(Pi0::Pi4), 5, 50, 3, 3, 2).unwrap();
        let design = Design::new(&spec).unwrap();
        let lib = PiLibrary::new(5).unwrap();
        let mut rng = stream(0, 0, 0, Phase::Data);
        for _ in 0..1000 {
            let (a, b) = design.draw(&mut rng);
            if a != b {
                assert_eq!(&design.table[a], lib.get(1));
                assert_eq!(&design.table[b], lib.get(4));
            }
        }
        let spec4 = SettingSpec::constant(Setting::Four(Pi0::Pi2), 5, 50, 3, 3, 2).unwrap();
        let d4 = Design::new(&spec4).unwrap();
        assert_eq!(d4.table[5], lib.get(2).reversed());
    }

    #[test]
    fn determinism_across_workers() {
        let spec = SettingSpec::constant(Setting::Four(Pi0::Pi4), 5, 40, 5, 10, 77).unwrap();
        let procs = [
            Procedure::Test(Estimator::Test1),
            Procedure::Test(Estimator::Test5),
            Procedure::Test(Estimator::Test7),
            Procedure::Wk,
            Procedure::Vk,
            Procedure::Chi2Pooled,
            Procedure::MinP,
        ];
        let o = RunOptions {
            bootstrap_b: 20,
            pergroup_b: 20,
            ..opts(1)
        };
        let base = estimate_rejection_rate(&spec, &procs, 60, o).unwrap();
        for w in [2, 8] {
            let other = estimate_rejection_rate(&spec, &procs, 60, RunOptions { workers: w, ..o }).unwrap();
            for (a, b) in base.iter().zip(&other) {
                assert_eq!((a.rejections, a.degenerate), (b.rejections, b.degenerate));
            }
        }
    }

    #[test]
    fn fast_path_matches_dataset_path() {
        let spec = SettingSpec::constant(Setting::Five, 5, 25, 5, 6, 3).unwrap();
        let procs: Vec<Procedure> = Estimator::ALL.iter().map(|&e| Procedure::Test(e)).collect();
        let o = RunOptions { bootstrap_b: 30, ..opts(1) };
        let zcrit = critical_value(0.05).unwrap();
        let mut want = vec![0usize; procs.len()];
        for rep in 0..40u64 {
            let (ds, _) = generate_replicate(&spec, rep).unwrap();
            for (i, e) in Estimator::ALL.iter().enumerate() {
                let r = crate::decision::run_global_test_with(
                    &ds,
                    *e,
                    crate::decision::GlobalTestOptions {
                        alpha: 0.05,
                        seed: Some(derive_seed(spec.seed, rep, TAG_TEST7)),
                        b: 30,
                    },
                )
                .unwrap();
                assert_eq!(r.reject, r.z.map_or(r.statistic > 0.0, |z| z >= zcrit));
                want[i] += usize::from(r.reject);
            }
        }
        let got = estimate_rejection_rate(&spec, &procs, 40, o).unwrap();
        for (g, w) in got.iter().zip(want) {
            assert_eq!(g.rejections, w, "{}", g.procedure);
        }
    }

    #[test]
    fn preconditions_abort_the_cell() {
        let spec = SettingSpec::constant(Setting::One, 5, 10, 3, 10, 0).unwrap();
        let err = estimate_rejection_rate(&spec, &[Procedure::Test(Estimator::Test1)], 10, opts(1)).unwrap_err();
        assert!(err.is_precondition());
        assert!(estimate_rejection_rate(&spec, &[Procedure::Test(Estimator::Test2)], 10, opts(1)).is_ok());
        assert_eq!(
            estimate_rejection_rate(&spec, &[Procedure::Wk], 0, opts(1)).unwrap_err(),
            Error::InvalidReps(0)
        );
        let alt = SettingSpec::constant(Setting::Five, 5, 10, 5, 10, 0).unwrap();
        assert!(estimate_rejection_rate(&alt, &[Procedure::WkPrime], 10, opts(1)).is_err());
    }

    #[test]
    fn power_grows_with_k() {
        let rate = |k| {
            let spec = SettingSpec::constant(Setting::Three(Pi0::Pi4), 5, k, 30, 30, 8).unwrap();
            estimate_rejection_rate(&spec, &[Procedure::Test(Estimator::Test1)], 400, opts(1)).unwrap()[0].rate
        };
        let (a, b, c) = (rate(20), rate(50), rate(200));
        assert!(a <= b && b <= c, "{a} {b} {c}");
        assert!(c > 0.95);
    }

    #[test]
    fn mc_result_fields() {
        let spec = SettingSpec::constant(Setting::Two, 5, 20, 5, 10, 4).unwrap();
        let res = estimate_rejection_rate(&spec, &[Procedure::WkPrime, Procedure::Wk], 200, opts(1)).unwrap();
        assert_eq!(res[0].moments, Some(MomentPath::Exact));
        assert_eq!(res[1].moments, None);
        for r in &res {
            assert!((0.0..=1.0).contains(&r.rate));
            assert!((r.se - (r.rate * (1.0 - r.rate) / 200.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn layouts_have_expected_shape() {
        let l = table_layout(TableId::Tab8);
        assert_eq!(l.blocks.len(), 72);
        assert_eq!(table_layout(TableId::Tab2).blocks.len(), 24);
        assert_eq!(table_layout(TableId::Power1).blocks.len(), 60);
        assert_eq!(table_layout(TableId::Power3).blocks.len(), 30);
        assert_eq!(table_layout(TableId::PowerCm).blocks.len(), 150);
        for t in TableId::ALL {
            assert_eq!(t.id().parse::<TableId>().unwrap(), t);
        }
        assert!("tab9".parse::<TableId>().is_err());
    }

    #[test]
    fn small_table_artifact() {
        let mut layout = table_layout(TableId::Tab2);
        layout.blocks.retain(|b| b.k == 20 && b.n1 == 30);
        let art = run_layout(
            TableId::Tab2,
            &layout,
            TableOptions {
                reps: 50,
                seed: 1,
                run: opts(1),
            },
        )
        .unwrap();
        assert_eq!(art.value_columns, ["test1", "test2", "test3"]);
        assert!(art.get(&["20", "30", "30"], "test2").is_some());
        let mut csv = Vec::new();
        art.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("k,n1,n2,test1,test1_se,test2,test2_se,test3,test3_se\n20,30,30,"));
        let mut json = Vec::new();
        art.write_sidecar(&mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["reps"], 50);
        assert_eq!(v["table"], "tab2");
    }

    #[test]
    fn benchmark_lists_every_estimator() {
        let rows = benchmark_statistics(&[10], &[5], 30, 30, 3, 1).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().all(|r| r.median_seconds >= 0.0));
    }
}
