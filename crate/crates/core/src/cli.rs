//! Command-line interface.
//!
//! Exit codes: 0 on success (whatever the test decision), 2 on input or
//! validation errors, 3 when an estimator's sample-size requirement fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::counts::{read_dataset, write_dataset, GroupedDataset};
use crate::decision::{
    check_alpha, pergroup_bootstrap_pvalues, pergroup_global_decision, pooled_chi_square, run_global_test_with,
    GlobalTestOptions, PerGroupResult, PooledChiSquare, TestReport, DEFAULT_PERGROUP_B,
};
use crate::rng::entropy_seed;
use crate::sim::{
    benchmark_statistics, estimate_rejection_rate, generate_replicate, reproduce_table, Pi0, Procedure, RunOptions,
    Setting, SettingSpec, TableId, TableOptions, DEFAULT_REPS, DEFAULT_SIM_MOMENT_REPS,
};
use crate::ustat::group_stats;
use crate::variance::{Estimator, DEFAULT_BOOTSTRAP_B};
use crate::{Error, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mhomog", version, about = "Homogeneity tests for many groups of paired multinomial samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global test of homogeneity in every group.
    Test(TestArgs),
    /// Per-group bootstrap tests with BH and Bonferroni adjustment.
    Pergroup(PergroupArgs),
    /// Monte Carlo level/power for one design, or a whole table.
    Simulate(SimulateArgs),
    /// Time the statistic and every variance estimator.
    Bench(BenchArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Master seed; drawn from system entropy and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Worker threads.
    #[arg(long, env = "MH_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV with columns `group,population,c1,...,cd`.
    #[arg(long, short)]
    pub input: PathBuf,
    /// `1`..`7`, a comma-separated list, or `all`.
    #[arg(long, default_value = "1")]
    pub estimator: String,
    /// Bootstrap samples for Test 7.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_B)]
    pub b: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PergroupArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Bootstrap replications per group.
    #[arg(long, default_value_t = DEFAULT_PERGROUP_B)]
    pub b: usize,
    /// Use `(#{T* ≥ T} + 1) / (B + 1)` instead of `#{T* > T} / B`.
    #[arg(long)]
    pub smoothed: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Regenerate a table instead of a single design.
    #[arg(long, conflicts_with_all = ["setting", "k", "d", "sizes", "pi0"])]
    pub table: Option<String>,
    #[arg(long)]
    pub setting: Option<u8>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// `n1,n2` used in every group.
    #[arg(long)]
    pub sizes: Option<String>,
    /// `pi2` or `pi4` for settings 3 and 4.
    #[arg(long)]
    pub pi0: Option<String>,
    /// Comma-separated procedures: `1`..`7`, `all`, wk, wk_prime, vk,
    /// vk_prime, chi2, minp.
    #[arg(long, default_value = "1,2,3")]
    pub procedures: String,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Bootstrap samples for Test 7.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_B)]
    pub b: usize,
    /// Bootstrap replications per group for minp.
    #[arg(long, default_value_t = DEFAULT_PERGROUP_B)]
    pub pergroup_b: usize,
    /// Monte Carlo replicates for null moments that cannot be enumerated.
    #[arg(long, default_value_t = DEFAULT_SIM_MOMENT_REPS)]
    pub moment_reps: usize,
    /// Directory for `<name>.csv` and `<name>.json`; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 50, 100, 200, 500, 750])]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20])]
    pub d: Vec<usize>,
    #[arg(long, default_value = "30,30")]
    pub sizes: String,
    /// Timed runs per grid point; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub setting: u8,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub sizes: String,
    #[arg(long)]
    pub pi0: Option<String>,
    /// Replicate index within the seeded stream.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Io(e.to_string()))
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a, &mut io),
        Command::Pergroup(a) => cmd_pergroup(a, &mut io),
        Command::Simulate(a) => cmd_simulate(a, &mut io),
        Command::Bench(a) => cmd_bench(a, &mut io),
        Command::Generate(a) => cmd_generate(a, &mut io),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Lib(e)) => {
            let _ = writeln!(io.err, "error: {e}");
            if e.is_precondition() {
                EXIT_PRECONDITION
            } else {
                EXIT_INPUT
            }
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(io.err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn load(path: &Path) -> std::result::Result<GroupedDataset, Failure> {
    let f = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(read_dataset(BufReader::new(f))?)
}

fn resolve_seed(seed: Option<u64>, io: &mut Io) -> std::result::Result<u64, Failure> {
    Ok(match seed {
        Some(s) => s,
        None => {
            let s = entropy_seed();
            writeln!(io.err, "seed: {s}")?;
            s
        }
    })
}

fn workers(w: Option<usize>) -> std::result::Result<usize, Failure> {
    match w {
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(RunOptions::default().workers),
    }
}

fn install<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> std::result::Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn parse_estimators(s: &str) -> std::result::Result<Vec<Estimator>, Failure> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Estimator::ALL.to_vec());
    }
    let mut v: Vec<Estimator> = s.split(',').map(str::parse).collect::<Result<_, _>>()?;
    v.dedup();
    Ok(v)
}

fn parse_procedures(s: &str) -> std::result::Result<Vec<Procedure>, Failure> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(Estimator::ALL.map(Procedure::Test));
        } else {
            out.push(part.parse()?);
        }
    }
    out.dedup();
    Ok(out)
}

fn parse_sizes(s: &str) -> std::result::Result<(u64, u64), Failure> {
    let bad = || Failure::Usage(format!("sizes must look like `n1,n2`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_setting(id: u8, pi0: Option<&str>) -> std::result::Result<Setting, Failure> {
    let pi0 = pi0.map(str::parse::<Pi0>).transpose()?;
    Ok(Setting::new(id, pi0)?)
}

#[derive(Serialize)]
struct TestDocument<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    alpha: f64,
    estimators: Vec<&'static str>,
    k: usize,
    d: usize,
    reports: &'a [TestReport],
    chi2: PooledChiSquare,
}

fn cmd_test(a: TestArgs, io: &mut Io) -> CliResult {
    check_alpha(a.common.alpha)?;
    let ests = parse_estimators(&a.estimator)?;
    let ds = load(&a.input)?;
    let seed = resolve_seed(a.common.seed, io)?;
    let w = workers(a.common.workers)?;
    let opts = GlobalTestOptions {
        alpha: a.common.alpha,
        seed: Some(seed),
        b: a.b,
    };
    let reports: Vec<TestReport> = install(w, || {
        ests.iter()
            .map(|&e| run_global_test_with(&ds, e, opts))
            .collect::<crate::Result<_>>()
    })??;
    let chi2 = pooled_chi_square(&ds);
    match a.common.format {
        Format::Json => {
            let doc = TestDocument {
                tool: env!("CARGO_PKG_NAME"),
                version: VERSION,
                seed,
                alpha: a.common.alpha,
                estimators: ests.iter().map(|e| e.id()).collect(),
                k: ds.k(),
                d: ds.dim(),
                reports: &reports,
                chi2,
            };
            serde_json::to_writer_pretty(&mut *io.out, &doc)?;
            writeln!(io.out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *io.out);
            let csv_err = |e: csv::Error| Failure::Lib(Error::Io(e.to_string()));
            w.write_record(["test", "statistic", "variance", "z", "p_value", "reject", "degenerate"])
                .map_err(csv_err)?;
            for r in &reports {
                w.write_record([
                    r.estimator.id().to_string(),
                    r.statistic.to_string(),
                    r.variance_estimate.value.to_string(),
                    r.z.map_or(String::new(), |z| z.to_string()),
                    r.p_value.to_string(),
                    r.reject.to_string(),
                    r.degenerate_variance.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.write_record([
                "chi2".to_string(),
                chi2.statistic.to_string(),
                String::new(),
                String::new(),
                chi2.p_value.to_string(),
                (chi2.p_value <= a.common.alpha).to_string(),
                "false".to_string(),
            ])
            .map_err(csv_err)?;
            w.flush()?;
        }
        Format::Human => {
            writeln!(io.out, "k = {}, d = {}, alpha = {}, seed = {seed}", ds.k(), ds.dim(), a.common.alpha)?;
            for r in &reports {
                let z = r.z.map_or("-".to_string(), |z| format!("{z:.4}"));
                let flag = if r.degenerate_variance { "  [degenerate variance]" } else { "" };
                writeln!(
                    io.out,
                    "{:<6} T_U = {:>10.6}  var = {:>10.6}  z = {:>8}  p = {:.4}  {}{flag}",
                    r.estimator.id(),
                    r.statistic,
                    r.variance_estimate.value,
                    z,
                    r.p_value,
                    if r.reject { "reject" } else { "do not reject" },
                )?;
            }
            writeln!(
                io.out,
                "chi2   (no grouping) X2 = {:.4} on {} df  p = {:.4}",
                chi2.statistic, chi2.df, chi2.p_value
            )?;
            let mut stats = group_stats(&ds)?;
            stats.sort_by(|x, y| y.t_u.total_cmp(&x.t_u));
            writeln!(io.out, "largest group contributions:")?;
            for s in stats.iter().take(5) {
                writeln!(io.out, "  {:<20} {:.6}", s.group_id, s.t_u)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PergroupDocument<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    alpha: f64,
    estimators: [&'static str; 1],
    b: usize,
    smoothed: bool,
    global_reject: bool,
    rejections_raw: usize,
    rejections_bh: usize,
    rejections_bonferroni: usize,
    degenerate_groups: usize,
    groups: &'a [PerGroupResult],
}

fn cmd_pergroup(a: PergroupArgs, io: &mut Io) -> CliResult {
    let alpha = a.common.alpha;
    check_alpha(alpha)?;
    let ds = load(&a.input)?;
    let seed = resolve_seed(a.common.seed, io)?;
    let w = workers(a.common.workers)?;
    let res = install(w, || pergroup_bootstrap_pvalues(&ds, a.b, seed, a.smoothed))??;
    let global = pergroup_global_decision(&res, alpha)?;
    let count = |f: fn(&PerGroupResult) -> f64| res.iter().filter(|r| f(r) <= alpha).count();
    let (raw, bh, bonf) = (count(|r| r.p_raw), count(|r| r.p_bh), count(|r| r.p_bonferroni));
    let degenerate = res.iter().filter(|r| r.degenerate).count();
    match a.common.format {
        Format::Json => {
            let doc = PergroupDocument {
                tool: env!("CARGO_PKG_NAME"),
                version: VERSION,
                seed,
                alpha,
                estimators: ["group_bootstrap"],
                b: a.b,
                smoothed: a.smoothed,
                global_reject: global,
                rejections_raw: raw,
                rejections_bh: bh,
                rejections_bonferroni: bonf,
                degenerate_groups: degenerate,
                groups: &res,
            };
            serde_json::to_writer_pretty(&mut *io.out, &doc)?;
            writeln!(io.out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *io.out);
            let csv_err = |e: csv::Error| Failure::Lib(Error::Io(e.to_string()));
            w.write_record(["group", "statistic", "p_raw", "p_bh", "p_bonferroni", "degenerate"])
                .map_err(csv_err)?;
            for r in &res {
                w.write_record([
                    r.group_id.clone(),
                    r.statistic.to_string(),
                    r.p_raw.to_string(),
                    r.p_bh.to_string(),
                    r.p_bonferroni.to_string(),
                    r.degenerate.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Human => {
            writeln!(io.out, "k = {}, B = {}, alpha = {alpha}, seed = {seed}", ds.k(), a.b)?;
            writeln!(io.out, "{:<20} {:>10} {:>8} {:>8} {:>8}", "group", "T_U_r", "p", "p_bh", "p_bonf")?;
            for r in &res {
                let flag = if r.degenerate { "  [degenerate]" } else { "" };
                writeln!(
                    io.out,
                    "{:<20} {:>10.6} {:>8.4} {:>8.4} {:>8.4}{flag}",
                    r.group_id, r.statistic, r.p_raw, r.p_bh, r.p_bonferroni
                )?;
            }
            writeln!(io.out, "rejections at alpha: raw {raw}, BH {bh}, Bonferroni {bonf}")?;
            writeln!(
                io.out,
                "global min-p decision: {}",
                if global { "reject" } else { "fail to reject" }
            )?;
        }
    }
    Ok(())
}

fn emit_artifact(
    name: &str,
    format: Format,
    out_dir: Option<&Path>,
    csv: impl Fn(&mut dyn Write) -> crate::Result<()>,
    json: impl Fn(&mut dyn Write) -> crate::Result<()>,
    human: impl Fn(&mut dyn Write) -> std::io::Result<()>,
    io: &mut Io,
) -> CliResult {
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let csv_path = dir.join(format!("{name}.csv"));
            let json_path = dir.join(format!("{name}.json"));
            csv(&mut File::create(&csv_path)?)?;
            json(&mut File::create(&json_path)?)?;
            writeln!(io.err, "wrote {} and {}", csv_path.display(), json_path.display())?;
            if format == Format::Human {
                human(io.out)?;
            }
        }
        None => match format {
            Format::Csv => csv(io.out)?,
            Format::Json => {
                json(io.out)?;
                writeln!(io.out)?;
            }
            Format::Human => human(io.out)?,
        },
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateDocument<'a> {
    tool: &'static str,
    version: &'static str,
    build: &'static str,
    seed: u64,
    alpha: f64,
    estimators: Vec<&'static str>,
    spec: &'a SettingSpec,
    reps: usize,
    results: &'a [crate::sim::MCResult],
}

fn cmd_simulate(a: SimulateArgs, io: &mut Io) -> CliResult {
    let alpha = a.common.alpha;
    check_alpha(alpha)?;
    if a.reps == Some(0) {
        return Err(Error::InvalidReps(0).into());
    }
    let run = RunOptions {
        alpha,
        workers: workers(a.common.workers)?,
        bootstrap_b: a.b,
        pergroup_b: a.pergroup_b,
        moment_reps: a.moment_reps,
    };
    if let Some(t) = &a.table {
        let id: TableId = t.parse()?;
        let seed = resolve_seed(a.common.seed, io)?;
        let reps = a.reps.unwrap_or(id.default_reps());
        let art = reproduce_table(id, TableOptions { reps, seed, run })?;
        return emit_artifact(
            id.id(),
            a.common.format,
            a.out.as_deref(),
            |w| art.write_csv(w),
            |w| art.write_sidecar(w),
            |w| {
                let mut header = art.key_columns.join("  ");
                for c in &art.value_columns {
                    header.push_str(&format!("  {c:>10}"));
                }
                writeln!(w, "{header}")?;
                for (key, values) in &art.rows {
                    let mut line = key.join("  ");
                    for v in values {
                        match v {
                            Some((rate, _)) => line.push_str(&format!("  {rate:>10.3}")),
                            None => line.push_str(&format!("  {:>10}", "-")),
                        }
                    }
                    writeln!(w, "{line}")?;
                }
                writeln!(w, "reps = {}, seed = {}, wall = {:.1}s", art.sidecar.reps, art.sidecar.seed, art.sidecar.wall_seconds)
            },
            io,
        );
    }
    let missing = |f: &str| Failure::Usage(format!("--{f} is required without --table"));
    let setting = parse_setting(a.setting.ok_or_else(|| missing("setting"))?, a.pi0.as_deref())?;
    let d = a.d.ok_or_else(|| missing("d"))?;
    let k = a.k.ok_or_else(|| missing("k"))?;
    let (n1, n2) = parse_sizes(a.sizes.as_deref().ok_or_else(|| missing("sizes"))?)?;
    let procs = parse_procedures(&a.procedures)?;
    let seed = resolve_seed(a.common.seed, io)?;
    let spec = SettingSpec::constant(setting, d, k, n1, n2, seed)?;
    let reps = a.reps.unwrap_or(DEFAULT_REPS);
    let results = estimate_rejection_rate(&spec, &procs, reps, run)?;
    let name = format!("setting{}_d{d}_k{k}_{n1}_{n2}", setting.id());
    let doc = SimulateDocument {
        tool: env!("CARGO_PKG_NAME"),
        version: VERSION,
        build: crate::BUILD_DESCRIBE,
        seed,
        alpha,
        estimators: procs.iter().map(|p| p.id()).collect(),
        spec: &spec,
        reps,
        results: &results,
    };
    emit_artifact(
        &name,
        a.common.format,
        a.out.as_deref(),
        |w| {
            let mut c = csv::Writer::from_writer(w);
            let e = |e: csv::Error| Error::Io(e.to_string());
            c.write_record(["procedure", "rate", "se", "reps", "rejections", "degenerate"]).map_err(e)?;
            for r in &results {
                c.write_record([
                    r.procedure.id().to_string(),
                    r.rate.to_string(),
                    r.se.to_string(),
                    r.reps.to_string(),
                    r.rejections.to_string(),
                    r.degenerate.to_string(),
                ])
                .map_err(e)?;
            }
            c.flush()?;
            Ok(())
        },
        |w| serde_json::to_writer_pretty(w, &doc).map_err(|e| Error::Io(e.to_string())),
        |w| {
            writeln!(w, "{setting}, d = {d}, k = {k}, (n1, n2) = ({n1}, {n2}), reps = {reps}, seed = {seed}")?;
            for r in &results {
                let degenerate = if r.degenerate > 0 { format!("  ({} degenerate)", r.degenerate) } else { String::new() };
                writeln!(w, "{:<9} rate = {:.4}  se = {:.4}{degenerate}", r.procedure.id(), r.rate, r.se)?;
            }
            writeln!(w, "wall = {:.2}s", results.first().map_or(0.0, |r| r.wall_seconds))
        },
        io,
    )
}

fn cmd_bench(a: BenchArgs, io: &mut Io) -> CliResult {
    let (n1, n2) = parse_sizes(&a.sizes)?;
    let seed = resolve_seed(a.common.seed, io)?;
    let w = workers(a.common.workers)?;
    let rows = install(w, || benchmark_statistics(&a.k, &a.d, n1, n2, a.reps, seed))??;
    match a.common.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *io.out, &rows)?;
            writeln!(io.out)?;
        }
        Format::Csv => {
            writeln!(io.out, "k,d,n1,n2,estimator,median_seconds")?;
            for r in &rows {
                writeln!(io.out, "{},{},{},{},{},{}", r.k, r.d, r.n1, r.n2, r.estimator, r.median_seconds)?;
            }
        }
        Format::Human => {
            for r in &rows {
                writeln!(
                    io.out,
                    "d = {:<3} k = {:<5} {:<6} {:>12.3} µs",
                    r.d,
                    r.k,
                    r.estimator.id(),
                    r.median_seconds * 1e6
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs, io: &mut Io) -> CliResult {
    let setting = parse_setting(a.setting, a.pi0.as_deref())?;
    let (n1, n2) = parse_sizes(&a.sizes)?;
    let seed = resolve_seed(a.seed, io)?;
    let spec = SettingSpec::constant(setting, a.d, a.k, n1, n2, seed)?;
    let (ds, _) = generate_replicate(&spec, a.replicate)?;
    match &a.output {
        Some(p) => write_dataset(&ds, File::create(p)?)?,
        None => write_dataset(&ds, &mut *io.out)?,
    }
    Ok(())
}
