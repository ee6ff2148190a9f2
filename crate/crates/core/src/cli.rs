//! Command-line front end: configuration, the six commands, and report
//! output in JSON, CSV or plain text.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or configuration
//! error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactlin::{count_below_threshold, singular_values, AMBIGUITY_BAND, DEFAULT_KERNEL_TOL};
use crate::gradedbasis::{enumerate_block, BlockKey, ComplexKind, Sector};
use crate::hodge::{Hodge, HarmonicBasis, DEFAULT_IDENTITY_TOL};
use crate::koszul::{cohomology_table, dbar_exact, Backend, Bounds, CohomologyTable};
use crate::liealg::{build_algebra, compact_basis, AlgebraName, LieAlgebraData};
use crate::macdonald::{
    compare_series, corrupt_series, delta1_cokernel, predicted_iwahori_series, predicted_super_series,
    predicted_truncated_series, GradedSeries,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s, true).map_err(|_| Error::Config(format!("unknown format `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Numeric,
}

fn parse_backend(s: &str) -> Result<Backend> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(Backend::Exact),
        "numeric" => Ok(Backend::Numeric),
        _ => Err(Error::Config(format!("unknown backend `{s}`"))),
    }
}

#[derive(Debug, Parser)]
#[command(name = "currentcoh", version, about = "Cohomology of truncated and super current algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Cohomology of g[z]/z^n against the predicted exterior algebra.
    Truncated,
    /// Relative cohomology of g[z, s] against the predicted free algebra.
    Super,
    /// Laplacian identities, harmonic forms and their products.
    Hodge,
    /// Kernel and cokernel of the first spectral-sequence differential.
    Spectral,
    /// Relative cohomology of the Iwahori pair against its factorization.
    Iwahori,
    /// Re-check the verdict of a JSON report.
    Verify {
        /// Report written by an earlier run with `--format json`.
        report: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Truncated => "truncated",
            Command::Super => "super",
            Command::Hodge => "hodge",
            Command::Spectral => "spectral",
            Command::Iwahori => "iwahori",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Flags shared by all commands. Unset flags fall back to the config file,
/// then to per-command defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// sl2, sl3, sl4, gl2, gl3, ...
    #[arg(long, global = true)]
    pub algebra: Option<String>,
    /// Truncation order of g[z]/z^n (spectral: the n of the column).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Exponent m (spectral only).
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long = "max-d", global = true)]
    pub max_d: Option<usize>,
    #[arg(long = "max-p", global = true)]
    pub max_p: Option<usize>,
    #[arg(long = "max-weight", global = true)]
    pub max_weight: Option<usize>,
    /// Largest source power z^k (spectral only).
    #[arg(long = "max-k", global = true)]
    pub max_k: Option<usize>,
    /// Identity tolerance (hodge) or kernel threshold (numeric backend).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Kernel threshold for harmonic forms (hodge).
    #[arg(long = "kernel-tol", global = true)]
    pub kernel_tol: Option<f64>,
    #[arg(long, value_enum, global = true)]
    pub backend: Option<BackendArg>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key=value or JSON file of defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Negative control: raise one predicted coefficient by one.
    #[arg(long, global = true)]
    pub corrupt: bool,
    /// Hodge: only the closed-form coefficients on linear germs.
    #[arg(long = "linear-germs", global = true)]
    pub linear_germs: bool,
}

/// Fully resolved configuration, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub algebra: String,
    pub n: usize,
    pub m: usize,
    pub max_d: usize,
    pub max_p: usize,
    pub max_w: usize,
    pub max_k: usize,
    pub tol: f64,
    pub kernel_tol: f64,
    pub backend: Backend,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub corrupt: bool,
    pub linear_germs: bool,
}

/// Read a config file: a JSON object, or `key = value` lines (`#`
/// comments). Keys may use `-` or `_`.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = HashMap::new();
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("config JSON must be an object".into()))?;
        for (k, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.insert(k.replace('-', "_"), s);
        }
    } else {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", i + 1)))?;
            out.insert(k.trim().replace('-', "_"), v.trim().trim_matches('"').to_string());
        }
    }
    const KNOWN: [&str; 15] = [
        "algebra", "n", "m", "max_d", "max_p", "max_weight", "max_w", "max_k", "tol", "kernel_tol", "backend",
        "format", "out", "threads", "corrupt",
    ];
    for k in out.keys() {
        if !KNOWN.contains(&k.as_str()) && k != "linear_germs" {
            return Err(Error::Config(format!("unknown config key `{k}`")));
        }
    }
    Ok(out)
}

struct Layered<'a> {
    file: &'a HashMap<String, String>,
}

impl Layered<'_> {
    fn pick<T: FromStr>(&self, flag: Option<T>, keys: &[&str]) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        for k in keys {
            if let Some(v) = self.file.get(*k) {
                return v
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::Config(format!("config key `{k}`: cannot parse `{v}`")));
            }
        }
        Ok(None)
    }
}

impl RunConfig {
    /// Merge flags, config file and per-command defaults, then validate.
    pub fn resolve(command: &Command, o: &Options) -> Result<RunConfig> {
        let file = match &o.config {
            Some(p) => read_config_file(p)?,
            None => HashMap::new(),
        };
        let l = Layered { file: &file };
        let algebra: String = l.pick(o.algebra.clone(), &["algebra"])?.unwrap_or_else(|| "sl2".into());
        let name: AlgebraName = algebra.parse()?;
        let dim = build_algebra(name)?.dim();
        let n = l.pick(o.n, &["n"])?;
        let m = l.pick(o.m, &["m"])?.unwrap_or(1);
        let max_d = l.pick(o.max_d, &["max_d"])?;
        let max_p = l.pick(o.max_p, &["max_p"])?;
        let max_w = l.pick(o.max_weight, &["max_weight", "max_w"])?;
        let (n, max_d, max_p, max_w) = match command {
            Command::Truncated => {
                let n = n.unwrap_or(2);
                if n == 0 {
                    return Err(Error::Config("--n must be at least 1".into()));
                }
                (n, max_d.unwrap_or(dim * n), 0, max_w.unwrap_or(dim * n * (n - 1) / 2))
            }
            Command::Super => (n.unwrap_or(0), max_d.unwrap_or(2), max_p.unwrap_or(3), max_w.unwrap_or(4)),
            Command::Hodge => {
                let w = max_w.unwrap_or(6);
                (n.unwrap_or(0), max_d.unwrap_or(w), max_p.unwrap_or(2), w)
            }
            Command::Iwahori => (n.unwrap_or(0), max_d.unwrap_or(1), max_p.unwrap_or(2), max_w.unwrap_or(2)),
            Command::Spectral => (n.unwrap_or(2), 0, 0, 0),
            Command::Verify { .. } => (n.unwrap_or(0), 0, 0, 0),
        };
        let default_tol = if *command == Command::Hodge {
            DEFAULT_IDENTITY_TOL
        } else {
            DEFAULT_KERNEL_TOL
        };
        let tol = l.pick(o.tol, &["tol"])?.unwrap_or(default_tol);
        let kernel_tol = l.pick(o.kernel_tol, &["kernel_tol"])?.unwrap_or(DEFAULT_KERNEL_TOL);
        for (label, t) in [("tol", tol), ("kernel-tol", kernel_tol)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("--{label} must be positive and finite, got {t}")));
            }
        }
        let backend = match o.backend {
            Some(BackendArg::Exact) => Backend::Exact,
            Some(BackendArg::Numeric) => Backend::Numeric,
            None => match file.get("backend") {
                Some(s) => parse_backend(s)?,
                None if *command == Command::Hodge => Backend::Numeric,
                None => Backend::Exact,
            },
        };
        let format = l.pick(o.format, &["format"])?.unwrap_or(Format::Text);
        let out = l.pick(o.out.clone(), &["out"])?;
        let threads = l
            .pick(o.threads, &["threads"])?
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let corrupt = o.corrupt || l.pick(None, &["corrupt"])?.unwrap_or(false);
        let linear_germs = o.linear_germs || l.pick(None, &["linear_germs"])?.unwrap_or(false);
        Ok(RunConfig {
            command: command.name().into(),
            algebra: name.to_string(),
            n,
            m,
            max_d,
            max_p,
            max_w,
            max_k: l.pick(o.max_k, &["max_k"])?.unwrap_or(8),
            tol,
            kernel_tol,
            backend,
            format,
            out,
            threads,
            corrupt,
            linear_germs,
        })
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.max_d, self.max_p, self.max_w)
    }

    pub fn algebra_data(&self) -> Result<LieAlgebraData> {
        build_algebra(self.algebra.parse()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One check on one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub check: String,
    pub block: BlockKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_computed: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_predicted: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ResultRow {
    fn dims(check: &str, block: BlockKey, computed: i64, predicted: i64) -> Self {
        ResultRow {
            check: check.into(),
            block,
            dim_computed: Some(computed),
            dim_predicted: Some(predicted),
            deviation: None,
            tolerance: None,
        }
    }

    fn deviation(check: &str, block: BlockKey, deviation: f64, tolerance: f64) -> Self {
        ResultRow {
            check: check.into(),
            block,
            dim_computed: None,
            dim_predicted: None,
            deviation: Some(deviation),
            tolerance: Some(tolerance),
        }
    }

    pub fn passes(&self) -> bool {
        let dims_ok = match (self.dim_computed, self.dim_predicted) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        };
        let dev_ok = match (self.deviation, self.tolerance) {
            (Some(d), Some(t)) => d <= t,
            (Some(d), None) => d.is_finite(),
            _ => true,
        };
        dims_ok && dev_ok
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub results: Vec<ResultRow>,
    pub verdict: Verdict,
    /// Command-specific data: embedded tables and series, maxima, reports.
    pub summary: serde_json::Value,
    pub timings: Timings,
}

/// Verdict recomputed from the rows, and from the embedded table and
/// prediction when both are present.
pub fn recompute_verdict(report: &Report) -> Result<Verdict> {
    let mut ok = report.results.iter().all(ResultRow::passes);
    if let (Some(t), Some(p)) = (report.summary.get("table"), report.summary.get("predicted")) {
        let table: CohomologyTable = serde_json::from_value(t.clone())?;
        let predicted: GradedSeries = serde_json::from_value(p.clone())?;
        ok &= compare_series(&table, &predicted)?.is_empty();
    }
    Ok(if ok { Verdict::Pass } else { Verdict::Fail })
}

fn finish(config: &RunConfig, mut results: Vec<ResultRow>, summary: serde_json::Value, start: Instant) -> Report {
    results.sort_by(|a, b| a.block.cmp(&b.block).then_with(|| a.check.cmp(&b.check)));
    let verdict = if results.iter().all(ResultRow::passes) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Report {
        tool: "currentcoh".into(),
        version: VERSION.into(),
        config: config.clone(),
        results,
        verdict,
        summary,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        },
    }
}

/// Cohomology of an absolute complex from numeric ranks of the exact
/// differentials.
pub fn numeric_table(alg: &LieAlgebraData, kind: ComplexKind, bounds: Bounds, tol: f64) -> Result<CohomologyTable> {
    let mut table = cohomology_table(alg, kind, Bounds::new(0, 0, 0));
    table.bounds = bounds;
    table.entries.clear();
    table.cochain_dims.clear();
    let max_p = if kind.has_sigma() { bounds.max_p } else { 0 };
    let columns: Vec<(usize, usize)> = (0..=max_p).flat_map(|p| (0..=bounds.max_w).map(move |w| (p, w))).collect();
    let results: Vec<Vec<(BlockKey, usize, usize)>> = columns
        .par_iter()
        .map(|&(p, w)| -> Result<Vec<(BlockKey, usize, usize)>> {
            let mut ranks = Vec::new();
            let mut dims = Vec::new();
            for d in 0..=bounds.max_d {
                let key = BlockKey::new(d, p, w);
                let dim = enumerate_block(alg, kind, key, Sector::ZeroWeight).dim();
                let op = dbar_exact(alg, kind, key, Sector::ZeroWeight)?;
                let m = op.matrix.to_complex();
                let rank = if m.rows() == 0 || m.cols() == 0 {
                    0
                } else {
                    let sv = singular_values(&m)?;
                    let scale = sv.iter().copied().fold(0.0, f64::max);
                    sv.len() - count_below_threshold(&sv, scale, tol, AMBIGUITY_BAND)?
                };
                dims.push(dim);
                ranks.push(rank);
            }
            Ok((0..=bounds.max_d)
                .map(|d| {
                    let before = if d == 0 { 0 } else { ranks[d - 1] };
                    (BlockKey::new(d, p, w), dims[d], dims[d] - ranks[d] - before)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    for (key, c, h) in results.into_iter().flatten() {
        table.cochain_dims.insert(key, c);
        table.entries.insert(key, h);
    }
    Ok(table)
}

/// Harmonic dimensions of the relative super complex (semisimple only).
pub fn harmonic_table(alg: &LieAlgebraData, bounds: Bounds, tol: f64) -> Result<CohomologyTable> {
    let compact = compact_basis(alg);
    let hodge = Hodge::new(alg, &compact)?;
    let mut table = cohomology_table(alg, ComplexKind::SuperRelative, Bounds::new(0, 0, 0));
    table.bounds = bounds;
    table.entries.clear();
    table.cochain_dims.clear();
    let dims: Vec<(BlockKey, usize, usize)> = bounds
        .keys()
        .par_iter()
        .map(|&k| {
            let r = hodge.harmonic_basis(k, tol)?;
            Ok((k, r.invariant_dim, r.basis.vectors.len()))
        })
        .collect::<Result<_>>()?;
    for (k, c, h) in dims {
        table.cochain_dims.insert(k, c);
        table.entries.insert(k, h);
    }
    Ok(table)
}

fn compare_report(
    config: &RunConfig,
    table: CohomologyTable,
    mut predicted: GradedSeries,
    start: Instant,
) -> Result<Report> {
    if config.corrupt {
        predicted = corrupt_series(&predicted);
    }
    let diffs = compare_series(&table, &predicted)?;
    let rows = config
        .bounds()
        .keys()
        .into_iter()
        .map(|k| ResultRow::dims("cohomology", k, table.get(&k) as i64, predicted.get(&k)))
        .collect();
    let summary = serde_json::json!({
        "diffs": diffs,
        "euler_consistent": table.euler_consistent(),
        "table": table,
        "predicted": predicted,
    });
    Ok(finish(config, rows, summary, start))
}

pub fn cmd_truncated(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let alg = config.algebra_data()?;
    let kind = ComplexKind::Truncated(config.n);
    let bounds = config.bounds();
    let table = match config.backend {
        Backend::Exact => cohomology_table(&alg, kind, bounds),
        Backend::Numeric => numeric_table(&alg, kind, bounds, config.tol)?,
    };
    let predicted = predicted_truncated_series(&alg, config.n, bounds)?;
    compare_report(config, table, predicted, start)
}

pub fn cmd_super(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let alg = config.algebra_data()?;
    let bounds = config.bounds();
    let table = match config.backend {
        Backend::Exact => cohomology_table(&alg, ComplexKind::SuperRelative, bounds),
        Backend::Numeric => {
            if !alg.name.is_semisimple() {
                return Err(Error::Config(format!(
                    "numeric backend uses the metric, which is restricted to sl(n); got {}",
                    alg.name
                )));
            }
            harmonic_table(&alg, bounds, config.tol)?
        }
    };
    let predicted = predicted_super_series(&alg, bounds)?;
    compare_report(config, table, predicted, start)
}

pub fn cmd_iwahori(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let alg = config.algebra_data()?;
    if !alg.name.is_semisimple() {
        return Err(Error::Config(format!("the Iwahori check covers sl(n); got {}", alg.name)));
    }
    let bounds = config.bounds();
    let table = match config.backend {
        Backend::Exact => cohomology_table(&alg, ComplexKind::Iwahori, bounds),
        Backend::Numeric => numeric_table(&alg, ComplexKind::Iwahori, bounds, config.tol)?,
    };
    let predicted = predicted_iwahori_series(&alg, bounds)?;
    compare_report(config, table, predicted, start)
}

pub fn cmd_spectral(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let (m, n) = (config.m, config.n);
    let r = delta1_cokernel(m, n, config.max_k)?;
    let mut rows = vec![ResultRow::dims(
        "kernel",
        BlockKey::new(0, 0, m * n),
        r.kernel_dim as i64,
        (n == 0) as i64,
    )];
    for j in 0..n + config.max_k {
        let computed = r.cokernel.contains(&j) as i64;
        let predicted = (n > 0 && j + 2 <= n) as i64;
        rows.push(ResultRow::dims("cokernel", BlockKey::new(1, 0, m * n + j + 1), computed, predicted));
    }
    let summary = serde_json::json!({ "delta1": r, "matches_prediction": r.matches_prediction() });
    Ok(finish(config, rows, summary, start))
}

pub fn cmd_hodge(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let alg = config.algebra_data()?;
    if !alg.name.is_semisimple() {
        return Err(Error::Config(format!(
            "the metric path is restricted to semisimple sl(n); got {}",
            alg.name
        )));
    }
    let compact = compact_basis(&alg);
    let hodge = Hodge::new(&alg, &compact)?;
    if config.linear_germs {
        let germs = hodge.linear_germs(config.max_w.max(1));
        let rows = germs
            .iter()
            .map(|g| ResultRow::deviation("linear_germ", BlockKey::new(1, 0, g.n), g.deviation, config.tol))
            .collect();
        return Ok(finish(config, rows, serde_json::json!({ "linear_germs": germs }), start));
    }
    let bounds = config.bounds();
    let table = cohomology_table(&alg, ComplexKind::SuperRelative, bounds);
    let mut keys = bounds.keys();
    keys.sort();
    let per_block: Vec<(Vec<ResultRow>, Option<HarmonicBasis>)> = keys
        .par_iter()
        .map(|&k| -> Result<_> {
            let mut rows = vec![ResultRow::deviation(
                "laplacian_identity",
                k,
                hodge.verify_laplacian_identity(k),
                config.tol,
            )];
            let nk = hodge.verify_nakano(k, config.kernel_tol)?;
            rows.push(ResultRow::deviation("nakano_full", k, nk.full_block_deviation, config.tol));
            rows.push(ResultRow::deviation("nakano_invariant", k, nk.invariant_deviation, config.tol));
            let hr = hodge.harmonic_basis(k, config.kernel_tol)?;
            let exact = table.get(&k) as i64;
            rows.push(ResultRow::dims("harmonic_dim", k, hr.basis.vectors.len() as i64, exact));
            let mut jk = ResultRow::dims("joint_kernel", k, hr.joint_kernel_dim as i64, exact);
            jk.deviation = Some(hr.subspace_distance);
            jk.tolerance = Some(config.kernel_tol);
            rows.push(jk);
            let basis = (!hr.basis.vectors.is_empty()).then_some(hr.basis);
            Ok((rows, basis))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut bases = Vec::new();
    for (r, b) in per_block {
        rows.extend(r);
        bases.extend(b);
    }
    // Products of harmonic forms stay harmonic.
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|i| (i..bases.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let (a, b) = (bases[i].key, bases[j].key);
            a != BlockKey::new(0, 0, 0)
                && b != BlockKey::new(0, 0, 0)
                && bounds.contains(&BlockKey::new(a.d + b.d, a.p + b.p, a.w + b.w))
        })
        .collect();
    let worst: Vec<(BlockKey, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (bases[i].key, bases[j].key);
            (
                BlockKey::new(a.d + b.d, a.p + b.p, a.w + b.w),
                hodge.verify_harmonic_subalgebra(&bases[i], &bases[j]),
            )
        })
        .collect();
    let mut by_target: std::collections::BTreeMap<BlockKey, f64> = Default::default();
    for (k, r) in &worst {
        let e = by_target.entry(*k).or_insert(0.0);
        *e = e.max(*r);
    }
    for (k, r) in &by_target {
        rows.push(ResultRow::deviation("harmonic_products", *k, *r, config.kernel_tol));
    }
    let max_of = |check: &str| {
        rows.iter()
            .filter(|r| r.check == check)
            .filter_map(|r| r.deviation)
            .fold(0.0, f64::max)
    };
    let summary = serde_json::json!({
        "max_laplacian_identity_deviation": max_of("laplacian_identity"),
        "max_nakano_full_deviation": max_of("nakano_full"),
        "max_nakano_invariant_deviation": max_of("nakano_invariant"),
        "max_subspace_distance": max_of("joint_kernel"),
        "max_product_residual": max_of("harmonic_products"),
    });
    Ok(finish(config, rows, summary, start))
}

/// Run one configured command inside a pool of `config.threads` workers.
pub fn execute(command: &Command, config: &RunConfig) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match command {
        Command::Truncated => cmd_truncated(config),
        Command::Super => cmd_super(config),
        Command::Hodge => cmd_hodge(config),
        Command::Spectral => cmd_spectral(config),
        Command::Iwahori => cmd_iwahori(config),
        Command::Verify { .. } => Err(Error::Config("verify is not a computation".into())),
    })
}

fn fmt_opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

fn fmt_dev(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.3e}"))
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "d", "p", "w", "dim_computed", "dim_predicted", "deviation", "tolerance", "status"])?;
            for r in &report.results {
                w.write_record([
                    r.check.clone(),
                    r.block.d.to_string(),
                    r.block.p.to_string(),
                    r.block.w.to_string(),
                    r.dim_computed.map(|x| x.to_string()).unwrap_or_default(),
                    r.dim_predicted.map(|x| x.to_string()).unwrap_or_default(),
                    r.deviation.map(|x| format!("{x:e}")).unwrap_or_default(),
                    r.tolerance.map(|x| format!("{x:e}")).unwrap_or_default(),
                    if r.passes() { "ok" } else { "FAIL" }.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            Ok(String::from_utf8_lossy(&bytes).into_owned())
        }
        Format::Text => {
            let c = &report.config;
            let mut s = String::new();
            let _ = writeln!(
                s,
                "currentcoh {} {}  algebra={} n={} m={} bounds d<={} p<={} w<={} backend={:?}",
                report.version, c.command, c.algebra, c.n, c.m, c.max_d, c.max_p, c.max_w, c.backend
            );
            let _ = writeln!(
                s,
                "{:<20} {:<18} {:>9} {:>9} {:>11} {:>6}",
                "check", "block", "computed", "predicted", "deviation", "status"
            );
            for r in &report.results {
                let _ = writeln!(
                    s,
                    "{:<20} {:<18} {:>9} {:>9} {:>11} {:>6}",
                    r.check,
                    format!("({},{},{})", r.block.d, r.block.p, r.block.w),
                    fmt_opt(r.dim_computed),
                    fmt_opt(r.dim_predicted),
                    fmt_dev(r.deviation),
                    if r.passes() { "ok" } else { "FAIL" }
                );
            }
            let _ = writeln!(s, "verdict: {:?} ({:.3} s)", report.verdict, report.timings.total_seconds);
            Ok(s)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BoundsMismatch { .. } | Error::ToleranceAmbiguity { .. } | Error::NonFiniteEntry { .. } => 1,
        _ => 2,
    }
}

/// Parse arguments, run, write output; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(Verdict::Pass) => 0,
        Ok(Verdict::Fail) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Verdict> {
    if let Command::Verify { report } = &cli.command {
        let text = std::fs::read_to_string(report)?;
        let stored: Report = serde_json::from_str(&text)?;
        let recomputed = recompute_verdict(&stored)?;
        let msg = format!(
            "stored verdict {:?}, recomputed {:?}: {}\n",
            stored.verdict,
            recomputed,
            if stored.verdict == recomputed { "reproduced" } else { "MISMATCH" }
        );
        emit(&msg, cli.options.out.as_deref())?;
        return Ok(if stored.verdict == recomputed && recomputed == Verdict::Pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        });
    }
    let config = RunConfig::resolve(&cli.command, &cli.options)?;
    let report = execute(&cli.command, &config)?;
    emit(&render(&report, config.format)?, config.out.as_deref())?;
    Ok(report.verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> (Command, RunConfig) {
        let cli = Cli::try_parse_from(std::iter::once("currentcoh").chain(args.iter().copied())).unwrap();
        let cfg = RunConfig::resolve(&cli.command, &cli.options).unwrap();
        (cli.command, cfg)
    }

    #[test]
    fn truncated_defaults_cover_top_class() {
        let (_, c) = config(&["truncated", "--algebra", "sl3", "--n", "2"]);
        assert_eq!((c.max_d, c.max_p, c.max_w), (16, 0, 8));
        assert_eq!(c.tol, DEFAULT_KERNEL_TOL);
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# defaults\nalgebra = sl3\nmax-weight = 3\ntol=1e-9\n").unwrap();
        let p = path.to_str().unwrap();
        let (_, c) = config(&["super", "--config", p, "--max-weight", "2"]);
        assert_eq!(c.algebra, "sl3");
        assert_eq!(c.max_w, 2);
        assert_eq!(c.tol, 1e-9);
        std::fs::write(&path, r#"{"algebra": "gl2", "max_p": 1, "corrupt": true}"#).unwrap();
        let (_, c) = config(&["super", "--config", p]);
        assert_eq!((c.algebra.as_str(), c.max_p, c.corrupt), ("gl2", 1, true));
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let cli = Cli::try_parse_from(["currentcoh", "super", "--config", p]).unwrap();
        assert!(matches!(RunConfig::resolve(&cli.command, &cli.options), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs() {
        for args in [
            vec!["truncated", "--n", "0"],
            vec!["super", "--tol=-1"],
            vec!["super", "--algebra", "so5"],
            vec!["super", "--threads", "0"],
        ] {
            let cli = Cli::try_parse_from(std::iter::once("currentcoh").chain(args.clone())).unwrap();
            assert!(RunConfig::resolve(&cli.command, &cli.options).is_err(), "{args:?}");
        }
    }

    #[test]
    fn super_and_corrupt() {
        let (cmd, c) = config(&["super", "--max-d", "1", "--max-p", "2", "--max-weight", "2"]);
        let r = execute(&cmd, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(recompute_verdict(&r).unwrap(), Verdict::Pass);
        let (cmd, c) = config(&["super", "--max-d", "1", "--max-p", "2", "--max-weight", "2", "--corrupt"]);
        let r = execute(&cmd, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.results.iter().filter(|r| !r.passes()).count(), 1);
    }

    #[test]
    fn zero_bounds_trivial_pass() {
        let (cmd, c) = config(&["super", "--max-d", "0", "--max-p", "0", "--max-weight", "0"]);
        let r = execute(&cmd, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.results.len(), 1);
        assert_eq!(r.results[0].dim_computed, Some(1));
    }

    #[test]
    fn numeric_backends_agree() {
        let (cmd, c) = config(&["truncated", "--n", "2", "--backend", "numeric"]);
        assert_eq!(execute(&cmd, &c).unwrap().verdict, Verdict::Pass);
        let (cmd, c) = config(&["super", "--max-weight", "2", "--backend", "numeric"]);
        assert_eq!(execute(&cmd, &c).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn hodge_rejects_gl_and_germs_pass() {
        let (cmd, c) = config(&["hodge", "--algebra", "gl2"]);
        assert!(matches!(execute(&cmd, &c), Err(Error::Config(_))));
        let (cmd, c) = config(&["hodge", "--linear-germs"]);
        let r = execute(&cmd, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.results.len(), 6);
    }

    #[test]
    fn spectral_rows() {
        let (cmd, c) = config(&["spectral", "--m", "1", "--n", "2"]);
        let r = execute(&cmd, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let cok: Vec<usize> = r
            .results
            .iter()
            .filter(|r| r.check == "cokernel" && r.dim_computed == Some(1))
            .map(|r| r.block.w)
            .collect();
        assert_eq!(cok, vec![3]);
    }

    #[test]
    fn renders_all_formats() {
        let (cmd, c) = config(&["truncated", "--n", "1"]);
        let r = execute(&cmd, &c).unwrap();
        let json = render(&r, Format::Json).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(recompute_verdict(&back).unwrap(), Verdict::Pass);
        let csv = render(&r, Format::Csv).unwrap();
        assert!(csv.starts_with("check,d,p,w"));
        assert_eq!(csv.lines().count(), r.results.len() + 1);
        assert!(render(&r, Format::Text).unwrap().contains("verdict: Pass"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_from_args(["currentcoh", "spectral", "--m", "1", "--n", "0", "--format", "json", "--out", "/dev/null"]), 0);
        assert_eq!(run_from_args(["currentcoh", "hodge", "--algebra", "gl2"]), 2);
        assert_eq!(run_from_args(["currentcoh", "frobnicate"]), 2);
        assert_eq!(
            run_from_args(["currentcoh", "truncated", "--n", "1", "--corrupt", "--out", "/dev/null"]),
            1
        );
    }
}
