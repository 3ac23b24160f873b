//! File formats, pipelines and reports behind the `kronlift` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::Error;
use crate::lift::{LiftedSystem, MonomialBlock};
use crate::mwr::MwrProblem;
use crate::recovery::{
    extract_candidates, nullspace_search, polish, rank_candidates, CandidateSolution,
    CandidateSource, SearchOptions, DEDUP_DISTANCE,
};
use crate::solvers::{
    newton_solve, normal_eq_solve, pinv_solve, svd_analyze, NewtonOptions, SvdReport,
};
use crate::system::PolynomialSystem;
use crate::tensor::DenseMatrix;
use crate::util::dist;

pub const SCHEMA_VERSION: u32 = 1;

/// Errors surfaced by the command-line layer, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Parse(String),

    #[error("{stage}: {source}")]
    Numerical { stage: &'static str, source: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Parse(_) => 3,
            CliError::Numerical { .. } => 4,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse(_) => "parse",
            CliError::Numerical { source, .. } => source.code(),
        }
    }

    /// One line: `error[<code>]: <context>`, newlines flattened.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error[{}]: {}", self.code(), msg.trim())
    }
}

fn stage(stage: &'static str) -> impl FnOnce(Error) -> CliError {
    move |source| CliError::Numerical { stage, source }
}

fn parse_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{field}: {msg}"))
}

/// On-disk form of a [`PolynomialSystem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub meta: String,
}

const SYSTEM_FIELDS: [&str; 7] = ["schema_version", "n", "D", "G", "R", "b", "meta"];

fn number(v: &Value, field: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(field, format!("expected a finite number, found {v}")))
}

fn vector_field(v: &Value, field: &str, len: usize) -> Result<Vec<f64>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(field, "expected an array of numbers"))?;
    if arr.len() != len {
        return Err(parse_err(field, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{field}[{i}]")))
        .collect()
}

fn matrix_field(v: &Value, field: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(field, "expected an array of rows"))?;
    if arr.len() != rows {
        return Err(parse_err(field, format!("expected {rows} rows, found {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, row)| vector_field(row, &format!("{field}[{i}]"), cols))
        .collect()
}

impl SystemFile {
    pub fn from_system(sys: &PolynomialSystem) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: sys.n(),
            d: sys.linear().to_rows(),
            g: sys.quadratic().map(DenseMatrix::to_rows),
            r: sys.cubic().map(DenseMatrix::to_rows),
            b: sys.rhs().to_vec(),
            meta: sys.meta.clone(),
        }
    }

    /// Parses and validates, naming the offending field on failure.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CliError::Parse(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Parse("system file must be a JSON object".into()))?;
        if let Some(key) = obj.keys().find(|k| !SYSTEM_FIELDS.contains(&k.as_str())) {
            return Err(parse_err(key, "unknown field"));
        }
        let get = |field: &str| obj.get(field).ok_or_else(|| parse_err(field, "missing field"));

        let schema_version = get("schema_version")?
            .as_u64()
            .ok_or_else(|| parse_err("schema_version", "expected a non-negative integer"))?;
        if schema_version != SCHEMA_VERSION as u64 {
            return Err(parse_err(
                "schema_version",
                format!("unsupported version {schema_version}, expected {SCHEMA_VERSION}"),
            ));
        }
        let n = get("n")?
            .as_u64()
            .filter(|&n| n >= 1)
            .ok_or_else(|| parse_err("n", "expected a positive integer"))? as usize;
        let d = matrix_field(get("D")?, "D", n, n)?;
        let optional = |field: &str, cols: usize| -> Result<Option<Vec<Vec<f64>>>, CliError> {
            match obj.get(field) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => matrix_field(v, field, n, cols).map(Some),
            }
        };
        let g = optional("G", n * n)?;
        let r = optional("R", n * n * n)?;
        let b = vector_field(get("b")?, "b", n)?;
        let meta = match obj.get("meta") {
            None => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(parse_err("meta", "expected a string")),
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            n,
            d,
            g,
            r,
            b,
            meta,
        })
    }

    pub fn to_system(&self) -> Result<PolynomialSystem, CliError> {
        let mat = |rows: &Vec<Vec<f64>>, field: &str| {
            DenseMatrix::from_rows(rows).map_err(|e| parse_err(field, e))
        };
        let d = mat(&self.d, "D")?;
        let g = self.g.as_ref().map(|g| mat(g, "G")).transpose()?;
        let r = self.r.as_ref().map(|r| mat(r, "R")).transpose()?;
        if self.b.len() != self.n {
            return Err(parse_err("b", format!("expected {} entries, found {}", self.n, self.b.len())));
        }
        let sys = PolynomialSystem::new(d, g, r, self.b.clone())
            .map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(sys.with_meta(self.meta.clone()))
    }

    /// JSON with one matrix row per line and a trailing newline. Floats use
    /// the shortest representation that parses back to the same value.
    pub fn to_json(&self) -> String {
        let matrix = |rows: &[Vec<f64>]| {
            let lines: Vec<String> = rows.iter().map(|r| format!("    {}", compact(r))).collect();
            format!("[\n{}\n  ]", lines.join(",\n"))
        };
        let mut fields = vec![
            format!("  \"schema_version\": {}", self.schema_version),
            format!("  \"n\": {}", self.n),
            format!("  \"D\": {}", matrix(&self.d)),
        ];
        if let Some(g) = &self.g {
            fields.push(format!("  \"G\": {}", matrix(g)));
        }
        if let Some(r) = &self.r {
            fields.push(format!("  \"R\": {}", matrix(r)));
        }
        fields.push(format!("  \"b\": {}", compact(&self.b)));
        fields.push(format!("  \"meta\": {}", compact(&self.meta)));
        format!("{{\n{}\n}}\n", fields.join(",\n"))
    }
}

fn compact<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("finite values serialize")
}

pub fn load_system(path: &Path) -> Result<PolynomialSystem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SystemFile::parse(&text)?.to_system()
}

pub fn save_system(path: &Path, sys: &PolynomialSystem) -> Result<(), CliError> {
    std::fs::write(path, SystemFile::from_system(sys).to_json()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Whether to plant a root in a random system: a flag (root drawn from the
/// seed) or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantRoot {
    Flag(bool),
    Root(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub n: usize,
    pub degree: u32,
    pub seed: u64,
    #[serde(default)]
    pub plant_root: Option<PlantRoot>,
}

/// Input to `kronlift gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Descriptor {
    Random(RandomSpec),
    Mwr(MwrProblem),
}

/// The root planted by `{"plant_root": true}` for a given `(n, seed)`.
pub fn seeded_root(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn cmd_gen(descriptor_json: &str) -> Result<SystemFile, CliError> {
    let desc: Descriptor = serde_json::from_str(descriptor_json)
        .map_err(|e| CliError::Parse(format!("descriptor: {e}")))?;
    let sys = match desc {
        Descriptor::Random(spec) => {
            let root = match &spec.plant_root {
                None | Some(PlantRoot::Flag(false)) => None,
                Some(PlantRoot::Flag(true)) => Some(seeded_root(spec.n, spec.seed)),
                Some(PlantRoot::Root(r)) => Some(r.clone()),
            };
            let mut sys = PolynomialSystem::random(spec.n, spec.degree, spec.seed, root.as_deref())
                .map_err(|e| parse_err("random", e))?;
            if let Some(r) = &root {
                sys.meta = format!(
                    "random n={} degree={} seed={} planted_root={}",
                    spec.n,
                    spec.degree,
                    spec.seed,
                    compact(r)
                );
            }
            sys
        }
        Descriptor::Mwr(problem) => problem
            .build_collocation_system()
            .map_err(|e| parse_err("mwr", e))?,
    };
    Ok(SystemFile::from_system(&sys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pinv,
    Ridge,
    NullSearch,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "pinv" => Ok(Method::Pinv),
            "ridge" => Ok(Method::Ridge),
            "nullsearch" => Ok(Method::NullSearch),
            other => Err(CliError::Usage(format!(
                "unknown method `{other}`, expected pinv|ridge|nullsearch"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub method: Method,
    pub ridge: f64,
    pub starts: usize,
    pub seed: u64,
    pub rank_rtol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::NullSearch,
            ridge: crate::solvers::DEFAULT_RIDGE,
            starts: 16,
            seed: 0,
            rank_rtol: crate::solvers::DEFAULT_RANK_RTOL,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.rank_rtol.is_finite() && self.rank_rtol >= 0.0) {
            return Err(CliError::Usage(format!("--rank-rtol must be >= 0, got {}", self.rank_rtol)));
        }
        if self.method == Method::Ridge && !(self.ridge.is_finite() && self.ridge > 0.0) {
            return Err(CliError::Usage(format!("--ridge must be > 0, got {}", self.ridge)));
        }
        if self.method == Method::NullSearch && self.starts == 0 {
            return Err(CliError::Usage("--starts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub n: usize,
    pub m: usize,
    pub blocks: Vec<MonomialBlock>,
    pub meta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub x: Vec<f64>,
    pub consistency: f64,
    pub nonlinear_residual: f64,
    pub source: CandidateSource,
    pub root: bool,
}

impl CandidateRecord {
    /// Recomputes the residual from the system instead of trusting the
    /// candidate's cached value.
    fn new(sys: &PolynomialSystem, c: &CandidateSolution) -> Result<Self, CliError> {
        let residual = sys.eval_residual(&c.x).map_err(stage("report"))?.norm;
        let root = residual <= crate::recovery::ROOT_TOL * (1.0 + crate::util::norm(sys.rhs()));
        Ok(Self {
            x: c.x.clone(),
            consistency: c.consistency,
            nonlinear_residual: residual,
            source: c.source,
            root,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSection {
    pub method: Method,
    pub rank_rtol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `‖P·y − b‖` for the lifted vector the candidates were read from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifted_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonFailure {
    pub start: usize,
    pub reason: String,
    pub final_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonRuns {
    pub starts: usize,
    pub converged: usize,
    pub roots: Vec<Vec<f64>>,
    pub failures: Vec<NewtonFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRuns {
    pub starts: usize,
    pub roots: Vec<Vec<f64>>,
    pub best_consistency: f64,
    pub best_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub seed: u64,
    pub newton: NewtonRuns,
    pub nullsearch: SearchRuns,
    /// Roots found by both methods (within the deduplication distance).
    pub overlap: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub system: SystemSummary,
    pub svd: SvdReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newton_comparison: Option<Comparison>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The report as JSON with `timings_ms` removed, for comparisons.
    pub fn without_timings(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timings_ms");
        }
        v
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let s = &self.system;
        let _ = writeln!(out, "{}: n = {}, m = {}  ({})", self.command, s.n, s.m, s.meta);
        let blocks: Vec<String> = s
            .blocks
            .iter()
            .map(|b| format!("deg {} @ {}..{}", b.degree, b.offset, b.offset + b.len))
            .collect();
        let _ = writeln!(out, "blocks: {}", blocks.join(", "));
        let svd = &self.svd;
        let cond = if svd.condition_estimate.is_finite() {
            format!("{:.3e}", svd.condition_estimate)
        } else {
            "inf".into()
        };
        let _ = writeln!(
            out,
            "svd: rank {} nullity {} tol {:.3e} cond {}",
            svd.numerical_rank, svd.nullity, svd.rank_tolerance, cond
        );
        let sv: Vec<String> = svd.singular_values.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = writeln!(out, "singular values: {}", sv.join(" "));
        if let Some(solve) = &self.solve {
            let method = serde_json::to_value(solve.method).expect("method serializes");
            let _ = writeln!(out, "method: {}", method.as_str().unwrap_or(""));
        }
        if !self.candidates.is_empty() {
            let _ = writeln!(
                out,
                "{:>3}  {:<10} {:>12} {:>12} {:>5}  x",
                "#", "source", "residual", "consistency", "root"
            );
            for (i, c) in self.candidates.iter().enumerate() {
                let xs: Vec<String> = c.x.iter().map(|v| format!("{v:.9}")).collect();
                let source = serde_json::to_value(c.source).expect("source serializes");
                let _ = writeln!(
                    out,
                    "{:>3}  {:<10} {:>12.3e} {:>12.3e} {:>5}  [{}]",
                    i + 1,
                    source.as_str().unwrap_or(""),
                    c.nonlinear_residual,
                    c.consistency,
                    if c.root { "yes" } else { "no" },
                    xs.join(", ")
                );
            }
        }
        if let Some(cmp) = &self.newton_comparison {
            let _ = writeln!(
                out,
                "newton: {}/{} converged, {} distinct roots, {} failures",
                cmp.newton.converged,
                cmp.newton.starts,
                cmp.newton.roots.len(),
                cmp.newton.failures.len()
            );
            let _ = writeln!(
                out,
                "nullsearch: {} roots, best consistency {:.3e}",
                cmp.nullsearch.roots.len(),
                cmp.nullsearch.best_consistency
            );
            let _ = writeln!(out, "overlap: {} roots", cmp.overlap.len());
            for r in &cmp.overlap {
                let _ = writeln!(out, "  {}", compact(r));
            }
        }
        let timings: Vec<String> = self
            .timings_ms
            .iter()
            .map(|(k, v)| format!("{k} {v:.2} ms"))
            .collect();
        let _ = writeln!(out, "timings: {}", timings.join(", "));
        out
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.insert(name.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }
}

fn analyzed(
    command: &str,
    sys: &PolynomialSystem,
    rank_rtol: f64,
    timer: &mut Timer,
) -> Result<(LiftedSystem, RunReport), CliError> {
    let lift = timer
        .time("lift", || LiftedSystem::build(sys))
        .map_err(stage("lift"))?;
    let svd = timer
        .time("svd", || svd_analyze(lift.matrix(), rank_rtol))
        .map_err(stage("svd"))?;
    let report = RunReport {
        command: command.to_string(),
        system: SystemSummary {
            n: lift.n(),
            m: lift.m(),
            blocks: lift.blocks().to_vec(),
            meta: sys.meta.clone(),
        },
        svd,
        solve: None,
        candidates: Vec::new(),
        newton_comparison: None,
        timings_ms: BTreeMap::new(),
    };
    Ok((lift, report))
}

pub fn cmd_analyze(sys: &PolynomialSystem, rank_rtol: f64) -> Result<RunReport, CliError> {
    if !(rank_rtol.is_finite() && rank_rtol >= 0.0) {
        return Err(CliError::Usage(format!("--rank-rtol must be >= 0, got {rank_rtol}")));
    }
    let mut timer = Timer(BTreeMap::new());
    let (_, mut report) = analyzed("analyze", sys, rank_rtol, &mut timer)?;
    report.timings_ms = timer.0;
    Ok(report)
}

fn with_polished(
    lift: &LiftedSystem,
    cands: Vec<CandidateSolution>,
) -> Result<Vec<CandidateSolution>, CliError> {
    let mut all = cands.clone();
    for c in &cands {
        all.push(polish(lift, c, NewtonOptions::default()).map_err(stage("polish"))?);
    }
    Ok(rank_candidates(all))
}

pub fn cmd_solve(sys: &PolynomialSystem, opts: SolveOptions) -> Result<RunReport, CliError> {
    opts.validate()?;
    let mut timer = Timer(BTreeMap::new());
    let (lift, mut report) = analyzed("solve", sys, opts.rank_rtol, &mut timer)?;
    let mut section = SolveSection {
        method: opts.method,
        rank_rtol: opts.rank_rtol,
        ridge: None,
        starts: None,
        seed: None,
        lifted_residual: None,
    };
    let raw = match opts.method {
        Method::Pinv => {
            let sol = timer
                .time("pinv", || pinv_solve(&lift, opts.rank_rtol))
                .map_err(stage("pinv"))?;
            section.lifted_residual = Some(sol.residual_norm);
            timer
                .time("extract", || extract_candidates(&lift, &sol.y))
                .map_err(stage("extract"))?
        }
        Method::Ridge => {
            let y = timer
                .time("ridge", || normal_eq_solve(&lift, opts.ridge))
                .map_err(stage("ridge"))?;
            section.ridge = Some(opts.ridge);
            let py = lift.matrix().matvec(&y).map_err(stage("ridge"))?;
            section.lifted_residual = Some(dist(&py, lift.rhs()));
            timer
                .time("extract", || extract_candidates(&lift, &y))
                .map_err(stage("extract"))?
        }
        Method::NullSearch => {
            section.starts = Some(opts.starts);
            section.seed = Some(opts.seed);
            let search = SearchOptions {
                starts: opts.starts,
                seed: opts.seed,
                rank_rtol: opts.rank_rtol,
                ..SearchOptions::default()
            };
            timer
                .time("nullsearch", || nullspace_search(&lift, search))
                .map_err(stage("nullsearch"))?
        }
    };
    let ranked = timer.time("polish", || with_polished(&lift, raw))?;
    report.candidates = ranked
        .iter()
        .map(|c| CandidateRecord::new(sys, c))
        .collect::<Result<_, _>>()?;
    report.solve = Some(section);
    report.timings_ms = timer.0;
    Ok(report)
}

fn push_distinct(roots: &mut Vec<Vec<f64>>, x: &[f64]) {
    if roots.iter().all(|r| dist(r, x) >= DEDUP_DISTANCE) {
        roots.push(x.to_vec());
    }
}

fn sort_lex(roots: &mut [Vec<f64>]) {
    roots.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// Newton from `starts` seeded Gaussian points against the null-space search
/// with the same number of starts.
pub fn cmd_compare(
    sys: &PolynomialSystem,
    starts: usize,
    seed: u64,
    rank_rtol: f64,
) -> Result<RunReport, CliError> {
    if starts == 0 {
        return Err(CliError::Usage("--starts must be >= 1".into()));
    }
    if !(rank_rtol.is_finite() && rank_rtol >= 0.0) {
        return Err(CliError::Usage(format!("--rank-rtol must be >= 0, got {rank_rtol}")));
    }
    let mut timer = Timer(BTreeMap::new());
    let (lift, mut report) = analyzed("compare", sys, rank_rtol, &mut timer)?;
    let n = sys.n();

    let newton = timer.time("newton", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut runs = NewtonRuns {
            starts,
            converged: 0,
            roots: Vec::new(),
            failures: Vec::new(),
        };
        for start in 0..starts {
            let x0: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            match newton_solve(sys, &x0, NewtonOptions::default()) {
                Ok(trace) if trace.converged => {
                    runs.converged += 1;
                    push_distinct(&mut runs.roots, &trace.last().x);
                }
                Ok(trace) => runs.failures.push(NewtonFailure {
                    start,
                    reason: format!("no convergence in {} iterations", trace.iterations),
                    final_residual: Some(trace.last().residual_norm),
                }),
                Err(e) => runs.failures.push(NewtonFailure {
                    start,
                    reason: e.to_string(),
                    final_residual: None,
                }),
            }
        }
        sort_lex(&mut runs.roots);
        runs
    });

    let search = SearchOptions {
        starts,
        seed,
        rank_rtol,
        ..SearchOptions::default()
    };
    let found = timer
        .time("nullsearch", || nullspace_search(&lift, search))
        .map_err(stage("nullsearch"))?;
    let mut search_roots = Vec::new();
    for c in found.iter().filter(|c| c.is_root(sys)) {
        push_distinct(&mut search_roots, &c.x);
    }
    sort_lex(&mut search_roots);
    let best_consistency = found.iter().map(|c| c.consistency).fold(f64::INFINITY, f64::min);
    let best_residual = found
        .iter()
        .map(|c| c.nonlinear_residual)
        .fold(f64::INFINITY, f64::min);

    let overlap = newton
        .roots
        .iter()
        .filter(|r| search_roots.iter().any(|s| dist(r, s) < DEDUP_DISTANCE))
        .cloned()
        .collect();
    report.candidates = found
        .iter()
        .map(|c| CandidateRecord::new(sys, c))
        .collect::<Result<_, _>>()?;
    report.newton_comparison = Some(Comparison {
        seed,
        newton,
        nullsearch: SearchRuns {
            starts,
            roots: search_roots,
            best_consistency,
            best_residual,
        },
        overlap,
    });
    report.timings_ms = timer.0;
    Ok(report)
}
