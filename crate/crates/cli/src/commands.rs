use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use outlierkit_core::baselines::rosner;
use outlierkit_core::bp::{self, BpConfig};
use outlierkit_core::estimators::z_scores;
use outlierkit_core::mc;
use outlierkit_core::simulation::{self, run_cell};
use outlierkit_core::{
    Contaminant, ContaminationSide, ContaminationSpec, CriticalEntry, CriticalKey, CriticalValueTable, Method,
    MethodSpec, PrepareOptions,
};
use serde::Serialize;

use crate::error::{CliResult, Failure};
use crate::ingest::{ingest_csv, Column};
use crate::report::{render_text, JsonReport};
use crate::{CacheArgs, ContaminantKind, ContaminateSide, CurveArgs, DetectArgs, ExperimentArgs, Format, SimulateArgs, Tuning};

const DEFAULT_S: usize = bp::DEFAULT_S;

/// `$XDG_CACHE_HOME/outlierkit/critical-values.tsv`, falling back to
/// `~/.cache` and then to the working directory.
fn default_cache_path() -> PathBuf {
    let base = std::env::var_os("XDG_CACHE_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache")));
    match base {
        Some(b) => b.join("outlierkit").join("critical-values.tsv"),
        None => PathBuf::from("outlierkit-critical-values.tsv"),
    }
}

pub struct Cache {
    pub path: PathBuf,
    pub table: CriticalValueTable,
    loaded: String,
    loaded_len: usize,
}

impl Cache {
    pub fn open(args: &CacheArgs) -> CliResult<Self> {
        let path = args.cache.clone().unwrap_or_else(default_cache_path);
        let table = CriticalValueTable::read_or_empty(&path)
            .map_err(|e| Failure::Config(format!("cache {}: {e}", path.display())))?;
        let loaded = table.render();
        let loaded_len = table.len();
        Ok(Cache { path, table, loaded, loaded_len })
    }

    /// Writes the table back when this run added or replaced entries.
    pub fn save(&self) -> CliResult<bool> {
        if self.table.render() == self.loaded {
            return Ok(false);
        }
        self.table
            .write(&self.path)
            .map_err(|e| Failure::Config(format!("cannot write cache {}: {e}", self.path.display())))?;
        Ok(true)
    }

    pub fn fingerprint(&self) -> String {
        format!("{:016x}", mc::tag(&self.table.render()))
    }

    pub fn added(&self) -> usize {
        self.table.len().saturating_sub(self.loaded_len)
    }
}

fn level_se(alpha: f64, replicates: usize) -> f64 {
    (alpha * (1.0 - alpha) / replicates as f64).sqrt()
}

fn se_note(alpha: f64, replicates: usize) -> String {
    format!(
        "simulated with {replicates} replicates; Monte Carlo standard error of the tail level {:.1e}",
        level_se(alpha, replicates)
    )
}

/// Checks the method settings together and reports every problem at once.
pub fn method_spec(method: Method, t: &Tuning, n: Option<usize>, rosner_needs_s: bool) -> CliResult<MethodSpec> {
    let mut problems = Vec::new();
    if !(t.alpha > 0.0 && t.alpha < 1.0) {
        problems.push(format!("--alpha {} outside (0, 1)", t.alpha));
    }
    if t.s == Some(0) {
        problems.push("--s must be at least 1".to_string());
    }
    if t.estimator.is_some() && method != Method::Dg {
        problems.push(format!("--estimator applies to dg only, not {method}"));
    }
    if t.s.is_some() && method == Method::Dg {
        problems.push("--s does not apply to dg".to_string());
    }
    if method == Method::Rosner && t.s.is_none() && rosner_needs_s {
        let hint = n.map(|n| format!(" (s = {} for n = {n})", rosner::default_s(n))).unwrap_or_default();
        problems.push(format!("s required for Rosner; recommended s=[0.4n]{hint}"));
    }
    if let (Some(s), Some(n)) = (t.s, n) {
        if s > n / 2 {
            problems.push(format!("--s {s} exceeds n/2 = {}", n / 2));
        }
    }
    if !problems.is_empty() {
        return Err(Failure::Config(problems.join("; ")));
    }
    let (side, alpha) = (t.side, t.alpha);
    let s = t.s.unwrap_or(DEFAULT_S);
    Ok(match method {
        Method::Bp => MethodSpec::Bp { side, alpha, s },
        Method::Dg => MethodSpec::Dg { side, alpha, estimator: t.estimator.unwrap_or(outlierkit_core::EstimatorKind::MedQn) },
        Method::Rosner => MethodSpec::Rosner { side, alpha, s: t.s },
        Method::Bolshev => MethodSpec::Bolshev { side, alpha, s },
        Method::Hawkins => MethodSpec::Hawkins { side, alpha, s },
    })
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(bytes).map_err(|e| Failure::Config(format!("stdout: {e}"))),
    }
}

pub fn detect(a: &DetectArgs) -> CliResult<()> {
    let column = Column::parse(&a.column);
    let x = ingest_csv(&a.input, &column)?;
    let n = x.len();
    if n <= 15 && !a.force {
        return Err(Failure::Data(format!(
            "n = {n}: the procedure is not meant for samples of 15 or fewer observations (use --force to run anyway)"
        )));
    }
    if n < 20 {
        eprintln!("WARNING: n = {n} is below 20; critical values and levels are unreliable at this size");
    }
    if (a.shape_scale || a.exact) && a.method != Method::Bp {
        return Err(Failure::Config("--shape-scale and --exact apply to bp only".into()));
    }
    let spec = method_spec(a.method, &a.tuning, Some(n), true)?;
    let opts = PrepareOptions { replicates: a.replicates, seed: a.cache.seed, exact_bp: a.exact, shape_scale: a.shape_scale };
    let mut cache = Cache::open(&a.cache)?;
    let detector = spec.prepare(a.tuning.family, n, &opts, Some(&mut cache.table))?;
    let added = cache.added();
    if cache.save()? {
        eprintln!("{added} critical value(s) {}; cached in {}", se_note(a.tuning.alpha, a.replicates), cache.path.display());
    }
    let report = detector.classify(&x)?;
    if report.n != n || report.outliers().iter().any(|&i| i >= n) {
        return Err(Failure::Invariant("report indices do not match the sample".into()));
    }
    let data: Vec<f64> = if a.shape_scale { x.iter().map(|v| v.ln()).collect() } else { x.clone() };
    let z = z_scores(&data, &report.fit);
    let json = JsonReport::new(a, &spec, &report, &x, &z, &cache, added)?;
    let text = serde_json::to_string_pretty(&json).map_err(|e| Failure::Invariant(e.to_string()))? + "\n";
    if let Some(p) = &a.output {
        write_output(Some(p), text.as_bytes())?;
    }
    match a.format {
        Format::Json => write_output(None, text.as_bytes()),
        Format::Text => write_output(None, render_text(&json).as_bytes()),
    }
}

pub fn simulate_critical(a: &SimulateArgs) -> CliResult<()> {
    let t = &a.tuning;
    if a.replicates == 0 {
        return Err(Failure::Config("--replicates must be positive".into()));
    }
    let mut cache = Cache::open(&a.cache)?;
    let mut out = String::new();
    match (a.method, a.n) {
        (Method::Bp, None) => {
            method_spec(a.method, t, None, false)?;
            let s = t.s.unwrap_or(DEFAULT_S);
            let level = BpConfig::with_s(t.family, t.side, t.alpha, s)?.effective_alpha();
            let key = CriticalKey::new(Method::Bp, "v", None, None, None, s, level, None);
            let value = match cache.table.get(&key) {
                Some(e) if !a.force => {
                    out += &format!("cached v_{level}({s}) = {:.6} ({} replicates, seed {})\n", e.value, e.replicates, e.seed);
                    e.value
                }
                _ => {
                    let v = bp::simulate_critical_value_v(s, level, a.replicates, a.cache.seed);
                    cache.table.insert(key, CriticalEntry::now(v, a.replicates, a.cache.seed));
                    out += &format!("v_{level}({s}) = {v:.6}\n{}\n", se_note(level, a.replicates));
                    v
                }
            };
            if let Some(tab) = bp::tabulated_v(s, level) {
                out += &format!("tabulated v_{level}({s}) = {tab} (used by detect; difference {:+.4})\n", value - tab);
            }
        }
        (_, None) => return Err(Failure::Config(format!("--n is required for {}", a.method))),
        (method, Some(n)) => {
            let spec = method_spec(method, t, Some(n), false)?;
            let opts = PrepareOptions { replicates: a.replicates, seed: a.cache.seed, exact_bp: true, shape_scale: false };
            let mut scratch = if a.force { CriticalValueTable::new() } else { cache.table.clone() };
            spec.prepare(t.family, n, &opts, Some(&mut scratch))?;
            let fresh: Vec<(CriticalKey, CriticalEntry)> = scratch
                .iter()
                .filter(|(k, e)| cache.table.get(k) != Some(*e))
                .map(|(k, e)| (k.clone(), e.clone()))
                .collect();
            if fresh.is_empty() {
                out += "all critical values for this setting are already cached (use --force to recompute)\n";
            }
            for (k, e) in fresh {
                out += &format!(
                    "{} {} family={} n={} s={} alpha={} side={}: {:.6}\n",
                    k.method, k.quantity, k.family, n, k.s, k.alpha(), k.side, e.value
                );
                cache.table.insert(k, e);
            }
            out += &format!("{}\n", se_note(t.alpha, a.replicates));
        }
    }
    if cache.save()? {
        out += &format!("cache updated: {}\n", cache.path.display());
    }
    write_output(None, out.as_bytes())
}

#[derive(Serialize)]
struct ExperimentRow {
    method: String,
    family: String,
    n: usize,
    r: usize,
    param: f64,
    d_oo: Option<f64>,
    d_on: Option<f64>,
    d_no: Option<f64>,
    d_nn: Option<f64>,
    significance: Option<f64>,
    #[serde(rename = "M")]
    m: usize,
    seed: u64,
    error: String,
}

pub fn experiment(a: &ExperimentArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    if a.replicates == 0 {
        problems.push("--replicates must be positive".to_string());
    }
    match (a.contaminant, a.rho) {
        (ContaminantKind::TruncatedNormal, None) => problems.push("--rho is required for truncated-normal".into()),
        (ContaminantKind::Exponential, Some(_)) => problems.push("--rho applies to truncated-normal only".into()),
        _ => {}
    }
    let specs: Vec<CliResult<MethodSpec>> = a.method.iter().map(|&m| method_spec(m, &a.tuning, None, false)).collect();
    for s in &specs {
        if let Err(e) = s {
            problems.push(e.to_string());
        }
    }
    if !problems.is_empty() {
        return Err(Failure::Config(problems.join("; ")));
    }
    let side = match a.contaminate {
        ContaminateSide::Right => ContaminationSide::Right,
        ContaminateSide::Left => ContaminationSide::Left,
        ContaminateSide::Both => ContaminationSide::Both,
    };
    let opts = PrepareOptions { replicates: a.critical_replicates, seed: a.cache.seed, ..Default::default() };
    let mut cache = Cache::open(&a.cache)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut failed = 0;
    for spec in specs.into_iter().map(Result::unwrap) {
        for &n in &a.n {
            for &r in &a.r {
                for &param in &a.param {
                    let kind = match a.contaminant {
                        ContaminantKind::Exponential => Contaminant::TwoParamExponential { theta: param },
                        ContaminantKind::TruncatedNormal => Contaminant::TruncatedNormal { mu: param, rho: a.rho.unwrap_or(0.0) },
                    };
                    let cspec = ContaminationSpec { alpha_bar: a.alpha_bar, ..ContaminationSpec::new(kind, side, r) };
                    let res = run_cell(&spec, a.tuning.family, n, &cspec, a.replicates, a.cache.seed, &opts, Some(&mut cache.table));
                    let row = match res {
                        Ok(res) => ExperimentRow {
                            method: res.method,
                            family: a.tuning.family.as_str().into(),
                            n,
                            r,
                            param,
                            d_oo: Some(res.d_oo),
                            d_on: Some(res.d_on),
                            d_no: Some(res.d_no),
                            d_nn: Some(res.d_nn),
                            significance: Some(res.significance),
                            m: res.replicates,
                            seed: res.seed,
                            error: String::new(),
                        },
                        Err(e) => {
                            failed += 1;
                            ExperimentRow {
                                method: spec.label(n),
                                family: a.tuning.family.as_str().into(),
                                n,
                                r,
                                param,
                                d_oo: None,
                                d_on: None,
                                d_no: None,
                                d_nn: None,
                                significance: None,
                                m: a.replicates,
                                seed: a.cache.seed,
                                error: e.to_string(),
                            }
                        }
                    };
                    w.serialize(row).map_err(|e| Failure::Invariant(e.to_string()))?;
                }
            }
        }
    }
    cache.save()?;
    if failed > 0 {
        eprintln!("{failed} cell(s) failed; see the error column");
    }
    let bytes = w.into_inner().map_err(|e| Failure::Invariant(e.to_string()))?;
    write_output(a.output.as_deref(), &bytes)
}

#[derive(Serialize)]
struct CurveRow {
    method: String,
    family: String,
    n: usize,
    alpha: f64,
    significance: f64,
    #[serde(rename = "M")]
    m: usize,
    seed: u64,
}

pub fn significance_curve(a: &CurveArgs) -> CliResult<()> {
    let spec = method_spec(a.method, &a.tuning, None, false)?;
    if a.replicates == 0 {
        return Err(Failure::Config("--replicates must be positive".into()));
    }
    let opts = PrepareOptions { replicates: a.critical_replicates, seed: a.cache.seed, ..Default::default() };
    let mut cache = Cache::open(&a.cache)?;
    let curve = simulation::significance_curve(&spec, a.tuning.family, &a.n, a.replicates, a.cache.seed, &opts, Some(&mut cache.table))?;
    cache.save()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (n, significance) in curve {
        w.serialize(CurveRow {
            method: spec.label(n),
            family: a.tuning.family.as_str().into(),
            n,
            alpha: a.tuning.alpha,
            significance,
            m: a.replicates,
            seed: a.cache.seed,
        })
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Invariant(e.to_string()))?;
    write_output(a.output.as_deref(), &bytes)
}
