use std::fmt::Write;

use outlierkit_core::{MethodSpec, OutlierReport, RobustFit};
use serde::Serialize;
use serde_json::Value;

use crate::commands::Cache;
use crate::error::{CliResult, Failure};
use crate::DetectArgs;

#[derive(Serialize)]
pub struct ConfigEcho {
    pub command: &'static str,
    pub method: String,
    pub family: String,
    pub side: String,
    pub alpha: f64,
    pub s: Option<usize>,
    pub input: String,
    pub column: String,
    pub seed: u64,
    pub replicates: usize,
    pub shape_scale: bool,
    pub exact: bool,
    pub force: bool,
}

#[derive(Serialize)]
pub struct CacheEcho {
    pub path: String,
    pub fingerprint: String,
    pub entries: usize,
    pub added: usize,
}

#[derive(Serialize)]
pub struct Observation {
    pub index: usize,
    pub value: f64,
    pub z: f64,
    pub side: &'static str,
}

/// Machine-readable detection report. Observation indices are 1-based.
#[derive(Serialize)]
pub struct JsonReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ConfigEcho,
    pub cache: CacheEcho,
    pub n: usize,
    pub decision: String,
    pub outliers: Vec<usize>,
    pub outliers_right: Vec<usize>,
    pub outliers_left: Vec<usize>,
    pub observations: Vec<Observation>,
    pub fit: RobustFit,
    pub details: Value,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

fn shift_index(v: &mut Value) {
    if let Some(i) = v.as_u64() {
        *v = Value::from(i + 1);
    }
}

/// Rewrites the 0-based observation indices inside method details.
fn one_based_details(mut d: Value) -> Value {
    match d.get("kind").and_then(Value::as_str) {
        Some("bp") => {
            if let Some(trails) = d.get_mut("trails").and_then(Value::as_array_mut) {
                for step in trails.iter_mut().filter_map(|t| t.get_mut("steps")).filter_map(Value::as_array_mut).flatten() {
                    if let Some(r) = step.get_mut("rejected_this_step") {
                        shift_index(r);
                    }
                }
            }
        }
        Some("rosner") => {
            if let Some(removed) = d.get_mut("removed").and_then(Value::as_array_mut) {
                removed.iter_mut().for_each(shift_index);
            }
        }
        _ => {}
    }
    d
}

fn spec_s(spec: &MethodSpec, n: usize) -> Option<usize> {
    match *spec {
        MethodSpec::Bp { s, .. } | MethodSpec::Bolshev { s, .. } | MethodSpec::Hawkins { s, .. } => Some(s),
        MethodSpec::Rosner { s, .. } => Some(s.unwrap_or_else(|| outlierkit_core::baselines::rosner::default_s(n))),
        MethodSpec::Dg { .. } => None,
    }
}

impl JsonReport {
    pub fn new(
        a: &DetectArgs,
        spec: &MethodSpec,
        report: &OutlierReport,
        x: &[f64],
        z: &[f64],
        cache: &Cache,
        added: usize,
    ) -> CliResult<Self> {
        let details = serde_json::to_value(&report.details).map_err(|e| Failure::Invariant(e.to_string()))?;
        let mut observations: Vec<Observation> = report
            .outlier_indices_right
            .iter()
            .map(|&i| (i, "right"))
            .chain(report.outlier_indices_left.iter().map(|&i| (i, "left")))
            .map(|(i, side)| Observation { index: i + 1, value: x[i], z: z[i], side })
            .collect();
        observations.sort_by_key(|o| o.index);
        Ok(JsonReport {
            tool: "outlierkit",
            version: env!("CARGO_PKG_VERSION"),
            config: ConfigEcho {
                command: "detect",
                method: spec.label(report.n),
                family: a.tuning.family.to_string(),
                side: a.tuning.side.to_string(),
                alpha: a.tuning.alpha,
                s: spec_s(spec, report.n),
                input: a.input.display().to_string(),
                column: a.column.clone(),
                seed: a.cache.seed,
                replicates: a.replicates,
                shape_scale: a.shape_scale,
                exact: a.exact,
                force: a.force,
            },
            cache: CacheEcho {
                path: cache.path.display().to_string(),
                fingerprint: cache.fingerprint(),
                entries: cache.table.len(),
                added,
            },
            n: report.n,
            decision: format!("{:?}", report.decision),
            outliers: one_based(&report.outliers()),
            outliers_right: one_based(&report.outlier_indices_right),
            outliers_left: one_based(&report.outlier_indices_left),
            observations,
            fit: report.fit,
            details: one_based_details(details),
        })
    }
}

fn bp_trails(out: &mut String, details: &Value) {
    let Some(trails) = details.get("trails").and_then(Value::as_array) else { return };
    for t in trails {
        let side = t.get("side").and_then(Value::as_str).unwrap_or("?");
        let _ = writeln!(out, "\nStep trail ({side}):");
        let Some(steps) = t.get("steps").and_then(Value::as_array) else { continue };
        let s = steps.first().and_then(|s| s["u_values"].as_array()).map_or(0, Vec::len);
        let mut head = format!("{:>4} {:>5}", "l", "m");
        for i in 1..=s {
            let _ = write!(head, " {:>9}", format!("U{i}"));
        }
        let _ = writeln!(out, "{head} {:>4} {:>8}", "d_l", "removed");
        for step in steps {
            let int = |k: &str| step[k].as_u64().unwrap_or(0);
            let mut line = format!("{:>4} {:>5}", int("step_index"), int("sample_size_used"));
            for u in step["u_values"].as_array().into_iter().flatten() {
                let _ = write!(line, " {:>9.6}", u.as_f64().unwrap_or(f64::NAN));
            }
            let removed = step["rejected_this_step"].as_u64().map_or("-".to_string(), |i| i.to_string());
            let _ = writeln!(out, "{line} {:>4} {:>8}", int("d_l"), removed);
        }
        if t["truncated"].as_bool() == Some(true) {
            let _ = writeln!(out, "search stopped after n/2 rejections");
        }
    }
}

/// Human-readable summary of a report.
pub fn render_text(r: &JsonReport) -> String {
    let mut out = String::new();
    let c = &r.config;
    let _ = writeln!(
        out,
        "method {} | family {} | side {} | alpha {} | n {}",
        c.method, c.family, c.side, c.alpha, r.n
    );
    let _ = writeln!(out, "location {:.6} | scale {:.6} ({})", r.fit.mu_hat, r.fit.sigma_hat, r.fit.method);
    let _ = writeln!(out, "decision: {} ({} declared)", r.decision, r.outliers.len());
    if !r.observations.is_empty() {
        let _ = writeln!(out, "\n{:>6} {:>14} {:>10} {:>6}", "index", "value", "z", "side");
        for o in &r.observations {
            let _ = writeln!(out, "{:>6} {:>14.6} {:>10.4} {:>6}", o.index, o.value, o.z, o.side);
        }
    }
    if r.details.get("kind").and_then(Value::as_str) == Some("bp") {
        bp_trails(&mut out, &r.details);
    }
    out
}
