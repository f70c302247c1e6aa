//! Persistent table of simulated critical values.
//!
//! The file is UTF-8 text: one header line naming the format version, then
//! one tab-separated entry per line. Values are written with 17 significant
//! digits and levels in shortest round-trip form, so a table read back from
//! disk is bit-identical to the one written. Writes go to a temporary file
//! in the target directory that is then renamed over the destination, so
//! concurrent writers never leave a torn file (the last complete write wins).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::distributions::{Family, Side};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::mc::RNG_NAME;
use crate::report::Method;

pub const FORMAT_NAME: &str = "outlierkit-critical-values";
pub const FORMAT_VERSION: u32 = 1;
const FIELDS: usize = 14;
const NONE: &str = "-";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CriticalKey {
    pub method: String,
    /// Which statistic of the method, e.g. `v`, `u`, `g`, `h`, `lambda3`.
    pub quantity: String,
    pub family: String,
    pub estimator: String,
    /// `None` for asymptotic values that do not depend on `n`.
    pub n: Option<usize>,
    pub s: usize,
    pub alpha_bits: u64,
    pub side: String,
}

impl CriticalKey {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        method: Method,
        quantity: &str,
        family: Option<Family>,
        estimator: Option<EstimatorKind>,
        n: Option<usize>,
        s: usize,
        alpha: f64,
        side: Option<Side>,
    ) -> Self {
        CriticalKey {
            method: method.as_str().to_string(),
            quantity: quantity.to_string(),
            family: family.map_or(NONE.into(), |f| f.as_str().into()),
            estimator: estimator.map_or(NONE.into(), |e| e.as_str().into()),
            n,
            s,
            alpha_bits: alpha.to_bits(),
            side: side.map_or(NONE.into(), |s| s.as_str().into()),
        }
    }

    pub fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalEntry {
    pub value: f64,
    pub replicates: usize,
    pub seed: u64,
    pub rng_name: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub tool_version: String,
}

impl CriticalEntry {
    /// Entry stamped with the current time, generator and crate version.
    pub fn now(value: f64, replicates: usize, seed: u64) -> Self {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        CriticalEntry {
            value,
            replicates,
            seed,
            rng_name: RNG_NAME.to_string(),
            created_at,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalValueTable {
    entries: BTreeMap<CriticalKey, CriticalEntry>,
}

impl CriticalValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &CriticalKey) -> Option<&CriticalEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: CriticalKey, entry: CriticalEntry) -> Option<CriticalEntry> {
        self.entries.insert(key, entry)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CriticalKey, &CriticalEntry)> {
        self.entries.iter()
    }

    /// Cached value for `key`, or `compute` it and record the result.
    pub fn get_or_insert_with<F>(&mut self, key: CriticalKey, replicates: usize, seed: u64, compute: F) -> Result<f64>
    where
        F: FnOnce() -> Result<f64>,
    {
        if let Some(e) = self.entries.get(&key) {
            return Ok(e.value);
        }
        let v = compute()?;
        self.entries.insert(key, CriticalEntry::now(v, replicates, seed));
        Ok(v)
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {FORMAT_NAME}/{FORMAT_VERSION}\n");
        for (k, e) in &self.entries {
            let n = k.n.map_or_else(|| "asymptotic".to_string(), |n| n.to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.16e}\t{}\t{}\t{}\t{}\t{}",
                k.method,
                k.quantity,
                k.family,
                k.estimator,
                n,
                k.s,
                k.alpha(),
                k.side,
                e.value,
                e.replicates,
                e.seed,
                e.rng_name,
                e.created_at,
                e.tool_version
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
        let version = header
            .strip_prefix("# ")
            .and_then(|h| h.strip_prefix(FORMAT_NAME))
            .and_then(|h| h.strip_prefix('/'))
            .ok_or_else(|| Error::CacheFormat(format!("line 1: expected header '# {FORMAT_NAME}/<version>'")))?;
        if version != FORMAT_VERSION.to_string() {
            return Err(Error::CacheVersion { found: version.to_string(), expected: FORMAT_VERSION.to_string() });
        }
        let mut table = CriticalValueTable::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = i + 1;
            let bad = |what: &str| Error::CacheFormat(format!("line {lineno}: {what}"));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != FIELDS {
                return Err(bad(&format!("expected {FIELDS} tab-separated fields, found {}", f.len())));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad {what} '{s}'")));
            let int = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(&format!("bad {what} '{s}'")));
            let n = if f[4] == "asymptotic" { None } else { Some(int(f[4], "n")? as usize) };
            let key = CriticalKey {
                method: f[0].to_string(),
                quantity: f[1].to_string(),
                family: f[2].to_string(),
                estimator: f[3].to_string(),
                n,
                s: int(f[5], "s")? as usize,
                alpha_bits: num(f[6], "alpha")?.to_bits(),
                side: f[7].to_string(),
            };
            let entry = CriticalEntry {
                value: num(f[8], "value")?,
                replicates: int(f[9], "replicates")? as usize,
                seed: int(f[10], "seed")?,
                rng_name: f[11].to_string(),
                created_at: int(f[12], "created_at")?,
                tool_version: f[13].to_string(),
            };
            if table.entries.insert(key, entry).is_some() {
                return Err(bad("duplicate key"));
            }
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Reads `path`, or returns an empty table if it does not exist.
    pub fn read_or_empty(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::read(path)
        } else {
            Ok(Self::new())
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.render().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::from(e.error))?;
        Ok(())
    }
}
