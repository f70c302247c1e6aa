//! Classification results shared by every detection method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::bolshev::BolshevStat;
use crate::baselines::dg::DgThresholds;
use crate::baselines::hawkins::HawkinsStat;
use crate::bp::{BpConfig, BpTrail};
use crate::error::{Error, Result};
use crate::estimators::RobustFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bp,
    Dg,
    Rosner,
    Bolshev,
    Hawkins,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bp, Method::Dg, Method::Rosner, Method::Bolshev, Method::Hawkins];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bp => "bp",
            Method::Dg => "dg",
            Method::Rosner => "rosner",
            Method::Bolshev => "bolshev",
            Method::Hawkins => "hawkins",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(Method::Bp),
            "dg" | "davies-gather" => Ok(Method::Dg),
            "rosner" => Ok(Method::Rosner),
            "bolshev" => Ok(Method::Bolshev),
            "hawkins" => Ok(Method::Hawkins),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected bp, dg, rosner, bolshev or hawkins)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    NoOutliers,
    OutliersFound,
}

/// Method-specific statistics behind a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Details {
    Bp { config: BpConfig, trails: Vec<BpTrail> },
    Dg { thresholds: DgThresholds },
    Rosner { r_values: Vec<f64>, lambdas: Vec<f64>, removed: Vec<usize> },
    Bolshev(BolshevStat),
    Hawkins(HawkinsStat),
}

/// Per-observation classification. Indices are 0-based positions in the
/// classified sample, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub method: Method,
    pub decision: Decision,
    pub n: usize,
    pub outlier_indices_right: Vec<usize>,
    pub outlier_indices_left: Vec<usize>,
    pub fit: RobustFit,
    pub details: Details,
}

impl OutlierReport {
    pub(crate) fn new(
        method: Method,
        n: usize,
        mut right: Vec<usize>,
        mut left: Vec<usize>,
        fit: RobustFit,
        details: Details,
    ) -> Self {
        right.sort_unstable();
        right.dedup();
        left.sort_unstable();
        left.dedup();
        let decision = if right.is_empty() && left.is_empty() {
            Decision::NoOutliers
        } else {
            Decision::OutliersFound
        };
        OutlierReport {
            method,
            decision,
            n,
            outlier_indices_right: right,
            outlier_indices_left: left,
            fit,
            details,
        }
    }

    /// All declared indices, ascending.
    pub fn outliers(&self) -> Vec<usize> {
        let mut all: Vec<usize> =
            self.outlier_indices_right.iter().chain(&self.outlier_indices_left).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn count(&self) -> usize {
        self.outlier_indices_right.len() + self.outlier_indices_left.len()
    }

    /// Per-observation outlier flags.
    pub fn flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.n];
        for &i in self.outlier_indices_right.iter().chain(&self.outlier_indices_left) {
            f[i] = true;
        }
        f
    }
}

/// A configured classifier, ready to be applied to samples of the size it
/// was prepared for.
pub trait Detector: Send + Sync {
    fn method(&self) -> Method;
    fn classify(&self, x: &[f64]) -> Result<OutlierReport>;
}
