//! Multiple outlier identification for location-scale and shape-scale
//! families.
//!
//! The main procedure ([`bp`]) compares the extreme z-scores of a robustly
//! standardized sample with the limit law of normalized order statistics.
//! Four comparator methods live in [`baselines`], and [`simulation`] holds a
//! seeded Monte Carlo harness for masking and swamping studies.

pub mod baselines;
pub mod bp;
pub mod cache;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod mc;
pub mod report;
pub mod simulation;
pub mod special;

pub use baselines::{
    bolshev::{BolshevDetector, BolshevStat},
    dg::{DgDetector, DgThresholds},
    hawkins::{HawkinsDetector, HawkinsStat},
    rosner::{RosnerConfig, RosnerDetector},
};
pub use bp::{BpConfig, BpDetector, BpStepRecord, BpTrail};
pub use cache::{CriticalEntry, CriticalKey, CriticalValueTable};
pub use distributions::{Family, GammaClass, NormalizingConstants, OutlierRegion, Side};
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, RobustFit};
pub use report::{Decision, Detector, Details, Method, OutlierReport};
pub use simulation::{Contaminant, ContaminationSide, ContaminationSpec, McResult, MethodSpec, PrepareOptions};
