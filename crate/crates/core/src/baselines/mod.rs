//! Comparator methods: generalized Davies-Gather, Rosner, Bolshev and
//! Hawkins.

pub mod bolshev;
pub mod critical;
pub mod dg;
pub mod hawkins;
pub mod rosner;

use crate::distributions::Side;
use crate::error::{Error, Result};

/// Values searched in descending order for a side: `Ŷ`, `-Ŷ` or `|Ŷ|`.
pub(crate) fn oriented(z: &[f64], side: Side) -> Vec<f64> {
    match side {
        Side::Right => z.to_vec(),
        Side::Left => z.iter().map(|v| -v).collect(),
        Side::TwoSided => z.iter().map(|v| v.abs()).collect(),
    }
}

/// Splits declared indices into (right, left) according to the searched side.
pub(crate) fn split_by_side(idx: Vec<usize>, z: &[f64], side: Side) -> (Vec<usize>, Vec<usize>) {
    match side {
        Side::Right => (idx, Vec::new()),
        Side::Left => (Vec::new(), idx),
        Side::TwoSided => idx.into_iter().partition(|&i| z[i] >= 0.0),
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha {alpha} outside (0, 1)")))
    }
}

pub(crate) fn check_s(n: usize, s: usize) -> Result<()> {
    if s == 0 || s >= n {
        return Err(Error::Config(format!("s = {s} must lie in 1..{n}")));
    }
    Ok(())
}
