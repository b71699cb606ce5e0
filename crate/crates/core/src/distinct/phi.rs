//! Expected bin occupancy when throwing balls into bins, and its inverse.

use crate::error::{Result, SketchError};

/// Expected number of non-empty bins after `balls` balls land uniformly in
/// `bins` bins: `B * (1 - (1 - 1/B)^t)`.
pub fn phi(balls: f64, bins: u64) -> Result<f64> {
    if bins == 0 {
        return Err(SketchError::Domain("phi needs at least one bin".into()));
    }
    if !(balls >= 0.0) {
        return Err(SketchError::Domain(format!("negative ball count {balls}")));
    }
    if bins == 1 {
        return Ok(if balls == 0.0 { 0.0 } else { 1.0 });
    }
    let b = bins as f64;
    Ok(-b * (balls * (-1.0 / b).ln_1p()).exp_m1())
}

/// Number of balls whose expected occupancy is `occupancy`; inverse of [`phi`].
pub fn phi_inv(bins: u64, occupancy: f64) -> Result<f64> {
    if bins == 0 {
        return Err(SketchError::Domain("phi_inv needs at least one bin".into()));
    }
    let b = bins as f64;
    if !(occupancy >= 0.0) || occupancy >= b {
        return Err(SketchError::Domain(format!(
            "occupancy {occupancy} outside [0, {bins})"
        )));
    }
    if occupancy == 0.0 {
        return Ok(0.0);
    }
    Ok((-occupancy / b).ln_1p() / (-1.0 / b).ln_1p())
}
