//! Pinball loss on the constructor parameter and its subgradient.

use crate::stream::TargetLevel;

/// `(1 - alpha) * (theta - r)` above the radius, `alpha * (r - theta)` below.
///
/// Overshooting the radius costs the miscoverage rate per unit and
/// undershooting costs the coverage level, so the loss is minimized at the
/// `alpha` quantile of the radii and `1 - alpha - err` is its subgradient.
#[inline]
pub fn pinball(theta: f64, r: f64, alpha: TargetLevel) -> f64 {
    let a = alpha.get();
    if theta >= r {
        (1.0 - a) * (theta - r)
    } else {
        a * (r - theta)
    }
}

/// `1 - alpha - err`, always an element of the subdifferential at `theta`
/// when `err` was computed from the interval built with `theta`.
#[inline]
pub fn pinball_subgradient(err: bool, alpha: TargetLevel) -> f64 {
    1.0 - alpha.get() - if err { 1.0 } else { 0.0 }
}
