//! Tuning-parameter grids.

use crate::error::{invalid, Result};

/// `count` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid("grid", format!("log grid needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(invalid("grid", "count must be at least 2"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => (a + (b - a) * i as f64 / last).exp(),
        })
        .collect())
}

/// `count` points evenly spaced from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(invalid("grid", format!("linear grid needs lo < hi, got [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(invalid("grid", "count must be at least 2"));
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i == count - 1 { hi } else { lo + (hi - lo) * i as f64 / last })
        .collect())
}

/// 200 log-spaced stopping times in `[1e-2, 1e2]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 200).expect("static grid")
}
