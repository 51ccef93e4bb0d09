use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical quantile by linear interpolation between order statistics.
///
/// `sorted` must be ascending. For `k` values the position is `(k - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartile tube of per-instance success curves for one solver and quality level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub solver: String,
    pub alpha: f64,
    pub times_ms: Vec<u64>,
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
}

/// Pointwise quartiles of `per_instance` curves sampled on `times_ms`.
pub fn quantile_curves(
    solver: &str,
    alpha: f64,
    times_ms: &[u64],
    per_instance: &[Vec<f64>],
) -> Result<QuantileCurve> {
    if per_instance.is_empty() {
        return Err(Error::InvalidInput(
            "quantile curves need at least one instance".into(),
        ));
    }
    if times_ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly ascending".into(),
        ));
    }
    if let Some(c) = per_instance.iter().find(|c| c.len() != times_ms.len()) {
        return Err(Error::InvalidInput(format!(
            "curve has {} points, grid has {}",
            c.len(),
            times_ms.len()
        )));
    }
    let mut curve = QuantileCurve {
        solver: solver.to_owned(),
        alpha,
        times_ms: times_ms.to_vec(),
        q25: Vec::with_capacity(times_ms.len()),
        q50: Vec::with_capacity(times_ms.len()),
        q75: Vec::with_capacity(times_ms.len()),
    };
    let mut column = vec![0.0; per_instance.len()];
    for j in 0..times_ms.len() {
        for (slot, c) in column.iter_mut().zip(per_instance) {
            *slot = c[j];
        }
        column.sort_by(f64::total_cmp);
        curve.q25.push(quantile_sorted(&column, 0.25));
        curve.q50.push(quantile_sorted(&column, 0.5));
        curve.q75.push(quantile_sorted(&column, 0.75));
    }
    Ok(curve)
}
