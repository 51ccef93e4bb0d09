//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped before ranking. Tied absolute differences get
//! average ranks. Up to [`EXACT_MAX_PAIRS`] effective pairs the null
//! distribution is computed exactly over all sign assignments. Beyond that a
//! normal approximation with tie and continuity correction is used.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of effective pairs handled by the exact distribution.
pub const EXACT_MAX_PAIRS: usize = 25;

/// Absolute differences closer than this (relative) share a rank.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    TwoSided,
    /// `x` tends to be larger than `y`.
    #[default]
    Greater,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            _ => Err(Error::InvalidInput(format!("unknown alternative `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: Method,
    /// All differences were zero; `p_value` is 1.
    pub degenerate: bool,
}

/// Signed ranks after dropping zeros: `(rank, positive)` in input order.
fn signed_ranks(x: &[f64], y: &[f64]) -> Result<Vec<(f64, bool)>> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidInput(format!(
            "paired samples need equal nonzero length, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite paired difference".into()));
    }
    let mut idx: Vec<usize> = (0..diffs.len()).collect();
    idx.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; diffs.len()];
    let mut i = 0;
    while i < idx.len() {
        let base = diffs[idx[i]].abs();
        let mut j = i + 1;
        while j < idx.len() && diffs[idx[j]].abs() - base <= TIE_EPS * base {
            j += 1;
        }
        // positions i..j share the mean of ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    Ok(ranks
        .into_iter()
        .zip(diffs)
        .map(|(r, d)| (r, d > 0.0))
        .collect())
}

/// Exact `P(W >= w)` and `P(W <= w)` for the given ranks under the null.
///
/// Ranks are doubled so that average ranks become integers; the count of sign
/// assignments reaching each doubled sum is built up one rank at a time.
fn exact_tails(ranks: &[f64], w: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w2 = (2.0 * w).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let upper: f64 = counts[w2.min(total + 1)..].iter().sum();
    let lower: f64 = counts[..=w2.min(total)].iter().sum();
    (upper / all, lower / all)
}

fn normal_tails(ranks: &[f64], w: f64) -> (f64, f64) {
    let k = ranks.len() as f64;
    let mean = k * (k + 1.0) / 4.0;
    let mut var = k * (k + 1.0) * (2.0 * k + 1.0) / 24.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        var -= (t * t * t - t) / 48.0;
    }
    let sd = var.sqrt();
    let z = Normal::new(0.0, 1.0).expect("standard normal");
    if sd == 0.0 {
        return (1.0, 1.0);
    }
    let upper = 1.0 - z.cdf((w - mean - 0.5) / sd);
    let lower = z.cdf((w - mean + 0.5) / sd);
    (upper, lower)
}

/// Signed-rank test choosing the method by the number of effective pairs.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonResult> {
    let ranks = signed_ranks(x, y)?;
    let method = if ranks.len() <= EXACT_MAX_PAIRS {
        Method::Exact
    } else {
        Method::NormalApproximation
    };
    wilcoxon_with_method(x, y, alternative, method)
}

/// Signed-rank test with an explicit method (the exact path is limited to
/// [`EXACT_MAX_PAIRS`] effective pairs).
pub fn wilcoxon_with_method(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    method: Method,
) -> Result<WilcoxonResult> {
    let signed = signed_ranks(x, y)?;
    if signed.is_empty() {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            method,
            degenerate: true,
        });
    }
    if method == Method::Exact && signed.len() > EXACT_MAX_PAIRS {
        return Err(Error::InvalidInput(format!(
            "exact distribution limited to {EXACT_MAX_PAIRS} pairs, got {}",
            signed.len()
        )));
    }
    let w: f64 = signed.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let ranks: Vec<f64> = signed.iter().map(|(r, _)| *r).collect();
    let (upper, lower) = match method {
        Method::Exact => exact_tails(&ranks, w),
        Method::NormalApproximation => normal_tails(&ranks, w),
    };
    let p = match alternative {
        Alternative::Greater => upper,
        Alternative::TwoSided => 2.0 * upper.min(lower),
    };
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        n_effective: signed.len(),
        method,
        degenerate: false,
    })
}

/// For every solver, the solvers it beats significantly.
///
/// `x` is marked on `s` when the one-sided test of `s` greater than `x` on
/// the paired per-instance values gives `p < level`.
pub fn significance_matrix(
    per_solver: &BTreeMap<String, Vec<f64>>,
    level: f64,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut lens = per_solver.values().map(Vec::len);
    if let Some(first) = lens.next() {
        if lens.any(|l| l != first) {
            return Err(Error::InvalidInput(
                "solvers evaluated on different instance sets".into(),
            ));
        }
    }
    let mut marks = BTreeMap::new();
    for (s, xs) in per_solver {
        let mut beaten = Vec::new();
        for (other, ys) in per_solver {
            if other == s {
                continue;
            }
            if wilcoxon_signed_rank(xs, ys, Alternative::Greater)?.p_value < level {
                beaten.push(other.clone());
            }
        }
        marks.insert(s.clone(), beaten);
    }
    Ok(marks)
}
