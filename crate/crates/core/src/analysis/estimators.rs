//! Success indicators, success probabilities, first hitting times and PAR.
//!
//! Durations are integer milliseconds, matching trajectory timestamps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::Trajectory;

/// Relative slack absorbing rounding in `(1 + alpha) * reference`.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Largest length that counts as a success at quality level `alpha`.
pub fn quality_threshold(alpha: f64, reference: f64) -> f64 {
    (1.0 + alpha) * reference * (1.0 + THRESHOLD_SLACK)
}

fn check_reference(alpha: f64, reference: f64) -> Result<()> {
    if !(reference > 0.0) || !reference.is_finite() {
        return Err(Error::InvalidInput(format!(
            "reference length must be positive, got {reference}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// Whether the run found a tour within `(1 + alpha) * reference` by time `t_ms`.
pub fn success_indicator(traj: &Trajectory, alpha: f64, t_ms: u64, reference: f64) -> Result<bool> {
    check_reference(alpha, reference)?;
    if t_ms > traj.cutoff_ms {
        return Err(Error::OutOfRange {
            requested_ms: t_ms,
            cutoff_ms: traj.cutoff_ms,
        });
    }
    Ok(first_hitting_time(traj, alpha, reference)?.is_some_and(|hit| hit <= t_ms))
}

/// Fraction of runs that succeed at `(alpha, t_ms)`.
pub fn estimate_success_probability(
    runs: &[Trajectory],
    alpha: f64,
    t_ms: u64,
    reference: f64,
) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::InvalidInput(
            "success probability of an empty run set".into(),
        ));
    }
    if let Some(r) = runs.iter().find(|r| r.cutoff_ms != runs[0].cutoff_ms) {
        return Err(Error::InvalidInput(format!(
            "runs have different cutoffs ({} ms vs {} ms)",
            runs[0].cutoff_ms, r.cutoff_ms
        )));
    }
    let mut hits = 0usize;
    for r in runs {
        hits += usize::from(success_indicator(r, alpha, t_ms, reference)?);
    }
    Ok(hits as f64 / runs.len() as f64)
}

/// Mean of per-instance success probabilities.
pub fn aggregate_set_probability(per_instance: &[f64]) -> Result<f64> {
    if per_instance.is_empty() {
        return Err(Error::InvalidInput(
            "aggregate over an empty instance set".into(),
        ));
    }
    Ok(per_instance.iter().sum::<f64>() / per_instance.len() as f64)
}

/// Time of the earliest event within `(1 + alpha) * reference`, if any.
pub fn first_hitting_time(traj: &Trajectory, alpha: f64, reference: f64) -> Result<Option<u64>> {
    check_reference(alpha, reference)?;
    let limit = quality_threshold(alpha, reference);
    Ok(traj
        .events
        .iter()
        .find(|e| e.length <= limit && e.elapsed_ms <= traj.cutoff_ms)
        .map(|e| e.elapsed_ms))
}

/// Worst-case first hitting time over a set of runs.
///
/// When some run never reaches the target the value is the largest cutoff
/// and `censored` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxHittingTime {
    pub value_ms: u64,
    pub censored: bool,
}

/// Maximum first hitting time over `(trajectory, reference)` pairs.
pub fn max_first_hitting_time<'a, I>(runs: I, alpha: f64) -> Result<MaxHittingTime>
where
    I: IntoIterator<Item = (&'a Trajectory, f64)>,
{
    let mut out = MaxHittingTime {
        value_ms: 0,
        censored: false,
    };
    let mut max_cutoff = 0;
    let mut any = false;
    for (traj, reference) in runs {
        any = true;
        max_cutoff = max_cutoff.max(traj.cutoff_ms);
        match first_hitting_time(traj, alpha, reference)? {
            Some(t) => out.value_ms = out.value_ms.max(t),
            None => out.censored = true,
        }
    }
    if !any {
        return Err(Error::InvalidInput(
            "max hitting time of an empty run set".into(),
        ));
    }
    if out.censored {
        out.value_ms = max_cutoff;
    }
    Ok(out)
}

/// Penalized average runtime: unsuccessful runs count as `f * cutoff`.
pub fn par_score(times_ms: &[Option<f64>], cutoff_ms: f64, f: f64) -> Result<f64> {
    if times_ms.is_empty() {
        return Err(Error::InvalidInput("PAR of an empty run set".into()));
    }
    if !(f >= 1.0) || !(cutoff_ms > 0.0) {
        return Err(Error::InvalidInput(format!(
            "PAR needs f >= 1 and T > 0, got f={f}, T={cutoff_ms}"
        )));
    }
    let total: f64 = times_ms.iter().map(|t| t.unwrap_or(f * cutoff_ms)).sum();
    Ok(total / times_ms.len() as f64)
}

/// Relative gap `best / reference - 1` of the best tour found by `t_ms`.
///
/// Infinite when the run has no incumbent yet.
pub fn gap_at(traj: &Trajectory, t_ms: u64, reference: f64) -> f64 {
    traj.best_within(t_ms)
        .map_or(f64::INFINITY, |b| b / reference - 1.0)
}
