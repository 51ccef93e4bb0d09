use std::cell::Cell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One improvement of a run's best-so-far tour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncumbentEvent {
    #[serde(rename = "t_ms")]
    pub elapsed_ms: u64,
    pub evals: u64,
    #[serde(rename = "len", serialize_with = "serialize_length")]
    pub length: f64,
}

/// Writes integral lengths as JSON integers and everything else as decimals.
pub(crate) fn serialize_length<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        s.serialize_i64(*v as i64)
    } else {
        s.serialize_f64(*v)
    }
}

/// Timestamped incumbent history of a single solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub instance: String,
    pub solver: String,
    pub seed: u64,
    pub cutoff_ms: u64,
    pub events: Vec<IncumbentEvent>,
}

impl Trajectory {
    pub fn final_length(&self) -> Option<f64> {
        self.events.last().map(|e| e.length)
    }

    /// Best length among events with `elapsed_ms <= t_ms`.
    pub fn best_within(&self, t_ms: u64) -> Option<f64> {
        self.events
            .iter()
            .take_while(|e| e.elapsed_ms <= t_ms)
            .last()
            .map(|e| e.length)
    }

    /// Checks the ordering invariants of the event list.
    pub fn check_monotone(&self) -> Result<()> {
        let mut rec = TrajectoryRecorder::default();
        for e in &self.events {
            rec.record(*e)?;
        }
        Ok(())
    }
}

/// Sink for incumbent improvements emitted by a running solver.
pub trait Recorder {
    fn record(&mut self, event: IncumbentEvent) -> Result<()>;
}

impl<R: Recorder + ?Sized> Recorder for &mut R {
    fn record(&mut self, event: IncumbentEvent) -> Result<()> {
        (**self).record(event)
    }
}

/// In-memory recorder that enforces strict improvement and nondecreasing time.
#[derive(Debug, Default, Clone)]
pub struct TrajectoryRecorder {
    events: Vec<IncumbentEvent>,
}

impl TrajectoryRecorder {
    pub fn events(&self) -> &[IncumbentEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<IncumbentEvent> {
        self.events
    }
}

impl Recorder for TrajectoryRecorder {
    fn record(&mut self, event: IncumbentEvent) -> Result<()> {
        if let Some(last) = self.events.last() {
            if !(event.length < last.length) {
                return Err(Error::MonotonicityViolation {
                    previous: last.length,
                    new: event.length,
                });
            }
            if event.elapsed_ms < last.elapsed_ms || event.evals < last.evals {
                return Err(Error::InvalidInput(format!(
                    "event clock went backwards: ({} ms, {} evals) after ({} ms, {} evals)",
                    event.elapsed_ms, event.evals, last.elapsed_ms, last.evals
                )));
            }
        }
        self.events.push(event);
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullRecorder;

impl Recorder for NullRecorder {
    fn record(&mut self, _event: IncumbentEvent) -> Result<()> {
        Ok(())
    }
}

/// How elapsed time is measured during a run.
///
/// `Evals` replaces the wall clock with a virtual clock that advances by one
/// millisecond every `evals_per_ms` evaluations, making runs reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    #[default]
    Wall,
    Evals,
}

impl std::str::FromStr for TimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(TimeMode::Wall),
            "evals" => Ok(TimeMode::Evals),
            _ => Err(Error::InvalidInput(format!("unknown time mode `{s}`"))),
        }
    }
}

pub const DEFAULT_EVALS_PER_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLimits {
    pub cutoff_ms: u64,
    pub time_mode: TimeMode,
    pub evals_per_ms: u64,
    /// Stop as soon as the incumbent is this short. Only useful when the
    /// optimum is already known and nothing after it matters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_length: Option<f64>,
}

impl RunLimits {
    pub fn wall(cutoff_ms: u64) -> Self {
        RunLimits {
            cutoff_ms,
            time_mode: TimeMode::Wall,
            evals_per_ms: DEFAULT_EVALS_PER_MS,
            target_length: None,
        }
    }

    pub fn evals(cutoff_ms: u64) -> Self {
        RunLimits {
            cutoff_ms,
            time_mode: TimeMode::Evals,
            evals_per_ms: DEFAULT_EVALS_PER_MS,
            target_length: None,
        }
    }

    pub fn with_target(mut self, length: f64) -> Self {
        self.target_length = Some(length);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff_ms == 0 {
            return Err(Error::InvalidConfig("cutoff must be positive".into()));
        }
        if self.evals_per_ms == 0 {
            return Err(Error::InvalidConfig("evals_per_ms must be positive".into()));
        }
        Ok(())
    }
}

/// Evaluation counter plus the run clock; solvers poll [`Budget::expired`]
/// at loop heads.
#[derive(Debug, Clone)]
pub struct Budget {
    mode: TimeMode,
    start: Instant,
    evals: u64,
    cutoff_ms: u64,
    evals_per_ms: u64,
    target: Option<f64>,
    reached: Cell<bool>,
}

impl Budget {
    pub fn new(limits: &RunLimits) -> Self {
        Budget {
            mode: limits.time_mode,
            start: Instant::now(),
            evals: 0,
            cutoff_ms: limits.cutoff_ms,
            evals_per_ms: limits.evals_per_ms.max(1),
            target: limits.target_length,
            reached: Cell::new(false),
        }
    }

    /// A budget that never expires, for standalone operator calls.
    pub fn unlimited() -> Self {
        Budget {
            mode: TimeMode::Evals,
            start: Instant::now(),
            evals: 0,
            cutoff_ms: u64::MAX,
            evals_per_ms: 1,
            target: None,
            reached: Cell::new(false),
        }
    }

    #[inline]
    pub fn charge(&mut self, k: u64) {
        self.evals = self.evals.saturating_add(k);
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn elapsed_ms(&self) -> u64 {
        match self.mode {
            TimeMode::Wall => self.start.elapsed().as_millis() as u64,
            TimeMode::Evals => self.evals / self.evals_per_ms,
        }
    }

    /// Notes a new run-best length; the budget expires once it meets the target.
    pub fn note_incumbent(&self, length: f64) {
        if self.target.is_some_and(|t| length <= t) {
            self.reached.set(true);
        }
    }

    #[inline]
    pub fn expired(&self) -> bool {
        if self.reached.get() {
            return true;
        }
        match self.mode {
            TimeMode::Wall => self.elapsed_ms() >= self.cutoff_ms,
            TimeMode::Evals => self.evals >= self.cutoff_ms.saturating_mul(self.evals_per_ms),
        }
    }

    pub fn cutoff_ms(&self) -> u64 {
        self.cutoff_ms
    }
}
