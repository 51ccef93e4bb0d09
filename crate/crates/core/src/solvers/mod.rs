//! Trajectory-emitting TSP solvers: an iterated local search in the LKH
//! family, an edge-assembly genetic algorithm, their crossover operators, and
//! an exact dynamic program for tiny instances.

mod construct;
mod eax;
mod ga;
mod held_karp;
mod ils;
mod ipt;
mod local_search;
mod perturb;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Instance, Tour};

pub use construct::{greedy_initial_tour, random_tour};
pub use eax::{ab_cycles, eax_crossover, AbCycle};
pub use ga::solve_ga;
pub use held_karp::{held_karp_exact, HELD_KARP_MAX_N};
pub use ils::solve_ils;
pub use ipt::partition_crossover_ipt;
pub use local_search::{local_search_2opt_oropt, LocalSearch};
pub use perturb::{double_bridge, double_bridge_at, DoubleBridge};
pub(crate) use trajectory::serialize_length;
pub use trajectory::{
    Budget, IncumbentEvent, NullRecorder, Recorder, RunLimits, TimeMode, Trajectory,
    TrajectoryRecorder, DEFAULT_EVALS_PER_MS,
};

pub(crate) type SolverRng = ChaCha8Rng;

pub(crate) fn rng_from_seed(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverFamily {
    Ils,
    Ga,
}

/// Recombination used by a solver. For the GA, `Ipt` means EAX followed by a
/// partition-crossover pass of each accepted offspring against its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossover {
    None,
    Ipt,
    Eax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub family: SolverFamily,
    pub crossover: Crossover,
    pub restart: bool,
    /// Population size (GA).
    pub population: usize,
    /// Offspring generated per parent pair (GA).
    pub offspring: usize,
    /// Candidate-list length for local search and subtour merging.
    pub neighbors: usize,
    /// Kicks without improvement that end an ILS trial.
    pub kicks: usize,
    /// Consecutive non-improving trials before an ILS restart.
    pub restart_trials: usize,
    /// Generations without population-best improvement before a GA restart.
    pub stall_generations: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::ils(0)
    }
}

impl SolverConfig {
    pub fn ils(seed: u64) -> Self {
        SolverConfig {
            family: SolverFamily::Ils,
            crossover: Crossover::Ipt,
            restart: true,
            population: 30,
            offspring: 30,
            neighbors: 8,
            kicks: 50,
            restart_trials: 20,
            stall_generations: 50,
            seed,
        }
    }

    pub fn ga(seed: u64) -> Self {
        SolverConfig {
            family: SolverFamily::Ga,
            crossover: Crossover::Eax,
            ..SolverConfig::ils(seed)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match (self.family, self.crossover) {
            (SolverFamily::Ils, Crossover::Eax) => {
                return bad("ils supports crossover none or ipt")
            }
            (SolverFamily::Ga, Crossover::None) => return bad("ga supports crossover eax or ipt"),
            _ => {}
        }
        if self.family == SolverFamily::Ga && self.population < 2 {
            return bad("ga population must be at least 2");
        }
        if self.offspring < 1 {
            return bad("offspring count must be at least 1");
        }
        if self.neighbors < 2 {
            return bad("candidate list length must be at least 2");
        }
        if self.kicks < 1 || self.restart_trials < 1 || self.stall_generations < 1 {
            return bad("stagnation thresholds must be at least 1");
        }
        Ok(())
    }

    /// Short human-readable name, e.g. `ils+r(ipt)` or `ga+r`.
    pub fn label(&self) -> String {
        let base = match self.family {
            SolverFamily::Ils => "ils",
            SolverFamily::Ga => "ga",
        };
        let r = if self.restart { "+r" } else { "" };
        let x = match (self.family, self.crossover) {
            (SolverFamily::Ils, Crossover::Ipt) | (SolverFamily::Ga, Crossover::Ipt) => "(ipt)",
            _ => "",
        };
        format!("{base}{r}{x}")
    }
}

/// Runs the solver selected by `cfg.family`.
pub fn solve(
    inst: &Instance,
    cfg: &SolverConfig,
    limits: &RunLimits,
    recorder: &mut dyn Recorder,
) -> Result<Trajectory> {
    match cfg.family {
        SolverFamily::Ils => solve_ils(inst, cfg, limits, recorder),
        SolverFamily::Ga => solve_ga(inst, cfg, limits, recorder),
    }
}

/// Tracks the run-best tour and emits an event on each strict improvement.
pub(crate) struct Incumbent<'r> {
    best: Option<Tour>,
    events: Vec<IncumbentEvent>,
    recorder: &'r mut dyn Recorder,
}

impl<'r> Incumbent<'r> {
    pub(crate) fn new(recorder: &'r mut dyn Recorder) -> Self {
        Incumbent {
            best: None,
            events: Vec::new(),
            recorder,
        }
    }

    pub(crate) fn best_length(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |t| {
            t.cached_length().unwrap_or(f64::INFINITY)
        })
    }

    /// Records `tour` if it beats the current best. Returns whether it did.
    pub(crate) fn offer(&mut self, inst: &Instance, tour: &Tour, budget: &Budget) -> Result<bool> {
        let len = tour.length(inst);
        if len >= self.best_length() {
            return Ok(false);
        }
        crate::geometry::validate_tour(inst, tour)
            .map_err(|v| Error::InvalidTour(format!("solver produced an invalid tour: {v}")))?;
        let event = IncumbentEvent {
            elapsed_ms: budget.elapsed_ms(),
            evals: budget.evals(),
            length: len,
        };
        self.recorder.record(event)?;
        self.events.push(event);
        budget.note_incumbent(len);
        self.best = Some(Tour::with_length(tour.order().to_vec(), len));
        Ok(true)
    }

    pub(crate) fn finish(
        self,
        inst: &Instance,
        cfg: &SolverConfig,
        limits: &RunLimits,
    ) -> Trajectory {
        Trajectory {
            instance: inst.id().to_string(),
            solver: cfg.label(),
            seed: cfg.seed,
            cutoff_ms: limits.cutoff_ms,
            events: self.events,
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::ils(1).validate().is_ok());
        assert!(SolverConfig::ga(1).validate().is_ok());
        let mut c = SolverConfig::ga(1);
        c.population = 1;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::ils(1);
        c.crossover = Crossover::Eax;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::ils(1);
        c.neighbors = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(SolverConfig::ils(0).label(), "ils+r(ipt)");
        assert_eq!(SolverConfig::ga(0).label(), "ga+r");
        let mut c = SolverConfig::ga(0);
        c.crossover = Crossover::Ipt;
        c.restart = false;
        assert_eq!(c.label(), "ga(ipt)");
    }
}
