use rand::Rng;

use super::construct::nearest_neighbor;
use super::ipt::partition_crossover;
use super::local_search::{LocalSearch, IMPROVE_EPS};
use super::perturb::kick;
use super::{
    rng_from_seed, Budget, Crossover, Incumbent, Recorder, RunLimits, SolverConfig, SolverFamily,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{raw_length, Instance, NeighborLists, Tour};

/// Multi-trial iterated local search.
///
/// A trial builds a nearest-neighbor tour, descends with 2-opt/Or-opt and then
/// kicks with double bridges until `kicks` consecutive kicks fail to improve.
/// With `Crossover::Ipt` the trial result is recombined with the best tour of
/// the current session. After `restart_trials` trials without a session
/// improvement the session is discarded (cold restart) or, without `restart`,
/// the run ends.
pub fn solve_ils(
    inst: &Instance,
    cfg: &SolverConfig,
    limits: &RunLimits,
    recorder: &mut dyn Recorder,
) -> Result<Trajectory> {
    if cfg.family != SolverFamily::Ils {
        return Err(Error::InvalidConfig(format!(
            "solve_ils called with {:?}",
            cfg.family
        )));
    }
    cfg.validate()?;
    limits.validate()?;

    let n = inst.len();
    let mut budget = Budget::new(limits);
    let mut rng = rng_from_seed(cfg.seed);
    let nl = NeighborLists::build(inst, cfg.neighbors);
    let mut ls = LocalSearch::new(inst, &nl);
    let mut inc = Incumbent::new(recorder);

    'run: loop {
        let mut session_best: Option<Tour> = None;
        let mut stale_trials = 0;
        loop {
            if budget.expired() && inc.best_length().is_finite() {
                break 'run;
            }
            let start = rng.gen_range(0..n);
            let initial = nearest_neighbor(inst, start, &mut budget);
            inc.offer(inst, &initial, &budget)?;

            ls.load(&initial);
            ls.activate_all();
            ls.run(&mut budget);
            let mut current = ls.tour();
            let mut current_len = current.length(inst);
            inc.offer(inst, &current, &budget)?;

            let mut idle = 0;
            while idle < cfg.kicks && !budget.expired() {
                let Some((order, ends)) = kick(current.order(), &mut rng) else {
                    break;
                };
                budget.charge(n as u64);
                let kicked_len = raw_length(inst, &order);
                ls.set_order(&order, kicked_len);
                for c in ends {
                    ls.activate(c);
                }
                ls.run(&mut budget);
                let cand_len = ls.length();
                if cand_len < current_len - IMPROVE_EPS {
                    current = ls.tour();
                    current_len = current.length(inst);
                    idle = 0;
                    inc.offer(inst, &current, &budget)?;
                } else {
                    idle += 1;
                    if cand_len <= current_len {
                        current = ls.tour();
                        current_len = current.length(inst);
                    }
                }
            }

            if let (Crossover::Ipt, Some(best)) = (cfg.crossover, session_best.as_ref()) {
                current = partition_crossover(inst, &current, best, &mut budget);
                inc.offer(inst, &current, &budget)?;
            }

            let improved = session_best
                .as_ref()
                .is_none_or(|b| current.length(inst) < b.length(inst) - IMPROVE_EPS);
            if improved {
                session_best = Some(current);
                stale_trials = 0;
            } else {
                stale_trials += 1;
            }
            if stale_trials >= cfg.restart_trials {
                if cfg.restart {
                    log::debug!("ils: cold restart at {} evals", budget.evals());
                    continue 'run;
                }
                break 'run;
            }
        }
    }
    Ok(inc.finish(inst, cfg, limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_util::random_instance;
    use crate::solvers::{held_karp_exact, TrajectoryRecorder};

    #[test]
    fn tiny_cutoff_logs_first_incumbent() {
        let inst = random_instance(200, 3, 1e6);
        let mut rec = TrajectoryRecorder::default();
        let traj = solve_ils(&inst, &SolverConfig::ils(1), &RunLimits::evals(1), &mut rec).unwrap();
        assert!(!traj.events.is_empty());
        assert_eq!(rec.events(), &traj.events[..]);
    }

    #[test]
    fn strictly_decreasing_and_deterministic() {
        let inst = random_instance(120, 8, 1e6);
        let cfg = SolverConfig::ils(42);
        let limits = RunLimits::evals(300);
        let a = solve_ils(&inst, &cfg, &limits, &mut TrajectoryRecorder::default()).unwrap();
        let b = solve_ils(&inst, &cfg, &limits, &mut TrajectoryRecorder::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.events.len() > 2);
        a.check_monotone().unwrap();
    }

    #[test]
    fn reaches_optimum_on_small_instance() {
        let inst = random_instance(11, 5, 1e6);
        let (_, opt) = held_karp_exact(&inst).unwrap();
        let traj = solve_ils(
            &inst,
            &SolverConfig::ils(3),
            &RunLimits::evals(200),
            &mut TrajectoryRecorder::default(),
        )
        .unwrap();
        assert_eq!(traj.final_length(), Some(opt));
    }

    #[test]
    fn without_restart_the_run_stops_on_stagnation() {
        let inst = random_instance(9, 5, 1e6);
        let mut cfg = SolverConfig::ils(3);
        cfg.restart = false;
        cfg.restart_trials = 2;
        let mut budget_probe = TrajectoryRecorder::default();
        // a huge cutoff would never return if stagnation did not end the run
        let traj = solve_ils(
            &inst,
            &cfg,
            &RunLimits::evals(u64::MAX / 20_000),
            &mut budget_probe,
        )
        .unwrap();
        assert!(!traj.events.is_empty());
    }

    #[test]
    fn wrong_family_rejected() {
        let inst = random_instance(10, 5, 1e6);
        assert!(solve_ils(
            &inst,
            &SolverConfig::ga(1),
            &RunLimits::evals(5),
            &mut TrajectoryRecorder::default()
        )
        .is_err());
        assert!(solve_ils(
            &inst,
            &SolverConfig::ils(1),
            &RunLimits::evals(0),
            &mut TrajectoryRecorder::default()
        )
        .is_err());
    }
}
