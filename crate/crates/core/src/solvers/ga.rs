use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::construct::nearest_neighbor;
use super::eax::eax;
use super::ipt::partition_crossover;
use super::local_search::{LocalSearch, IMPROVE_EPS};
use super::perturb::kick;
use super::{
    rng_from_seed, Budget, Crossover, Incumbent, Recorder, RunLimits, SolverConfig, SolverFamily,
    SolverRng, Trajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{Instance, NeighborLists, Tour};

/// Population edge counts for the entropy tie-break.
struct EdgePool {
    counts: HashMap<(usize, usize), u32>,
    size: f64,
}

impl EdgePool {
    fn new(pop: &[Tour]) -> Self {
        let mut pool = EdgePool {
            counts: HashMap::new(),
            size: pop.len() as f64,
        };
        for t in pop {
            for e in t.edges() {
                *pool.counts.entry(e).or_insert(0) += 1;
            }
        }
        pool
    }

    fn term(&self, c: u32) -> f64 {
        if c == 0 {
            0.0
        } else {
            let p = c as f64 / self.size;
            -p * p.ln()
        }
    }

    /// Entropy change if `old` is replaced by `new`.
    fn delta(&self, old: &[(usize, usize)], new: &[(usize, usize)]) -> f64 {
        let count = |e: &(usize, usize)| self.counts.get(e).copied().unwrap_or(0);
        let mut d = 0.0;
        for e in new.iter().filter(|e| old.binary_search(e).is_err()) {
            let c = count(e);
            d += self.term(c + 1) - self.term(c);
        }
        for e in old.iter().filter(|e| new.binary_search(e).is_err()) {
            let c = count(e);
            d += self.term(c.saturating_sub(1)) - self.term(c);
        }
        d
    }

    fn replace(&mut self, old: &[(usize, usize)], new: &[(usize, usize)]) {
        for e in old {
            if let Some(c) = self.counts.get_mut(e) {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(e);
                }
            }
        }
        for e in new {
            *self.counts.entry(*e).or_insert(0) += 1;
        }
    }
}

struct Ga<'a, 'r> {
    inst: &'a Instance,
    nl: &'a NeighborLists,
    ls: LocalSearch<'a>,
    budget: Budget,
    rng: SolverRng,
    inc: Incumbent<'r>,
    used_starts: Vec<bool>,
}

impl Ga<'_, '_> {
    /// Nearest-neighbor construction plus local search. A start city that was
    /// already used gets one random double bridge first, otherwise restarts
    /// would rebuild the very same tours.
    fn fresh_individual(&mut self, start: usize) -> Result<Tour> {
        let mut t = nearest_neighbor(self.inst, start, &mut self.budget);
        self.inc.offer(self.inst, &t, &self.budget)?;
        if std::mem::replace(&mut self.used_starts[start], true) {
            if let Some((order, _)) = kick(t.order(), &mut self.rng) {
                self.budget.charge(self.inst.len() as u64);
                t = Tour::from_order(order);
            }
        }
        self.ls.load(&t);
        self.ls.activate_all();
        self.ls.run(&mut self.budget);
        let t = self.ls.tour();
        self.inc.offer(self.inst, &t, &self.budget)?;
        Ok(t)
    }

    fn start_cities(&mut self, count: usize) -> Vec<usize> {
        let n = self.inst.len();
        if count <= n {
            index::sample(&mut self.rng, n, count).into_vec()
        } else {
            (0..count).map(|_| self.rng.gen_range(0..n)).collect()
        }
    }

    fn population_best(&self, pop: &[Tour]) -> usize {
        (0..pop.len())
            .min_by(|&a, &b| {
                pop[a]
                    .length(self.inst)
                    .total_cmp(&pop[b].length(self.inst))
            })
            .expect("population is never empty")
    }

    /// Picks the shortest offspring if it beats `parent`; ties on length go
    /// to the candidate that raises population edge entropy the most.
    fn select(&self, parent: &Tour, kids: &[Tour], pool: &EdgePool) -> Option<usize> {
        let shortest = kids.first()?.length(self.inst);
        if !(shortest < parent.length(self.inst) - IMPROVE_EPS) {
            return None;
        }
        let tol = 1e-9 * shortest.abs().max(1.0);
        let tied = kids
            .iter()
            .take_while(|k| k.length(self.inst) <= shortest + tol)
            .count();
        if tied == 1 {
            return Some(0);
        }
        let old = parent.edges();
        (0..tied)
            .map(|i| (i, pool.delta(&old, &kids[i].edges())))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
    }
}

/// Steady-state GA with edge assembly crossover.
///
/// Each generation visits the population in random order and mates every
/// individual with its successor in that order. The best offspring replaces
/// the first parent only when strictly shorter. With `Crossover::Ipt` the
/// accepted offspring is further recombined with the parent it replaces.
/// After `stall_generations` generations without improvement of the
/// population best, or when no pair yields offspring, the population is
/// rebuilt around its best individual (`restart`) or the run ends.
pub fn solve_ga(
    inst: &Instance,
    cfg: &SolverConfig,
    limits: &RunLimits,
    recorder: &mut dyn Recorder,
) -> Result<Trajectory> {
    if cfg.family != SolverFamily::Ga {
        return Err(Error::InvalidConfig(format!(
            "solve_ga called with {:?}",
            cfg.family
        )));
    }
    cfg.validate()?;
    limits.validate()?;

    let nl = NeighborLists::build(inst, cfg.neighbors);
    let mut ga = Ga {
        inst,
        nl: &nl,
        ls: LocalSearch::new(inst, &nl),
        budget: Budget::new(limits),
        rng: rng_from_seed(cfg.seed),
        inc: Incumbent::new(recorder),
        used_starts: vec![false; inst.len()],
    };
    let mu = cfg.population;

    let mut pop = Vec::with_capacity(mu);
    for start in ga.start_cities(mu) {
        let t = if ga.budget.expired() && !pop.is_empty() {
            // out of time: fill with bare constructions so the population stays complete
            nearest_neighbor(inst, start, &mut ga.budget)
        } else {
            ga.fresh_individual(start)?
        };
        pop.push(t);
    }
    let mut pool = EdgePool::new(&pop);
    let mut best_len = pop[ga.population_best(&pop)].length(inst);
    let mut stall = 0;

    while !ga.budget.expired() {
        let mut perm: Vec<usize> = (0..mu).collect();
        perm.shuffle(&mut ga.rng);
        let mut any_offspring = false;
        for idx in 0..mu {
            if ga.budget.expired() {
                break;
            }
            let (i, j) = (perm[idx], perm[(idx + 1) % mu]);
            let kids = eax(
                inst,
                &pop[i],
                &pop[j],
                cfg.offspring,
                ga.nl,
                &mut ga.rng,
                &mut ga.budget,
            );
            any_offspring |= !kids.is_empty();
            let Some(pick) = ga.select(&pop[i], &kids, &pool) else {
                continue;
            };
            let mut child = kids.into_iter().nth(pick).expect("selected index in range");
            if cfg.crossover == Crossover::Ipt {
                child = partition_crossover(inst, &child, &pop[i], &mut ga.budget);
            }
            pool.replace(&pop[i].edges(), &child.edges());
            ga.inc.offer(inst, &child, &ga.budget)?;
            pop[i] = child;
        }

        let gen_best = pop[ga.population_best(&pop)].length(inst);
        if gen_best < best_len - IMPROVE_EPS {
            best_len = gen_best;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= cfg.stall_generations || !any_offspring {
            if !cfg.restart {
                break;
            }
            log::debug!("ga: restart at {} evals", ga.budget.evals());
            let keep = ga.population_best(&pop);
            let starts = ga.start_cities(mu);
            for (slot, start) in (0..mu).filter(|&s| s != keep).zip(starts) {
                if ga.budget.expired() {
                    break;
                }
                pop[slot] = ga.fresh_individual(start)?;
            }
            pool = EdgePool::new(&pop);
            stall = 0;
        }
    }
    Ok(ga.inc.finish(inst, cfg, limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::test_util::{random_instance, square};
    use crate::solvers::{held_karp_exact, TrajectoryRecorder};

    #[test]
    fn two_individuals_on_square() {
        let inst = square();
        let mut cfg = SolverConfig::ga(1);
        cfg.population = 2;
        let traj = solve_ga(
            &inst,
            &cfg,
            &RunLimits::evals(5),
            &mut TrajectoryRecorder::default(),
        )
        .unwrap();
        assert_eq!(traj.final_length(), Some(40.0));
    }

    #[test]
    fn deterministic_and_monotone() {
        let inst = random_instance(80, 2, 1e6);
        let cfg = SolverConfig::ga(9);
        let limits = RunLimits::evals(200);
        let a = solve_ga(&inst, &cfg, &limits, &mut TrajectoryRecorder::default()).unwrap();
        let b = solve_ga(&inst, &cfg, &limits, &mut TrajectoryRecorder::default()).unwrap();
        assert_eq!(a, b);
        a.check_monotone().unwrap();
    }

    #[test]
    fn ipt_variant_reaches_optimum_small() {
        let inst = random_instance(12, 21, 1e6);
        let (_, opt) = held_karp_exact(&inst).unwrap();
        let mut cfg = SolverConfig::ga(4);
        cfg.crossover = Crossover::Ipt;
        let traj = solve_ga(
            &inst,
            &cfg,
            &RunLimits::evals(200),
            &mut TrajectoryRecorder::default(),
        )
        .unwrap();
        assert_eq!(traj.final_length(), Some(opt));
    }

    #[test]
    fn entropy_delta_prefers_rare_edges() {
        let a = Tour::from_order(vec![0, 1, 2, 3, 4]);
        let b = Tour::from_order(vec![0, 2, 1, 3, 4]);
        let pool = EdgePool::new(&[a.clone(), a.clone(), a.clone(), b.clone()]);
        // replacing a copy of the majority tour by the minority one spreads edges
        assert!(pool.delta(&a.edges(), &b.edges()) > 0.0);
        assert!(pool.delta(&b.edges(), &a.edges()) < 0.0);
        assert_eq!(pool.delta(&a.edges(), &a.edges()), 0.0);
    }
}
