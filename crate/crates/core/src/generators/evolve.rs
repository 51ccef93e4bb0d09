use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{apply_mutation, build, gen_rue, sub_seed, GenRng, GeneratorConfig, MutationOp};
use crate::analysis::par_score;
use crate::error::{Error, Result};
use crate::geometry::{Group, Instance};
use crate::solvers::{
    solve, NullRecorder, RunLimits, SolverConfig, TimeMode, DEFAULT_EVALS_PER_MS,
};

/// Which solver the evolved instance should be easy for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    EasyA,
    EasyB,
}

impl Direction {
    pub fn group(self) -> Group {
        match self {
            Direction::EasyA => Group::EvolvedEasyA,
            Direction::EasyB => Group::EvolvedEasyB,
        }
    }
}

fn default_population() -> usize {
    5
}
fn default_penalty() -> f64 {
    10.0
}
fn default_runs() -> usize {
    3
}
fn default_evals_per_ms() -> u64 {
    DEFAULT_EVALS_PER_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub generator: GeneratorConfig,
    #[serde(default = "default_population")]
    pub population: usize,
    /// Zero returns the seed instance without any evaluation.
    pub generations: usize,
    pub solver_a: SolverConfig,
    pub solver_b: SolverConfig,
    /// PAR penalty factor `f`.
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    /// Runs per solver per fitness evaluation.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Per-run cutoff on the evaluation clock.
    pub cutoff_ms: u64,
    #[serde(default = "default_evals_per_ms")]
    pub evals_per_ms: u64,
    pub direction: Direction,
    #[serde(default = "MutationOp::defaults")]
    pub ops: Vec<MutationOp>,
}

impl EvolutionConfig {
    pub fn new(
        generator: GeneratorConfig,
        solver_a: SolverConfig,
        solver_b: SolverConfig,
        direction: Direction,
    ) -> Self {
        EvolutionConfig {
            generator,
            population: default_population(),
            generations: 10,
            solver_a,
            solver_b,
            penalty: default_penalty(),
            runs: default_runs(),
            cutoff_ms: 100,
            evals_per_ms: DEFAULT_EVALS_PER_MS,
            direction,
            ops: MutationOp::defaults(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        if !(self.penalty >= 1.0) {
            return bad("PAR penalty factor must be >= 1");
        }
        if self.runs == 0 || self.population == 0 {
            return bad("population and runs per evaluation must be >= 1");
        }
        if self.ops.is_empty() {
            return bad("evolution needs at least one mutation operator");
        }
        for op in &self.ops {
            op.validate()?;
        }
        self.limits().validate()?;
        self.solver_a.validate()?;
        self.solver_b.validate()
    }

    fn limits(&self) -> RunLimits {
        RunLimits {
            cutoff_ms: self.cutoff_ms,
            time_mode: TimeMode::Evals,
            evals_per_ms: self.evals_per_ms,
            target_length: None,
        }
    }
}

/// Result of [`evolve_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub instance: Instance,
    /// `None` when no generation ran.
    pub fitness: Option<f64>,
    pub seed_fitness: Option<f64>,
    pub generations: usize,
}

/// PAR ratio of the favored solver over the other, lower is better.
///
/// Both solvers run `runs` times on the evaluation clock. The target is the
/// best length any of those runs found, and a run's time is when it first
/// reached it (fractional milliseconds of the evaluation clock).
pub fn fitness(inst: &Instance, ecfg: &EvolutionConfig, stream: u64) -> Result<f64> {
    let limits = ecfg.limits();
    let jobs: Vec<(usize, usize)> = (0..2)
        .flat_map(|s| (0..ecfg.runs).map(move |r| (s, r)))
        .collect();
    let trajectories = jobs
        .par_iter()
        .map(|&(s, r)| {
            let base = if s == 0 {
                &ecfg.solver_a
            } else {
                &ecfg.solver_b
            };
            let cfg = base
                .clone()
                .with_seed(sub_seed(stream, "run", (s * ecfg.runs + r) as u64));
            solve(inst, &cfg, &limits, &mut NullRecorder)
        })
        .collect::<Result<Vec<_>>>()?;
    let target = trajectories
        .iter()
        .filter_map(|t| t.final_length())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::GenerationFailure("no solver run produced a tour".into()))?;
    let times: Vec<Option<f64>> = trajectories
        .iter()
        .map(|t| {
            t.events
                .iter()
                .find(|e| e.length <= target)
                .map(|e| e.evals as f64 / ecfg.evals_per_ms as f64)
        })
        .collect();
    let (ta, tb) = times.split_at(ecfg.runs);
    if ta.iter().all(Option::is_none) || tb.iter().all(Option::is_none) {
        log::warn!(
            "{}: degenerate fitness, a solver never reached the target within the cutoff",
            inst.id()
        );
    }
    let cutoff = ecfg.cutoff_ms as f64;
    let par_a = par_score(ta, cutoff, ecfg.penalty)?.max(f64::MIN_POSITIVE);
    let par_b = par_score(tb, cutoff, ecfg.penalty)?.max(f64::MIN_POSITIVE);
    Ok(match ecfg.direction {
        Direction::EasyA => par_a / par_b,
        Direction::EasyB => par_b / par_a,
    })
}

/// Steady-state elitist EA over instances.
///
/// The population starts from the seed instance (given, or uniform random)
/// plus mutants of it. Each generation mutates a random member with one
/// operator and the child replaces the worst member unless it is worse.
pub fn evolve_instance(
    ecfg: &EvolutionConfig,
    seed_instance: Option<&Instance>,
) -> Result<Evolved> {
    ecfg.validate()?;
    let seed_inst = match seed_instance {
        Some(i) => i.clone(),
        None => gen_rue(&ecfg.generator)?,
    };
    if ecfg.generations == 0 {
        return Ok(Evolved {
            instance: seed_inst,
            fitness: None,
            seed_fitness: None,
            generations: 0,
        });
    }
    let seed = ecfg.generator.seed;
    let bound = ecfg.generator.bound;
    let mut rng = GenRng::seed_from_u64(sub_seed(seed, "evolve", 0));
    let stream = |generation: usize, candidate: usize| {
        sub_seed(
            sub_seed(seed, "generation", generation as u64),
            "candidate",
            candidate as u64,
        )
    };
    let mutate = |points: &[crate::geometry::Point], rng: &mut GenRng| {
        let mut p = points.to_vec();
        let op = ecfg.ops.choose(rng).expect("ops validated non-empty");
        apply_mutation(&mut p, op, bound, rng);
        p
    };

    let mut pop = vec![seed_inst.points().to_vec()];
    while pop.len() < ecfg.population {
        let m = mutate(&pop[0], &mut rng);
        pop.push(m);
    }
    let mut fit = Vec::with_capacity(pop.len());
    for (c, pts) in pop.iter().enumerate() {
        let inst = build(format!("cand-0-{c}"), pts.clone(), Group::Custom)?;
        fit.push(fitness(&inst, ecfg, stream(0, c))?);
    }
    let seed_fitness = fit[0];

    for g in 1..=ecfg.generations {
        let parent = rng.gen_range(0..pop.len());
        let child = mutate(&pop[parent], &mut rng);
        let inst = build(format!("cand-{g}"), child.clone(), Group::Custom)?;
        let f = fitness(&inst, ecfg, stream(g, 0))?;
        let worst = (0..pop.len())
            .max_by(|&a, &b| fit[a].total_cmp(&fit[b]))
            .expect("population non-empty");
        if f <= fit[worst] {
            pop[worst] = child;
            fit[worst] = f;
        }
        log::debug!(
            "evolve gen {g}: child {f:.4}, best {:.4}",
            fit.iter().copied().fold(f64::INFINITY, f64::min)
        );
    }
    let best = (0..pop.len())
        .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
        .expect("population non-empty");
    let tag = match ecfg.direction {
        Direction::EasyA => "a",
        Direction::EasyB => "b",
    };
    let id = format!("evolved-{tag}-n{}-s{seed}", pop[best].len());
    Ok(Evolved {
        instance: build(id, pop[best].clone(), ecfg.direction.group())?,
        fitness: Some(fit[best]),
        seed_fitness: Some(seed_fitness),
        generations: ecfg.generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::assert_well_formed;

    fn cfg(generations: usize) -> EvolutionConfig {
        let mut c = EvolutionConfig::new(
            GeneratorConfig::new(7, 30),
            SolverConfig::ils(0),
            SolverConfig::ga(0),
            Direction::EasyA,
        );
        c.generations = generations;
        c.population = 3;
        c.runs = 2;
        c.cutoff_ms = 3;
        c
    }

    #[test]
    fn zero_generations_returns_seed() {
        let seed = gen_rue(&GeneratorConfig::new(7, 30)).unwrap();
        let out = evolve_instance(&cfg(0), Some(&seed)).unwrap();
        assert_eq!(out.instance, seed);
        assert_eq!(out.fitness, None);
    }

    #[test]
    fn elitist_and_deterministic() {
        let a = evolve_instance(&cfg(4), None).unwrap();
        assert!(a.fitness.unwrap() <= a.seed_fitness.unwrap());
        assert_eq!(a.instance.group(), Group::EvolvedEasyA);
        assert_well_formed(&a.instance, 30, 1e6);
        assert_eq!(a, evolve_instance(&cfg(4), None).unwrap());
    }

    #[test]
    fn fitness_inverts_with_direction() {
        let inst = gen_rue(&GeneratorConfig::new(2, 25)).unwrap();
        let mut c = cfg(1);
        let fa = fitness(&inst, &c, 11).unwrap();
        c.direction = Direction::EasyB;
        let fb = fitness(&inst, &c, 11).unwrap();
        assert!((fa * fb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(1);
        c.penalty = 0.5;
        assert!(c.validate().is_err());
        let mut c = cfg(1);
        c.runs = 0;
        assert!(c.validate().is_err());
    }
}
