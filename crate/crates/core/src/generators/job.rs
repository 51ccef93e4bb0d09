use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    evolve_instance, gen_morphed, gen_netgen, gen_rue, gen_tspgen, sub_seed, ClusterSpec,
    Direction, EvolutionConfig, GeneratorConfig, MutationOp, DEFAULT_BOUND,
};
use crate::error::{Error, Result};
use crate::geometry::{tsplib, Group, Instance};
use crate::solvers::{SolverConfig, DEFAULT_EVALS_PER_MS};

fn one() -> usize {
    1
}
fn bound() -> f64 {
    DEFAULT_BOUND
}
fn half() -> f64 {
    0.5
}
fn five() -> usize {
    5
}
fn spread() -> f64 {
    0.025
}
fn separation() -> f64 {
    0.1
}
fn ten() -> usize {
    10
}
fn penalty() -> f64 {
    10.0
}
fn three() -> usize {
    3
}
fn evals_per_ms() -> u64 {
    DEFAULT_EVALS_PER_MS
}

/// One block of a generation config, producing `count` instances.
///
/// Instance `i` of a job uses a seed derived from the job seed (or the run's
/// base seed) and `i`, and is named `<name>-<i>` where `name` defaults to
/// `<generator>-n<n>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum GeneratorJob {
    Rue(RueJob),
    Netgen(NetgenJob),
    Morphed(MorphedJob),
    Tspgen(TspgenJob),
    Evolved(EvolvedJob),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RueJob {
    pub n: usize,
    #[serde(default = "one")]
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "bound")]
    pub bound: f64,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetgenJob {
    pub n: usize,
    #[serde(default = "one")]
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "bound")]
    pub bound: f64,
    pub name: Option<String>,
    #[serde(default = "five")]
    pub clusters: usize,
    #[serde(default = "spread")]
    pub spread: f64,
    #[serde(default = "separation")]
    pub separation: f64,
}

/// Morphs between a uniform and a clustered parent drawn for each instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphedJob {
    pub n: usize,
    #[serde(default = "one")]
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "bound")]
    pub bound: f64,
    pub name: Option<String>,
    #[serde(default = "half")]
    pub lambda: f64,
    #[serde(default = "five")]
    pub clusters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TspgenJob {
    pub n: usize,
    #[serde(default = "one")]
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "bound")]
    pub bound: f64,
    pub name: Option<String>,
    #[serde(default = "ten")]
    pub iterations: usize,
    #[serde(default = "MutationOp::defaults")]
    pub ops: Vec<MutationOp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolvedJob {
    pub n: usize,
    #[serde(default = "one")]
    pub count: usize,
    pub seed: Option<u64>,
    #[serde(default = "bound")]
    pub bound: f64,
    pub name: Option<String>,
    pub direction: Direction,
    #[serde(default = "ten")]
    pub generations: usize,
    #[serde(default = "five")]
    pub population: usize,
    #[serde(default = "three")]
    pub runs: usize,
    pub cutoff_ms: u64,
    #[serde(default = "evals_per_ms")]
    pub evals_per_ms: u64,
    #[serde(default = "penalty")]
    pub penalty: f64,
    pub solver_a: SolverConfig,
    pub solver_b: SolverConfig,
    #[serde(default = "MutationOp::defaults")]
    pub ops: Vec<MutationOp>,
}

impl EvolvedJob {
    fn config(&self, generator: GeneratorConfig) -> EvolutionConfig {
        EvolutionConfig {
            generator,
            population: self.population,
            generations: self.generations,
            solver_a: self.solver_a.clone(),
            solver_b: self.solver_b.clone(),
            penalty: self.penalty,
            runs: self.runs,
            cutoff_ms: self.cutoff_ms,
            evals_per_ms: self.evals_per_ms,
            direction: self.direction,
            ops: self.ops.clone(),
        }
    }
}

/// Sidecar description of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub id: String,
    pub group: Group,
    pub seed: u64,
    pub generator: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub metadata: Metadata,
}

impl GeneratedInstance {
    /// Writes `<id>.tsp` and `<id>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let tsp = dir.join(format!("{}.tsp", self.metadata.id));
        let meta = dir.join(format!("{}.json", self.metadata.id));
        tsplib::write(&self.instance, &tsp)?;
        let text = serde_json::to_string_pretty(&self.metadata)? + "\n";
        std::fs::write(&meta, text).map_err(|e| Error::io(&meta, e))?;
        Ok((tsp, meta))
    }
}

impl GeneratorJob {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorJob::Rue(_) => "rue",
            GeneratorJob::Netgen(_) => "netgen",
            GeneratorJob::Morphed(_) => "morphed",
            GeneratorJob::Tspgen(_) => "tspgen",
            GeneratorJob::Evolved(_) => "evolved",
        }
    }

    fn common(&self) -> (usize, usize, Option<u64>, f64, Option<&str>) {
        match self {
            GeneratorJob::Rue(j) => (j.n, j.count, j.seed, j.bound, j.name.as_deref()),
            GeneratorJob::Netgen(j) => (j.n, j.count, j.seed, j.bound, j.name.as_deref()),
            GeneratorJob::Morphed(j) => (j.n, j.count, j.seed, j.bound, j.name.as_deref()),
            GeneratorJob::Tspgen(j) => (j.n, j.count, j.seed, j.bound, j.name.as_deref()),
            GeneratorJob::Evolved(j) => (j.n, j.count, j.seed, j.bound, j.name.as_deref()),
        }
    }

    fn generator_config(&self, base_seed: u64, index: usize) -> GeneratorConfig {
        let (n, _, seed, bound, _) = self.common();
        GeneratorConfig {
            seed: sub_seed(seed.unwrap_or(base_seed), self.name(), index as u64),
            n,
            bound,
        }
    }

    /// Instance ids this job will produce.
    pub fn ids(&self) -> Vec<String> {
        let (n, count, _, _, name) = self.common();
        let stem = name.map_or_else(|| format!("{}-n{n}", self.name()), str::to_owned);
        (0..count).map(|i| format!("{stem}-{i:03}")).collect()
    }

    /// Checks every parameter without generating anything.
    pub fn validate(&self) -> Result<()> {
        let (_, count, _, _, _) = self.common();
        if count == 0 {
            return Err(Error::InvalidConfig(format!(
                "{} job with count 0",
                self.name()
            )));
        }
        self.generator_config(0, 0).validate()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self {
            GeneratorJob::Rue(_) => Ok(()),
            GeneratorJob::Netgen(j) => {
                if j.clusters < 2 || j.clusters > j.n {
                    return bad(format!(
                        "netgen needs 2 <= clusters <= n, got {}",
                        j.clusters
                    ));
                }
                Ok(())
            }
            GeneratorJob::Morphed(j) => {
                if !(0.0..=1.0).contains(&j.lambda) {
                    return bad(format!("lambda must lie in [0, 1], got {}", j.lambda));
                }
                if j.clusters < 2 || j.clusters > j.n {
                    return bad(format!(
                        "morphed needs 2 <= clusters <= n, got {}",
                        j.clusters
                    ));
                }
                Ok(())
            }
            GeneratorJob::Tspgen(j) => {
                if j.iterations == 0 || j.ops.is_empty() {
                    return bad("tspgen needs iterations >= 1 and at least one operator".into());
                }
                j.ops.iter().try_for_each(MutationOp::validate)
            }
            GeneratorJob::Evolved(j) => j.config(self.generator_config(0, 0)).validate(),
        }
    }

    fn one(&self, base_seed: u64, index: usize, id: String) -> Result<GeneratedInstance> {
        let cfg = self.generator_config(base_seed, index);
        let params = serde_json::to_value(self)?;
        let mut fitness = None;
        let inst = match self {
            GeneratorJob::Rue(_) => gen_rue(&cfg)?,
            GeneratorJob::Netgen(j) => gen_netgen(
                &cfg,
                &ClusterSpec {
                    clusters: j.clusters,
                    spread: j.spread,
                    separation: j.separation,
                },
            )?,
            GeneratorJob::Morphed(j) => {
                let a = gen_rue(&GeneratorConfig {
                    seed: sub_seed(cfg.seed, "parent", 0),
                    ..cfg
                })?;
                let b = gen_netgen(
                    &GeneratorConfig {
                        seed: sub_seed(cfg.seed, "parent", 1),
                        ..cfg
                    },
                    &ClusterSpec::with_clusters(j.clusters),
                )?;
                gen_morphed(&a, &b, j.lambda, cfg.seed)?
            }
            GeneratorJob::Tspgen(j) => gen_tspgen(&cfg, &j.ops, j.iterations)?,
            GeneratorJob::Evolved(j) => {
                let out = evolve_instance(&j.config(cfg), None)?;
                fitness = out.fitness;
                let group = j.direction.group();
                out.instance.with_group(group)
            }
        };
        let inst = inst.with_id(id.clone());
        Ok(GeneratedInstance {
            metadata: Metadata {
                id,
                group: inst.group(),
                seed: cfg.seed,
                generator: self.name().to_owned(),
                params,
                fitness,
            },
            instance: inst,
        })
    }

    /// Generates every instance of the job, in parallel.
    pub fn run(&self, base_seed: u64) -> Result<Vec<GeneratedInstance>> {
        self.validate()?;
        self.ids()
            .into_par_iter()
            .enumerate()
            .map(|(i, id)| self.one(base_seed, i, id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> std::result::Result<GeneratorJob, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    #[test]
    fn parse_and_reject_unknown() {
        let j = parse(r#"{"generator":"rue","n":100,"count":5}"#).unwrap();
        assert_eq!(j.ids().len(), 5);
        assert_eq!(j.ids()[0], "rue-n100-000");
        assert!(parse(r#"{"generator":"voronoi","n":100}"#).is_err());
        assert!(parse(r#"{"generator":"rue","n":100,"colour":1}"#).is_err());
    }

    #[test]
    fn every_job_kind_runs() {
        let jobs = [
            r#"{"generator":"rue","n":40,"count":2}"#,
            r#"{"generator":"netgen","n":40,"clusters":4}"#,
            r#"{"generator":"morphed","n":30,"name":"mix"}"#,
            r#"{"generator":"tspgen","n":40,"iterations":3}"#,
            r#"{"generator":"evolved","n":20,"direction":"easy-b","generations":1,"population":2,"runs":1,
                "cutoff_ms":2,"solver_a":{"family":"ils"},"solver_b":{"family":"ga","crossover":"eax"}}"#,
        ];
        for text in jobs {
            let job = parse(text).unwrap();
            let out = job.run(42).unwrap();
            assert_eq!(out.len(), job.ids().len());
            for g in &out {
                assert_eq!(g.instance.id(), g.metadata.id);
                assert!(g.instance.duplicate_points().is_empty());
            }
            assert_eq!(out, job.run(42).unwrap());
        }
        let evolved = parse(jobs[4]).unwrap().run(1).unwrap();
        assert_eq!(evolved[0].instance.group(), Group::EvolvedEasyB);
        assert!(evolved[0].metadata.fitness.is_some());
    }

    #[test]
    fn invalid_jobs_detected_up_front() {
        for text in [
            r#"{"generator":"rue","n":2}"#,
            r#"{"generator":"rue","n":20,"count":0}"#,
            r#"{"generator":"netgen","n":20,"clusters":1}"#,
            r#"{"generator":"morphed","n":20,"lambda":2.0}"#,
            r#"{"generator":"tspgen","n":20,"iterations":0}"#,
        ] {
            assert!(parse(text).unwrap().validate().is_err(), "{text}");
        }
    }

    #[test]
    fn files_written() {
        let dir = tempfile::tempdir().unwrap();
        let g = &parse(r#"{"generator":"rue","n":10}"#)
            .unwrap()
            .run(1)
            .unwrap()[0];
        let (tsp, meta) = g.write(dir.path()).unwrap();
        assert_eq!(tsplib::read(&tsp).unwrap().points(), g.instance.points());
        let back: Metadata = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
        assert_eq!(back, g.metadata);
    }
}
