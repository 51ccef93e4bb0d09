//! Seeded instance generators. Every generator is a pure function of its
//! configuration: the same inputs give bit-identical instances.
//!
//! Coordinates are integers in `[0, bound]²` without duplicates, and
//! instances use the rounded Euclidean metric.

mod evolve;
mod job;
mod matching;
mod morph;
mod netgen;
mod tspgen;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{DistanceMode, Group, Instance, Point};

pub use evolve::{evolve_instance, fitness, Direction, EvolutionConfig, Evolved};
pub use job::{GeneratedInstance, GeneratorJob, Metadata};
pub use matching::min_cost_matching;
pub use morph::gen_morphed;
pub use netgen::{cluster_sizes, gen_netgen, gen_netgen_labeled, ClusterSpec};
pub use tspgen::{apply_mutation, gen_tspgen, MutationKind, MutationOp};

pub(crate) type GenRng = ChaCha8Rng;

pub const DEFAULT_BOUND: f64 = 1e6;

fn default_bound() -> f64 {
    DEFAULT_BOUND
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    #[serde(default = "default_bound")]
    pub bound: f64,
}

impl GeneratorConfig {
    pub fn new(seed: u64, n: usize) -> Self {
        GeneratorConfig {
            seed,
            n,
            bound: DEFAULT_BOUND,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidConfig(format!(
                "instances need n >= 3, got {}",
                self.n
            )));
        }
        if !(self.bound.is_finite() && self.bound >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bound must be >= 1, got {}",
                self.bound
            )));
        }
        let lattice = (self.bound.floor() + 1.0).powi(2);
        if (self.n as f64) > lattice / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "{} distinct integer points do not fit comfortably in [0, {}]²",
                self.n, self.bound
            )));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> GenRng {
        GenRng::seed_from_u64(self.seed)
    }
}

/// Stable seed for a named sub-stream of `seed`.
pub(crate) fn sub_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update([0]);
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Integer points in `[0, bound]²` with duplicate tracking.
pub(crate) struct PointSet {
    bound: f64,
    taken: HashSet<(i64, i64)>,
}

impl PointSet {
    pub(crate) fn new(bound: f64) -> Self {
        PointSet {
            bound: bound.floor(),
            taken: HashSet::new(),
        }
    }

    /// Rounds and clamps `p` into the window.
    pub(crate) fn snap(&self, p: Point) -> Point {
        Point::new(
            p.x.round().clamp(0.0, self.bound),
            p.y.round().clamp(0.0, self.bound),
        )
    }

    pub(crate) fn insert(&mut self, p: Point) -> bool {
        self.taken.insert(p.key())
    }

    pub(crate) fn remove(&mut self, p: Point) {
        self.taken.remove(&p.key());
    }

    pub(crate) fn uniform(&self, rng: &mut GenRng) -> Point {
        let b = self.bound as i64;
        Point::new(rng.gen_range(0..=b) as f64, rng.gen_range(0..=b) as f64)
    }

    /// Draws uniform points until one is free, and takes it.
    pub(crate) fn insert_uniform(&mut self, rng: &mut GenRng) -> Point {
        loop {
            let p = self.uniform(rng);
            if self.insert(p) {
                return p;
            }
        }
    }
}

pub(crate) fn build(id: String, points: Vec<Point>, group: Group) -> Result<Instance> {
    Instance::new(id, points, group, DistanceMode::RoundedEuclidean)
}

/// Uniform random instance: i.i.d. integer points, collisions redrawn.
pub fn gen_rue(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut set = PointSet::new(cfg.bound);
    let points = (0..cfg.n).map(|_| set.insert_uniform(&mut rng)).collect();
    build(format!("rue-n{}-s{}", cfg.n, cfg.seed), points, Group::Rue)
}

#[cfg(test)]
pub(crate) fn assert_well_formed(inst: &Instance, n: usize, bound: f64) {
    assert_eq!(inst.len(), n);
    assert!(inst.duplicate_points().is_empty());
    for p in inst.points() {
        assert!(
            p.x >= 0.0 && p.x <= bound && p.y >= 0.0 && p.y <= bound,
            "{p:?} outside window"
        );
        assert_eq!((p.x.fract(), p.y.fract()), (0.0, 0.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rue_contract() {
        let cfg = GeneratorConfig::new(5, 500);
        let a = gen_rue(&cfg).unwrap();
        assert_well_formed(&a, 500, 1e6);
        assert_eq!(a, gen_rue(&cfg).unwrap());
        assert_ne!(a, gen_rue(&GeneratorConfig::new(6, 500)).unwrap());
        assert_eq!(a.group(), Group::Rue);
    }

    #[test]
    fn rue_mean_near_center() {
        let inst = gen_rue(&GeneratorConfig::new(11, 1000)).unwrap();
        let mean = inst.points().iter().map(|p| p.x).sum::<f64>() / 1000.0;
        assert!((mean - 5e5).abs() < 0.05 * 5e5, "mean {mean}");
    }

    #[test]
    fn rue_small_window_and_errors() {
        let cfg = GeneratorConfig {
            seed: 1,
            n: 50,
            bound: 10.0,
        };
        assert_well_formed(&gen_rue(&cfg).unwrap(), 50, 10.0);
        assert!(gen_rue(&GeneratorConfig::new(1, 2)).is_err());
        assert!(gen_rue(&GeneratorConfig {
            seed: 1,
            n: 100,
            bound: 5.0
        })
        .is_err());
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(1, "a", 0), sub_seed(1, "a", 1));
        assert_ne!(sub_seed(1, "a", 0), sub_seed(1, "b", 0));
        assert_eq!(sub_seed(1, "a", 0), sub_seed(1, "a", 0));
    }
}
