use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{build, gen_rue, sub_seed, GenRng, GeneratorConfig, PointSet};
use crate::error::{Error, Result};
use crate::geometry::{Group, Instance, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationKind {
    Grid,
    Explosion,
    Implosion,
    Cluster,
    LinearProjection,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::Grid,
        MutationKind::Explosion,
        MutationKind::Implosion,
        MutationKind::Cluster,
        MutationKind::LinearProjection,
    ];
}

/// A mutation operator with its parameters.
///
/// `strength` is a fraction of the bound: the disc radius for explosion and
/// implosion, the cluster standard deviation for cluster, and the jitter
/// around the line for linear projection. Grid ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationOp {
    pub kind: MutationKind,
    pub rate: f64,
    pub strength: f64,
}

impl MutationOp {
    pub fn new(kind: MutationKind) -> Self {
        let strength = match kind {
            MutationKind::Grid | MutationKind::Explosion | MutationKind::Implosion => 0.1,
            MutationKind::Cluster => 0.025,
            MutationKind::LinearProjection => 0.005,
        };
        MutationOp {
            kind,
            rate: 0.1,
            strength,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn defaults() -> Vec<MutationOp> {
        MutationKind::ALL.into_iter().map(MutationOp::new).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mutation rate must lie in (0, 1], got {}",
                self.rate
            )));
        }
        if !(self.strength > 0.0 && self.strength.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mutation strength must be positive, got {}",
                self.strength
            )));
        }
        Ok(())
    }

    fn subset_size(&self, n: usize) -> usize {
        ((self.rate * n as f64).round() as usize).clamp(1, n)
    }
}

/// Indices of the `k` points nearest to `c`, ties by index.
fn nearest(points: &[Point], c: Point, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .euclid(&c)
            .total_cmp(&points[b].euclid(&c))
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

fn random_direction(rng: &mut GenRng) -> (f64, f64) {
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    (phi.cos(), phi.sin())
}

/// Proposed new positions for the affected points.
fn propose(points: &[Point], op: &MutationOp, bound: f64, rng: &mut GenRng) -> Vec<(usize, Point)> {
    let n = points.len();
    let k = op.subset_size(n);
    let radius = op.strength * bound;
    match op.kind {
        MutationKind::Grid => {
            let subset = index::sample(rng, n, k).into_vec();
            let (mut x0, mut y0, mut x1, mut y1) = (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            );
            for &i in &subset {
                let p = points[i];
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let cols = (k as f64).sqrt().ceil() as usize;
            let rows = k.div_ceil(cols);
            let step = |lo: f64, hi: f64, cells: usize, at: usize| {
                if cells == 1 {
                    (lo + hi) / 2.0
                } else {
                    lo + (hi - lo) * at as f64 / (cells - 1) as f64
                }
            };
            subset
                .into_iter()
                .enumerate()
                .map(|(slot, i)| {
                    (
                        i,
                        Point::new(
                            step(x0, x1, cols, slot % cols),
                            step(y0, y1, rows, slot / cols),
                        ),
                    )
                })
                .collect()
        }
        MutationKind::Explosion | MutationKind::Implosion => {
            let c = points[rng.gen_range(0..n)];
            let affected: Vec<usize> = nearest(points, c, k)
                .into_iter()
                .filter(|&i| points[i].euclid(&c) <= radius)
                .collect();
            affected
                .into_iter()
                .map(|i| {
                    let p = points[i];
                    let d = p.euclid(&c);
                    let (ux, uy) = if d > 0.0 {
                        ((p.x - c.x) / d, (p.y - c.y) / d)
                    } else {
                        random_direction(rng)
                    };
                    let to = if op.kind == MutationKind::Explosion {
                        // the closer to the center, the farther it is thrown
                        radius + (radius - d)
                    } else {
                        d * rng.gen_range(0.0..0.5)
                    };
                    (i, Point::new(c.x + ux * to, c.y + uy * to))
                })
                .collect()
        }
        MutationKind::Cluster => {
            let anchor = Point::new(rng.gen_range(0.0..=bound), rng.gen_range(0.0..=bound));
            let noise = Normal::new(0.0, radius).expect("positive spread");
            index::sample(rng, n, k)
                .into_iter()
                .map(|i| {
                    (
                        i,
                        Point::new(anchor.x + noise.sample(rng), anchor.y + noise.sample(rng)),
                    )
                })
                .collect()
        }
        MutationKind::LinearProjection => {
            let a = Point::new(rng.gen_range(0.0..=bound), rng.gen_range(0.0..=bound));
            let b = Point::new(rng.gen_range(0.0..=bound), rng.gen_range(0.0..=bound));
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = (dx * dx + dy * dy).max(f64::MIN_POSITIVE);
            let noise = Normal::new(0.0, radius).expect("positive jitter");
            index::sample(rng, n, k)
                .into_iter()
                .map(|i| {
                    let p = points[i];
                    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
                    let off = noise.sample(rng) / len2.sqrt();
                    (
                        i,
                        Point::new(a.x + t * dx - off * dy, a.y + t * dy + off * dx),
                    )
                })
                .collect()
        }
    }
}

/// Applies one mutation in place.
///
/// New positions are clamped to the window and rounded. A moved point whose
/// target is taken goes back to where it was, or, if that spot was claimed by
/// another moved point, to a fresh uniform position.
pub fn apply_mutation(points: &mut [Point], op: &MutationOp, bound: f64, rng: &mut GenRng) {
    let moves = propose(points, op, bound, rng);
    let mut set = PointSet::new(bound);
    for p in points.iter() {
        set.insert(*p);
    }
    for &(i, _) in &moves {
        set.remove(points[i]);
    }
    let mut displaced = Vec::new();
    for &(i, to) in &moves {
        let to = set.snap(to);
        if set.insert(to) {
            points[i] = to;
        } else {
            displaced.push(i);
        }
    }
    for i in displaced {
        if !set.insert(points[i]) {
            points[i] = set.insert_uniform(rng);
        }
    }
}

/// Mutation-based instance: a uniform instance reshaped by `iterations`
/// randomly chosen operators from `ops`.
pub fn gen_tspgen(
    cfg: &GeneratorConfig,
    ops: &[MutationOp],
    iterations: usize,
) -> Result<Instance> {
    if ops.is_empty() {
        return Err(Error::InvalidConfig(
            "tspgen needs at least one mutation operator".into(),
        ));
    }
    if iterations == 0 {
        return Err(Error::InvalidConfig(
            "tspgen needs at least one iteration".into(),
        ));
    }
    for op in ops {
        op.validate()?;
    }
    let origin = gen_rue(cfg)?;
    let mut points = origin.points().to_vec();
    // a stream separate from the one that drew the origin
    let mut rng = GenRng::seed_from_u64(sub_seed(cfg.seed, "tspgen", 0));
    for _ in 0..iterations {
        let op = ops.choose(&mut rng).expect("ops non-empty");
        apply_mutation(&mut points, op, cfg.bound, &mut rng);
    }
    build(
        format!("tspgen-n{}-s{}", cfg.n, cfg.seed),
        points,
        Group::Tspgen,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::assert_well_formed;

    #[test]
    fn grid_forms_lattice_in_bounding_box() {
        let mut rng = GenRng::seed_from_u64(3);
        let cfg = GeneratorConfig::new(1, 90);
        let mut pts = gen_rue(&cfg).unwrap().points().to_vec();
        let before = pts.clone();
        let op = MutationOp::new(MutationKind::Grid).with_rate(0.1);
        apply_mutation(&mut pts, &op, 1e6, &mut rng);
        let moved: Vec<usize> = (0..90).filter(|&i| pts[i] != before[i]).collect();
        assert!(moved.len() <= 9);
        // recover the subset from the proposal stream and check the lattice
        let mut rng = GenRng::seed_from_u64(3);
        let proposal = propose(&before, &op, 1e6, &mut rng);
        assert_eq!(proposal.len(), 9);
        let xs: std::collections::BTreeSet<i64> =
            proposal.iter().map(|(_, p)| p.x.round() as i64).collect();
        let ys: std::collections::BTreeSet<i64> =
            proposal.iter().map(|(_, p)| p.y.round() as i64).collect();
        assert_eq!((xs.len(), ys.len()), (3, 3));
        let sub: Vec<Point> = proposal.iter().map(|(i, _)| before[*i]).collect();
        let min_x = sub.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = sub.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(*xs.first().unwrap() as f64, min_x);
        assert_eq!(*xs.last().unwrap() as f64, max_x);
    }

    #[test]
    fn single_point_mutation() {
        let cfg = GeneratorConfig::new(4, 200);
        let origin = gen_rue(&cfg).unwrap();
        for kind in MutationKind::ALL {
            let op = MutationOp::new(kind).with_rate(1e-9);
            let out = gen_tspgen(&cfg, &[op], 1).unwrap();
            let changed = origin
                .points()
                .iter()
                .zip(out.points())
                .filter(|(a, b)| a != b)
                .count();
            assert!(changed <= 1, "{kind:?} changed {changed}");
        }
    }

    #[test]
    fn outputs_stay_valid() {
        for seed in 0..100u64 {
            let n = 20 + (seed as usize * 7) % 150;
            let bound = if seed % 3 == 0 { 500.0 } else { 1e6 };
            let cfg = GeneratorConfig { seed, n, bound };
            let kinds = &MutationOp::defaults()[..1 + seed as usize % 5];
            let out = gen_tspgen(&cfg, kinds, 1 + seed as usize % 20).unwrap();
            assert_well_formed(&out, n, bound);
        }
        let cfg = GeneratorConfig::new(9, 100);
        assert_eq!(
            gen_tspgen(&cfg, &MutationOp::defaults(), 5).unwrap(),
            gen_tspgen(&cfg, &MutationOp::defaults(), 5).unwrap()
        );
    }

    #[test]
    fn config_errors() {
        let cfg = GeneratorConfig::new(1, 50);
        assert!(gen_tspgen(&cfg, &[], 3).is_err());
        assert!(gen_tspgen(&cfg, &MutationOp::defaults(), 0).is_err());
        assert!(gen_tspgen(
            &cfg,
            &[MutationOp::new(MutationKind::Grid).with_rate(1.5)],
            1
        )
        .is_err());
    }
}
