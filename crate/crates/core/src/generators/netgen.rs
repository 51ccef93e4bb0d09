use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{build, GeneratorConfig, PointSet};
use crate::error::{Error, Result};
use crate::geometry::{Group, Instance, Point};

const MAX_CENTER_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSpec {
    pub clusters: usize,
    /// Within-cluster standard deviation as a fraction of the bound.
    pub spread: f64,
    /// Minimum distance between centers as a fraction of the bound.
    pub separation: f64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        ClusterSpec {
            clusters: 5,
            spread: 0.025,
            separation: 0.1,
        }
    }
}

impl ClusterSpec {
    pub fn with_clusters(clusters: usize) -> Self {
        ClusterSpec {
            clusters,
            ..Default::default()
        }
    }
}

/// Cluster sizes: the first `n % k` clusters get one extra point.
pub fn cluster_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// One Latin hypercube draw over `[lo, lo + width]²` with `k` strata per axis.
fn lhs_centers(k: usize, lo: f64, width: f64, rng: &mut super::GenRng) -> Vec<Point> {
    let cell = width / k as f64;
    let mut cols: Vec<usize> = (0..k).collect();
    cols.shuffle(rng);
    (0..k)
        .map(|row| {
            let x = lo + (row as f64 + rng.gen::<f64>()) * cell;
            let y = lo + (cols[row] as f64 + rng.gen::<f64>()) * cell;
            Point::new(x, y)
        })
        .collect()
}

/// Clustered instance and the cluster index of every point.
pub fn gen_netgen_labeled(
    cfg: &GeneratorConfig,
    spec: &ClusterSpec,
) -> Result<(Instance, Vec<usize>)> {
    cfg.validate()?;
    let k = spec.clusters;
    if k < 2 || k > cfg.n {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= clusters <= n, got {k} clusters for n={}",
            cfg.n
        )));
    }
    if !(spec.spread > 0.0) || !(spec.separation >= 0.0) {
        return Err(Error::InvalidConfig(
            "cluster spread must be positive, separation nonnegative".into(),
        ));
    }
    let b = cfg.bound;
    let mut rng = cfg.rng();
    let min_sep = spec.separation * b;
    let centers = (0..MAX_CENTER_REDRAWS)
        .map(|_| lhs_centers(k, 0.1 * b, 0.8 * b, &mut rng))
        .find(|cs| {
            cs.iter()
                .enumerate()
                .all(|(i, p)| cs[..i].iter().all(|q| p.euclid(q) >= min_sep))
        })
        .ok_or_else(|| {
            Error::GenerationFailure(format!(
                "no {k} centers with separation {} found in {MAX_CENTER_REDRAWS} draws",
                spec.separation
            ))
        })?;

    let noise =
        Normal::new(0.0, spec.spread * b).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut set = PointSet::new(b);
    let mut points = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for (c, size) in cluster_sizes(cfg.n, k).into_iter().enumerate() {
        let center = centers[c];
        let mut placed = 0;
        while placed < size {
            let p = Point::new(
                center.x + noise.sample(&mut rng),
                center.y + noise.sample(&mut rng),
            );
            // truncate the Gaussian to the window by rejection
            if !(0.0..=b).contains(&p.x) || !(0.0..=b).contains(&p.y) {
                continue;
            }
            let p = set.snap(p);
            if set.insert(p) {
                points.push(p);
                labels.push(c);
                placed += 1;
            }
        }
    }
    let id = format!("netgen-n{}-c{k}-s{}", cfg.n, cfg.seed);
    Ok((build(id, points, Group::Netgen)?, labels))
}

/// Clustered instance: Latin-hypercube centers, Gaussian clusters.
pub fn gen_netgen(cfg: &GeneratorConfig, spec: &ClusterSpec) -> Result<Instance> {
    gen_netgen_labeled(cfg, spec).map(|(inst, _)| inst)
}
