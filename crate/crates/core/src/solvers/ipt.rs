//! Partition crossover in the style of iterative partial transcription.
//!
//! The shorter parent is the base. A stretch of the base tour between two
//! cities is exchangeable when the other parent visits exactly the same city
//! set as one contiguous path with the same two end cities. Replacing the
//! base stretch by the other parent's path keeps a valid tour, so every
//! strictly shorter replacement is transcribed, best gain first, until none
//! is left. The offspring is never longer than either parent.

use super::local_search::IMPROVE_EPS;
use super::Budget;
use crate::geometry::{raw_length, Instance, Tour};

pub fn partition_crossover_ipt(inst: &Instance, a: &Tour, b: &Tour) -> Tour {
    partition_crossover(inst, a, b, &mut Budget::unlimited())
}

pub(crate) fn partition_crossover(
    inst: &Instance,
    a: &Tour,
    b: &Tour,
    budget: &mut Budget,
) -> Tour {
    let (la, lb) = (a.length(inst), b.length(inst));
    let (base, other) = if lb < la { (b, a) } else { (a, b) };
    let n = inst.len();
    let mut order = base.order().to_vec();
    let mut length = base.length(inst);
    if n < 6 || base.order() == other.order() {
        return Tour::with_length(order, length);
    }

    let mut adj = vec![[0usize; 2]; n];
    let ob = other.order();
    for i in 0..n {
        adj[ob[i]] = [ob[(i + n - 1) % n], ob[(i + 1) % n]];
    }

    let mut stamp = vec![0u32; n];
    let mut deg = vec![0u8; n];
    let mut tag = 0u32;
    let mut cum = vec![0.0; 2 * n + 1];

    loop {
        for k in 0..2 * n {
            cum[k + 1] = cum[k] + inst.dist(order[k % n], order[(k + 1) % n]);
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            tag += 1;
            let first = order[i];
            stamp[first] = tag;
            deg[first] = 0;
            let mut internal = 0usize;
            let mut other_cost = 0.0;
            for len in 2..n {
                let c = order[(i + len - 1) % n];
                stamp[c] = tag;
                deg[c] = 0;
                for w in adj[c] {
                    if stamp[w] == tag && w != c {
                        internal += 1;
                        deg[c] += 1;
                        deg[w] += 1;
                        other_cost += inst.dist(c, w);
                    }
                }
                budget.charge(1);
                if len >= 4 && internal == len - 1 && deg[first] == 1 && deg[c] == 1 {
                    let base_cost = cum[i + len - 1] - cum[i];
                    let gain = base_cost - other_cost;
                    if gain > IMPROVE_EPS && best.is_none_or(|(_, _, g)| gain > g) {
                        best = Some((i, len, gain));
                    }
                }
            }
        }
        let Some((i, len, gain)) = best else { break };

        // transcribe the other parent's path over the segment's city set
        tag += 1;
        for k in 0..len {
            stamp[order[(i + k) % n]] = tag;
        }
        let first = order[i];
        let last = order[(i + len - 1) % n];
        let mut path = Vec::with_capacity(len);
        let mut prev = usize::MAX;
        let mut cur = first;
        loop {
            path.push(cur);
            if cur == last {
                break;
            }
            let next = adj[cur]
                .into_iter()
                .find(|&w| w != prev && stamp[w] == tag)
                .expect("segment is a path in the other parent");
            prev = cur;
            cur = next;
        }
        debug_assert_eq!(path.len(), len);
        for (k, c) in path.into_iter().enumerate() {
            order[(i + k) % n] = c;
        }
        length -= gain;
    }

    let exact = raw_length(inst, &order);
    debug_assert!((exact - length).abs() <= 1e-6 * exact.max(1.0));
    // guard against accumulated float error in exact-distance mode
    if exact > base.length(inst) {
        return Tour::with_length(base.order().to_vec(), base.length(inst));
    }
    Tour::with_length(order, exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{tour_length, validate_tour};
    use crate::geometry::{DistanceMode, Group, Point};
    use crate::solvers::construct::random_tour;
    use crate::solvers::rng_from_seed;
    use crate::solvers::test_util::random_instance;

    #[test]
    fn identical_parents() {
        let inst = random_instance(20, 4, 1e6);
        let t = random_tour(&inst, &mut rng_from_seed(1));
        let c = partition_crossover_ipt(&inst, &t, &t);
        assert_eq!(c.order(), t.order());
    }

    #[test]
    fn reversed_inner_segment_takes_shorter_variant() {
        // cities on a line-ish path; b reverses cities 1..=3 between 0 and 4
        let pts = vec![
            Point::new(0., 0.),
            Point::new(10., 0.),
            Point::new(20., 0.),
            Point::new(30., 0.),
            Point::new(40., 0.),
            Point::new(40., 30.),
            Point::new(20., 30.),
            Point::new(0., 30.),
        ];
        let inst = Instance::new("seg", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        let good = Tour::evaluated(&inst, vec![0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        let bad = Tour::evaluated(&inst, vec![0, 3, 2, 1, 4, 5, 6, 7]).unwrap();
        assert!(bad.length(&inst) > good.length(&inst));
        for (x, y) in [(&good, &bad), (&bad, &good)] {
            let c = partition_crossover_ipt(&inst, x, y);
            assert_eq!(tour_length(&inst, &c).unwrap(), good.length(&inst));
        }
    }

    #[test]
    fn combines_two_improvements() {
        // each parent is locally worse in a different place; the child takes
        // the good half of both
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Point::new(i as f64 * 10.0, 0.0));
        }
        for i in (0..8).rev() {
            pts.push(Point::new(i as f64 * 10.0, 40.0));
        }
        let inst = Instance::new("two", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        let mut a: Vec<usize> = (0..16).collect();
        a[1..4].reverse();
        let mut b: Vec<usize> = (0..16).collect();
        b[9..12].reverse();
        let a = Tour::evaluated(&inst, a).unwrap();
        let b = Tour::evaluated(&inst, b).unwrap();
        let c = partition_crossover_ipt(&inst, &a, &b);
        assert_eq!(c.length(&inst), 220.0);
        assert!(c.length(&inst) < a.length(&inst).min(b.length(&inst)));
    }

    #[test]
    fn never_longer_than_parents() {
        for seed in 0..200 {
            let n = 12 + (seed as usize % 39);
            let inst = random_instance(n, seed, 1e6);
            let mut rng = rng_from_seed(seed);
            let a = random_tour(&inst, &mut rng);
            let b = random_tour(&inst, &mut rng);
            let c = partition_crossover_ipt(&inst, &a, &b);
            assert!(validate_tour(&inst, &c).is_ok());
            let len = tour_length(&inst, &c).unwrap();
            assert!(len <= a.length(&inst).min(b.length(&inst)));
            assert_eq!(c.cached_length(), Some(len));
        }
    }
}
