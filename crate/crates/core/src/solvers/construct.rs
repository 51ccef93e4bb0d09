use rand::seq::SliceRandom;
use rand::Rng;

use super::{rng_from_seed, Budget};
use crate::geometry::{Instance, Tour};

/// Nearest-neighbor tour from a seeded random start city.
pub fn greedy_initial_tour(inst: &Instance, seed: u64) -> Tour {
    let mut rng = rng_from_seed(seed);
    let start = rng.gen_range(0..inst.len());
    nearest_neighbor(inst, start, &mut Budget::unlimited())
}

pub(crate) fn nearest_neighbor(inst: &Instance, start: usize, budget: &mut Budget) -> Tour {
    let n = inst.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut length = 0.0;
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for step in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (c, &seen) in visited.iter().enumerate() {
            if !seen {
                let d = inst.dist(cur, c);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
        }
        budget.charge((n - step) as u64);
        visited[best] = true;
        order.push(best);
        length += best_d;
        cur = best;
    }
    length += inst.dist(cur, start);
    Tour::with_length(order, length)
}

/// Uniformly random permutation.
pub fn random_tour(inst: &Instance, rng: &mut impl Rng) -> Tour {
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.shuffle(rng);
    let len = crate::geometry::tour_length(inst, &Tour::from_order(order.clone()))
        .expect("shuffled identity is a permutation");
    Tour::with_length(order, len)
}
