//! Edge assembly crossover with the single-cycle E-set strategy.
//!
//! The edges of parents A and B that are not shared form a multigraph in
//! which every city has equally many A- and B-edges. It decomposes into
//! AB-cycles that alternate between A-edges and B-edges. Applying one cycle
//! to A (drop its A-edges, add its B-edges) leaves every city with degree two,
//! i.e. a set of subtours, which are then merged greedily by 2-edge exchanges
//! until a single tour remains.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{rng_from_seed, Budget};
use crate::geometry::{raw_length, validate_order, Instance, NeighborLists, Tour};

const NONE: usize = usize::MAX;

/// Closed alternating cycle `v0 v1 ... v(2m-1)`. Edge `k` joins `v_k` and
/// `v_(k+1 mod 2m)` and belongs to parent A when `k` is even, B when odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbCycle {
    pub vertices: Vec<usize>,
}

impl AbCycle {
    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        let m = self.vertices.len();
        (0..m).map(move |k| (self.vertices[k], self.vertices[(k + 1) % m], k % 2 == 0))
    }
}

fn adjacency(order: &[usize]) -> Vec<[usize; 2]> {
    let n = order.len();
    let mut adj = vec![[NONE; 2]; n];
    for i in 0..n {
        adj[order[i]] = [order[(i + n - 1) % n], order[(i + 1) % n]];
    }
    adj
}

fn take(slot: &mut [usize; 2], w: usize) {
    if slot[0] == w {
        slot[0] = NONE;
    } else if slot[1] == w {
        slot[1] = NONE;
    } else {
        panic!("edge endpoint {w} not present");
    }
}

fn put(slot: &mut [usize; 2], w: usize) {
    if slot[0] == NONE {
        slot[0] = w;
    } else if slot[1] == NONE {
        slot[1] = w;
    } else {
        panic!("vertex already has degree two");
    }
}

fn replace(slot: &mut [usize; 2], old: usize, new: usize) {
    if slot[0] == old {
        slot[0] = new;
    } else {
        debug_assert_eq!(slot[1], old);
        slot[1] = new;
    }
}

/// Decomposes the non-shared edges of `a` and `b` into AB-cycles.
pub fn ab_cycles(a: &Tour, b: &Tour, rng: &mut impl Rng) -> Vec<AbCycle> {
    let (aa, ba) = (adjacency(a.order()), adjacency(b.order()));
    ab_cycles_from_adjacency(&aa, &ba, rng)
}

fn ab_cycles_from_adjacency(
    aa: &[[usize; 2]],
    ba: &[[usize; 2]],
    rng: &mut impl Rng,
) -> Vec<AbCycle> {
    let n = aa.len();
    let mut rem_a = vec![[NONE; 2]; n];
    let mut rem_b = vec![[NONE; 2]; n];
    for v in 0..n {
        for (k, &w) in aa[v].iter().enumerate() {
            if !ba[v].contains(&w) {
                rem_a[v][k] = w;
            }
        }
        for (k, &w) in ba[v].iter().enumerate() {
            if !aa[v].contains(&w) {
                rem_b[v][k] = w;
            }
        }
    }

    let mut starts: Vec<usize> = (0..n).filter(|&v| rem_a[v] != [NONE; 2]).collect();
    starts.shuffle(rng);

    let mut cycles = Vec::new();
    let mut seen_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut path: Vec<usize> = Vec::new();

    for s in starts {
        while rem_a[s] != [NONE; 2] {
            path.clear();
            path.push(s);
            seen_at[s].push(0);
            loop {
                let k = path.len() - 1;
                let cur = path[k];
                let rem = if k.is_multiple_of(2) {
                    &mut rem_a
                } else {
                    &mut rem_b
                };
                let choices: Vec<usize> = rem[cur].iter().copied().filter(|&w| w != NONE).collect();
                if choices.is_empty() {
                    debug_assert_eq!(k, 0, "alternating walk stuck mid-path");
                    break;
                }
                let w = choices[rng.gen_range(0..choices.len())];
                take(&mut rem[cur], w);
                take(&mut rem[w], cur);
                path.push(w);
                let kk = k + 1;

                let closing = seen_at[w]
                    .iter()
                    .rev()
                    .copied()
                    .find(|&j| (kk - j).is_multiple_of(2));
                match closing {
                    Some(j) => {
                        let mut vertices = path[j..kk].to_vec();
                        if j % 2 == 1 {
                            vertices.rotate_left(1);
                        }
                        cycles.push(AbCycle { vertices });
                        for idx in j + 1..kk {
                            seen_at[path[idx]].pop();
                        }
                        path.truncate(j + 1);
                    }
                    None => seen_at[w].push(kk),
                }
            }
            for &v in &path {
                seen_at[v].clear();
            }
        }
    }
    cycles
}

/// Generates up to `n_ch` offspring of `a` and `b`, each from one distinct
/// random AB-cycle, sorted by length. Empty when the parents share all edges.
pub fn eax_crossover(inst: &Instance, a: &Tour, b: &Tour, n_ch: usize, seed: u64) -> Vec<Tour> {
    let nl = NeighborLists::build(inst, 10);
    let mut rng = rng_from_seed(seed);
    eax(inst, a, b, n_ch, &nl, &mut rng, &mut Budget::unlimited())
}

pub(crate) fn eax(
    inst: &Instance,
    a: &Tour,
    b: &Tour,
    n_ch: usize,
    nl: &NeighborLists,
    rng: &mut impl Rng,
    budget: &mut Budget,
) -> Vec<Tour> {
    let aa = adjacency(a.order());
    let ba = adjacency(b.order());
    let mut cycles = ab_cycles_from_adjacency(&aa, &ba, rng);
    cycles.shuffle(rng);
    cycles.truncate(n_ch);

    let len_a = a.length(inst);
    let mut merger = SubtourMerger::new(inst.len());
    let mut out: Vec<Tour> = cycles
        .iter()
        .filter_map(|cyc| {
            budget.charge(1);
            let mut adj = aa.clone();
            let mut length = len_a;
            for (u, w, from_a) in cyc.edges() {
                if from_a {
                    take(&mut adj[u], w);
                    take(&mut adj[w], u);
                    length -= inst.dist(u, w);
                }
            }
            for (u, w, from_a) in cyc.edges() {
                if !from_a {
                    put(&mut adj[u], w);
                    put(&mut adj[w], u);
                    length += inst.dist(u, w);
                }
            }
            length += merger.merge(inst, nl, &mut adj, budget);
            let order = walk(&adj);
            if validate_order(inst.len(), &order).is_err() {
                log::error!("eax produced an invalid offspring; dropped");
                return None;
            }
            let exact = raw_length(inst, &order);
            debug_assert!((exact - length).abs() <= 1e-6 * exact.max(1.0));
            Some(Tour::with_length(order, exact))
        })
        .collect();
    out.sort_by(|x, y| x.length(inst).total_cmp(&y.length(inst)));
    out
}

fn walk(adj: &[[usize; 2]]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let (mut prev, mut cur) = (NONE, 0);
    for _ in 0..n {
        order.push(cur);
        let next = if adj[cur][0] != prev {
            adj[cur][0]
        } else {
            adj[cur][1]
        };
        prev = cur;
        cur = next;
        if cur == 0 {
            break;
        }
    }
    order
}

struct SubtourMerger {
    label: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl SubtourMerger {
    fn new(n: usize) -> Self {
        SubtourMerger {
            label: vec![NONE; n],
            members: Vec::new(),
        }
    }

    /// Joins all subtours of `adj` into one; returns the total length change.
    fn merge(
        &mut self,
        inst: &Instance,
        nl: &NeighborLists,
        adj: &mut [[usize; 2]],
        budget: &mut Budget,
    ) -> f64 {
        let n = adj.len();
        self.label.iter_mut().for_each(|l| *l = NONE);
        self.members.clear();
        for v in 0..n {
            if self.label[v] != NONE {
                continue;
            }
            let id = self.members.len();
            let mut group = Vec::new();
            let (mut prev, mut cur) = (NONE, v);
            loop {
                self.label[cur] = id;
                group.push(cur);
                let next = if adj[cur][0] != prev {
                    adj[cur][0]
                } else {
                    adj[cur][1]
                };
                prev = cur;
                cur = next;
                if cur == v {
                    break;
                }
            }
            self.members.push(group);
        }

        let mut total = 0.0;
        let mut alive = self.members.len();
        while alive > 1 {
            let small = (0..self.members.len())
                .filter(|&c| !self.members[c].is_empty())
                .min_by_key(|&c| (self.members[c].len(), c))
                .expect("at least two subtours");

            type Exchange = (f64, usize, usize, usize, usize);
            let mut best: Option<Exchange> = None;
            let consider = |best: &mut Option<Exchange>, u, u2, v, v2, budget: &mut Budget| {
                budget.charge(1);
                let delta =
                    inst.dist(u, v) + inst.dist(u2, v2) - inst.dist(u, u2) - inst.dist(v, v2);
                if best.is_none_or(|b| delta < b.0) {
                    *best = Some((delta, u, u2, v, v2));
                }
            };
            for &u in &self.members[small] {
                for u2 in adj[u] {
                    for &v in nl.of(u) {
                        if self.label[v] == small {
                            continue;
                        }
                        for v2 in adj[v] {
                            consider(&mut best, u, u2, v, v2, budget);
                        }
                    }
                }
            }
            if best.is_none() {
                for &u in &self.members[small] {
                    for u2 in adj[u] {
                        for v in (0..n).filter(|&v| self.label[v] != small) {
                            for v2 in adj[v] {
                                consider(&mut best, u, u2, v, v2, budget);
                            }
                        }
                    }
                }
            }
            let (delta, u, u2, v, v2) = best.expect("another subtour exists");
            replace(&mut adj[u], u2, v);
            replace(&mut adj[u2], u, v2);
            replace(&mut adj[v], v2, u);
            replace(&mut adj[v2], v, u2);
            total += delta;

            let target = self.label[v];
            let moved = std::mem::take(&mut self.members[small]);
            for &c in &moved {
                self.label[c] = target;
            }
            self.members[target].extend(moved);
            alive -= 1;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{tour_length, validate_tour};
    use crate::solvers::construct::random_tour;
    use crate::solvers::test_util::random_instance;

    #[test]
    fn identical_parents_have_no_cycles() {
        let inst = random_instance(30, 1, 1e6);
        let t = random_tour(&inst, &mut rng_from_seed(2));
        assert!(eax_crossover(&inst, &t, &t, 30, 0).is_empty());
        assert!(ab_cycles(&t, &t.reversed(), &mut rng_from_seed(0)).is_empty());
    }

    #[test]
    fn single_two_opt_difference() {
        let inst = random_instance(20, 9, 1e6);
        let a = Tour::evaluated(&inst, (0..20).collect()).unwrap();
        let mut ob: Vec<usize> = (0..20).collect();
        ob[5..=11].reverse();
        let b = Tour::evaluated(&inst, ob).unwrap();
        let cycles = ab_cycles(&a, &b, &mut rng_from_seed(1));
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].num_edges(), 4);
        let kids = eax_crossover(&inst, &a, &b, 30, 5);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].edges(), b.edges());
    }

    #[test]
    fn cycles_partition_the_differing_edges() {
        for seed in 0..50 {
            let inst = random_instance(40, seed, 1e6);
            let mut rng = rng_from_seed(seed);
            let a = random_tour(&inst, &mut rng);
            let b = random_tour(&inst, &mut rng);
            let cycles = ab_cycles(&a, &b, &mut rng);
            let (ea, eb) = (a.edges(), b.edges());
            let mut got_a = Vec::new();
            let mut got_b = Vec::new();
            for c in &cycles {
                assert!(c.num_edges() >= 4 && c.num_edges() % 2 == 0);
                for (u, w, from_a) in c.edges() {
                    let e = (u.min(w), u.max(w));
                    if from_a {
                        assert!(ea.binary_search(&e).is_ok());
                        got_a.push(e);
                    } else {
                        assert!(eb.binary_search(&e).is_ok());
                        got_b.push(e);
                    }
                }
            }
            let only_a: Vec<_> = ea
                .iter()
                .filter(|e| eb.binary_search(e).is_err())
                .copied()
                .collect();
            let only_b: Vec<_> = eb
                .iter()
                .filter(|e| ea.binary_search(e).is_err())
                .copied()
                .collect();
            got_a.sort_unstable();
            got_b.sort_unstable();
            assert_eq!(got_a, only_a);
            assert_eq!(got_b, only_b);
        }
    }

    #[test]
    fn offspring_are_valid_sorted_and_keep_common_edges() {
        for seed in 0..100 {
            let inst = random_instance(35, 100 + seed, 1e6);
            let mut rng = rng_from_seed(seed);
            let a = random_tour(&inst, &mut rng);
            let b = random_tour(&inst, &mut rng);
            let kids = eax_crossover(&inst, &a, &b, 10, seed);
            assert!(!kids.is_empty());
            assert!(kids.len() <= 10);
            for w in kids.windows(2) {
                assert!(w[0].length(&inst) <= w[1].length(&inst));
            }
            for k in &kids {
                assert!(validate_tour(&inst, k).is_ok());
                assert_eq!(k.cached_length().unwrap(), tour_length(&inst, k).unwrap());
            }
        }
    }
}
