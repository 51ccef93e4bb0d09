// Held-Karp: g[S][e] is the shortest path that starts at city 0, visits every
// city of S (a subset of 1..n) and ends at e in S. Subsets are bitmasks over
// cities 1..n shifted down by one bit.

use crate::error::{Error, Result};
use crate::geometry::{Instance, Tour};

pub const HELD_KARP_MAX_N: usize = 16;

/// Provably optimal tour and its length for `n <= 16`.
pub fn held_karp_exact(inst: &Instance) -> Result<(Tour, f64)> {
    let n = inst.len();
    if n > HELD_KARP_MAX_N {
        return Err(Error::SizeLimit {
            n,
            max: HELD_KARP_MAX_N,
        });
    }
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut g = vec![f64::INFINITY; (1 << m) * m];
    let mut parent = vec![u8::MAX; (1 << m) * m];
    for e in 0..m {
        g[(1 << e) * m + e] = inst.dist(0, e + 1);
    }
    for mask in 1..=full {
        for e in 0..m {
            if mask & (1 << e) == 0 {
                continue;
            }
            let cur = g[mask * m + e];
            if !cur.is_finite() {
                continue;
            }
            let rest = full & !mask;
            let mut bits = rest;
            while bits != 0 {
                let nxt = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let nmask = mask | (1 << nxt);
                let cand = cur + inst.dist(e + 1, nxt + 1);
                let slot = nmask * m + nxt;
                if cand < g[slot] {
                    g[slot] = cand;
                    parent[slot] = e as u8;
                }
            }
        }
    }
    let (mut last, best) = (0..m)
        .map(|e| (e, g[full * m + e] + inst.dist(e + 1, 0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 3");
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    loop {
        order.push(last + 1);
        let p = parent[mask * m + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    order.push(0);
    order.reverse();
    let tour = Tour::evaluated(inst, order)?;
    let len = tour.length(inst);
    debug_assert!((len - best).abs() <= 1e-9 * best.max(1.0));
    Ok((tour, len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{tour_length, DistanceMode, Group, Point};
    use crate::solvers::test_util::{random_instance, square};

    /// All (n-1)!/2 tours by fixing city 0 and enumerating permutations.
    pub(crate) fn brute_force(inst: &Instance) -> f64 {
        fn rec(
            inst: &Instance,
            path: &mut Vec<usize>,
            used: &mut [bool],
            acc: f64,
            best: &mut f64,
        ) {
            let n = inst.len();
            if path.len() == n {
                let total = acc + inst.dist(*path.last().unwrap(), path[0]);
                if total < *best {
                    *best = total;
                }
                return;
            }
            for c in 1..n {
                if !used[c] {
                    let add = inst.dist(*path.last().unwrap(), c);
                    used[c] = true;
                    path.push(c);
                    rec(inst, path, used, acc + add, best);
                    path.pop();
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut used = vec![false; inst.len()];
        used[0] = true;
        rec(inst, &mut vec![0], &mut used, 0.0, &mut best);
        best
    }

    #[test]
    fn square_and_triangle() {
        let (_, len) = held_karp_exact(&square()).unwrap();
        assert_eq!(len, 40.0);
        let pts = vec![Point::new(0., 0.), Point::new(30., 0.), Point::new(0., 40.)];
        let tri = Instance::new("t", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        assert_eq!(held_karp_exact(&tri).unwrap().1, 120.0);
    }

    #[test]
    fn matches_brute_force_up_to_nine() {
        for n in 3..=9 {
            for seed in 0..4 {
                let inst = random_instance(n, 77 + seed, 1e4);
                let (tour, len) = held_karp_exact(&inst).unwrap();
                assert_eq!(len, brute_force(&inst), "n={n} seed={seed}");
                assert_eq!(tour_length(&inst, &tour).unwrap(), len);
            }
        }
    }

    #[test]
    fn size_limit() {
        let inst = random_instance(17, 1, 1e4);
        assert!(matches!(
            held_karp_exact(&inst),
            Err(Error::SizeLimit { n: 17, .. })
        ));
        assert!(held_karp_exact(&random_instance(16, 1, 1e4)).is_ok());
    }
}
