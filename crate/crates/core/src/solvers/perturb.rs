use rand::Rng;

use super::rng_from_seed;
use crate::error::{Error, Result};
use crate::geometry::Tour;

/// Outcome of a double-bridge kick. `applied` is false when the tour is too
/// short (fewer than 8 cities) and was returned unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleBridge {
    pub tour: Tour,
    pub applied: bool,
}

/// Random double-bridge kick: four edges are removed at random and the four
/// segments are reconnected without reversal.
pub fn double_bridge(t: &Tour, seed: u64) -> DoubleBridge {
    let mut rng = rng_from_seed(seed);
    match kick(t.order(), &mut rng) {
        Some((order, _)) => DoubleBridge {
            tour: Tour::from_order(order),
            applied: true,
        },
        None => {
            log::warn!(
                "double bridge needs at least 8 cities, tour has {}",
                t.len()
            );
            DoubleBridge {
                tour: t.clone(),
                applied: false,
            }
        }
    }
}

/// Double bridge with explicit cut positions `0 < p1 < p2 < p3 < n`: the order
/// is split into `A = [0, p1)`, `B = [p1, p2)`, `C = [p2, p3)`, `D = [p3, n)`
/// and rebuilt as `A D C B`, which replaces all four boundary edges.
pub fn double_bridge_at(t: &Tour, cuts: [usize; 3]) -> Result<Tour> {
    let n = t.len();
    let [p1, p2, p3] = cuts;
    if !(0 < p1 && p1 < p2 && p2 < p3 && p3 < n) {
        return Err(Error::InvalidInput(format!(
            "cut positions {cuts:?} must satisfy 0 < p1 < p2 < p3 < {n}"
        )));
    }
    Ok(Tour::from_order(reconnect(t.order(), 0, cuts)))
}

fn reconnect(order: &[usize], offset: usize, [p1, p2, p3]: [usize; 3]) -> Vec<usize> {
    let n = order.len();
    let at = |k: usize| order[(offset + k) % n];
    let mut out = Vec::with_capacity(n);
    out.extend((0..p1).map(at));
    out.extend((p3..n).map(at));
    out.extend((p2..p3).map(at));
    out.extend((p1..p2).map(at));
    out
}

/// Random kick on a raw order; also returns the eight cities at the segment
/// ends, which are the only ones whose neighborhoods changed.
pub(crate) fn kick(order: &[usize], rng: &mut impl Rng) -> Option<(Vec<usize>, [usize; 8])> {
    let n = order.len();
    if n < 8 {
        return None;
    }
    let slack = n - 8;
    let mut u = [
        rng.gen_range(0..=slack),
        rng.gen_range(0..=slack),
        rng.gen_range(0..=slack),
    ];
    u.sort_unstable();
    let cuts = [2 + u[0], 4 + u[1], 6 + u[2]];
    let offset = rng.gen_range(0..n);
    let at = |k: usize| order[(offset + k) % n];
    let ends = [
        at(0),
        at(cuts[0] - 1),
        at(cuts[0]),
        at(cuts[1] - 1),
        at(cuts[1]),
        at(cuts[2] - 1),
        at(cuts[2]),
        at(n - 1),
    ];
    Some((reconnect(order, offset, cuts), ends))
}
