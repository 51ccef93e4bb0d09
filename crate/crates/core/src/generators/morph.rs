use super::{build, min_cost_matching, PointSet};
use crate::error::{Error, Result};
use crate::geometry::{Group, Instance, Point};

/// Convex combination of two instances along an optimal point matching.
///
/// Point `i` becomes `lambda * a[i] + (1 - lambda) * b[m(i)]`, rounded. A
/// rounded point that lands on an earlier one moves to the nearest free
/// lattice point inside the parents' joint bounding box, scanning rings of
/// growing radius in a fixed order, so no randomness is involved.
pub fn gen_morphed(a: &Instance, b: &Instance, lambda: f64, seed: u64) -> Result<Instance> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "morphing needs equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    let (assign, _) = min_cost_matching(a.points(), b.points())?;
    let all = a.points().iter().chain(b.points());
    let lo = all
        .clone()
        .fold(f64::INFINITY, |m, p| m.min(p.x).min(p.y))
        .floor()
        .max(0.0);
    let hi = all.fold(0.0f64, |m, p| m.max(p.x).max(p.y)).ceil();

    let mut set = PointSet::new(hi);
    let mut points = Vec::with_capacity(a.len());
    for (i, &j) in assign.iter().enumerate() {
        let (p, q) = (a.points()[i], b.points()[j]);
        let mixed = set.snap(Point::new(
            lambda * p.x + (1.0 - lambda) * q.x,
            lambda * p.y + (1.0 - lambda) * q.y,
        ));
        let placed = free_near(&mut set, mixed, lo, hi).ok_or_else(|| {
            Error::GenerationFailure("no free lattice point for a morphed city".into())
        })?;
        points.push(placed);
    }
    let id = format!("morphed-{}-{}-l{lambda}-s{seed}", a.id(), b.id());
    build(id, points, Group::Morphed)
}

fn free_near(set: &mut PointSet, p: Point, lo: f64, hi: f64) -> Option<Point> {
    if set.insert(p) {
        return Some(p);
    }
    let span = (hi - lo) as i64;
    for r in 1..=span {
        for dx in -r..=r {
            for dy in [-r, r] {
                for (ox, oy) in [(dx, dy), (dy, dx)] {
                    let q = Point::new(p.x + ox as f64, p.y + oy as f64);
                    if (lo..=hi).contains(&q.x) && (lo..=hi).contains(&q.y) && set.insert(q) {
                        return Some(q);
                    }
                }
            }
        }
    }
    None
}
