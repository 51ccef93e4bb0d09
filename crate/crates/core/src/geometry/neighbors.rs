use super::Instance;

/// The `k` nearest cities of every city, ascending by distance, ties by index.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborLists {
    k: usize,
    flat: Vec<usize>,
}

impl NeighborLists {
    pub fn build(inst: &Instance, k: usize) -> Self {
        let n = inst.len();
        let k = k.max(1).min(n - 1);
        let mut flat = Vec::with_capacity(n * k);
        let mut row: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
        for c in 0..n {
            row.clear();
            row.extend((0..n).filter(|&o| o != c).map(|o| (inst.dist(c, o), o)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < row.len() {
                row.select_nth_unstable_by(k - 1, cmp);
                row.truncate(k);
            }
            row.sort_unstable_by(cmp);
            flat.extend(row.iter().map(|&(_, o)| o));
        }
        NeighborLists { k, flat }
    }

    /// Effective list length, `min(k, n - 1)`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_cities(&self) -> usize {
        self.flat.len() / self.k
    }

    #[inline]
    pub fn of(&self, city: usize) -> &[usize] {
        &self.flat[city * self.k..(city + 1) * self.k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DistanceMode, Group, Point};

    #[test]
    fn collinear_nearest() {
        let pts = [0., 1., 2., 10.]
            .iter()
            .map(|&x| Point::new(x, 0.))
            .collect();
        let inst = Instance::new("c", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        let nl = NeighborLists::build(&inst, 1);
        assert_eq!(nl.of(0), &[1]);
        assert_eq!(nl.of(3), &[2]);
    }

    #[test]
    fn full_lists_when_k_large() {
        let pts = [0., 1., 2., 10.]
            .iter()
            .map(|&x| Point::new(x, 0.))
            .collect();
        let inst = Instance::new("c", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        let nl = NeighborLists::build(&inst, 10);
        assert_eq!(nl.k(), 3);
        assert_eq!(nl.of(1), &[0, 2, 3]);
        assert_eq!(nl.of(3), &[2, 1, 0]);
    }

    #[test]
    fn ties_break_by_index() {
        // 1 and 2 are equidistant from 0
        let pts = vec![
            Point::new(0., 0.),
            Point::new(0., 5.),
            Point::new(5., 0.),
            Point::new(9., 9.),
        ];
        let inst = Instance::new("t", pts, Group::Custom, DistanceMode::RoundedEuclidean).unwrap();
        let nl = NeighborLists::build(&inst, 2);
        assert_eq!(nl.of(0), &[1, 2]);
    }
}
