use std::fmt;

use serde::{Deserialize, Serialize};

use super::Instance;
use crate::error::{Error, Result};

/// A closed tour stored as a visiting order, with an optional cached length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    length: Option<f64>,
}

impl Tour {
    /// Wraps an order without checking it. Use [`Tour::evaluated`] when the
    /// order comes from outside the solvers.
    pub fn from_order(order: Vec<usize>) -> Self {
        Tour {
            order,
            length: None,
        }
    }

    /// Validates `order` against `inst` and caches its length.
    pub fn evaluated(inst: &Instance, order: Vec<usize>) -> Result<Self> {
        let mut t = Tour::from_order(order);
        let len = tour_length(inst, &t)?;
        t.length = Some(len);
        Ok(t)
    }

    pub(crate) fn with_length(order: Vec<usize>, length: f64) -> Self {
        Tour {
            order,
            length: Some(length),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn cached_length(&self) -> Option<f64> {
        self.length
    }

    /// Cached length, or recomputed when absent. Assumes a valid order.
    pub fn length(&self, inst: &Instance) -> f64 {
        self.length.unwrap_or_else(|| raw_length(inst, &self.order))
    }

    pub fn rotated(&self, r: usize) -> Tour {
        let mut order = self.order.clone();
        if !order.is_empty() {
            let k = r % order.len();
            order.rotate_left(k);
        }
        Tour {
            order,
            length: self.length,
        }
    }

    pub fn reversed(&self) -> Tour {
        let mut order = self.order.clone();
        order.reverse();
        Tour {
            order,
            length: self.length,
        }
    }

    /// Undirected edge set as sorted pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.order.len();
        let mut e: Vec<_> = (0..n)
            .map(|i| {
                let (a, b) = (self.order[i], self.order[(i + 1) % n]);
                (a.min(b), a.max(b))
            })
            .collect();
        e.sort_unstable();
        e
    }
}

/// Length of a closed tour over `order`, no validation.
pub(crate) fn raw_length(inst: &Instance, order: &[usize]) -> f64 {
    let n = order.len();
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n - 1 {
        sum += inst.dist(order[i], order[i + 1]);
    }
    sum + inst.dist(order[n - 1], order[0])
}

pub fn tour_length(inst: &Instance, t: &Tour) -> Result<f64> {
    validate_tour(inst, t).map_err(|v| Error::InvalidTour(v.to_string()))?;
    Ok(raw_length(inst, t.order()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TourViolation {
    WrongLength {
        expected: usize,
        got: usize,
    },
    NotPermutation {
        duplicates: Vec<usize>,
        missing: Vec<usize>,
        out_of_range: Vec<usize>,
    },
}

impl fmt::Display for TourViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TourViolation::WrongLength { expected, got } => {
                write!(f, "wrong length: expected {expected} cities, got {got}")
            }
            TourViolation::NotPermutation {
                duplicates,
                missing,
                out_of_range,
            } => write!(
                f,
                "not a permutation: duplicates {duplicates:?}, missing {missing:?}, out of range {out_of_range:?}"
            ),
        }
    }
}

pub fn validate_tour(inst: &Instance, t: &Tour) -> Result<(), TourViolation> {
    validate_order(inst.len(), t.order())
}

pub(crate) fn validate_order(n: usize, order: &[usize]) -> Result<(), TourViolation> {
    if order.len() != n {
        return Err(TourViolation::WrongLength {
            expected: n,
            got: order.len(),
        });
    }
    let mut count = vec![0u32; n];
    let mut out_of_range = Vec::new();
    for &c in order {
        match count.get_mut(c) {
            Some(k) => *k += 1,
            None => out_of_range.push(c),
        }
    }
    let duplicates: Vec<usize> = (0..n).filter(|&c| count[c] > 1).collect();
    let missing: Vec<usize> = (0..n).filter(|&c| count[c] == 0).collect();
    if duplicates.is_empty() && missing.is_empty() && out_of_range.is_empty() {
        Ok(())
    } else {
        Err(TourViolation::NotPermutation {
            duplicates,
            missing,
            out_of_range,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DistanceMode, Group, Point};

    fn square(mode: DistanceMode) -> Instance {
        let pts = vec![
            Point::new(0., 0.),
            Point::new(0., 10.),
            Point::new(10., 10.),
            Point::new(10., 0.),
        ];
        Instance::new("sq", pts, Group::Custom, mode).unwrap()
    }

    #[test]
    fn square_perimeter_and_crossing() {
        let inst = square(DistanceMode::ExactEuclidean);
        let t = Tour::from_order(vec![0, 1, 2, 3]);
        assert_eq!(tour_length(&inst, &t).unwrap(), 40.0);
        let x = Tour::from_order(vec![0, 2, 1, 3]);
        let expected = 20.0 + 20.0 * 2f64.sqrt();
        assert!((tour_length(&inst, &x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn triangle_orientation_invariant() {
        let pts = vec![Point::new(0., 0.), Point::new(3., 1.), Point::new(1., 7.)];
        let inst = Instance::new("t", pts, Group::Custom, DistanceMode::ExactEuclidean).unwrap();
        let t = Tour::from_order(vec![0, 1, 2]);
        assert_eq!(
            tour_length(&inst, &t).unwrap(),
            tour_length(&inst, &t.reversed()).unwrap()
        );
    }

    #[test]
    fn validation_reports() {
        let inst = square(DistanceMode::RoundedEuclidean);
        assert!(validate_tour(&inst, &Tour::from_order(vec![0, 1, 2, 3])).is_ok());
        assert_eq!(
            validate_tour(&inst, &Tour::from_order(vec![0, 1, 1, 3])),
            Err(TourViolation::NotPermutation {
                duplicates: vec![1],
                missing: vec![2],
                out_of_range: vec![],
            })
        );
        assert_eq!(
            validate_tour(&inst, &Tour::from_order(vec![0, 1, 2])),
            Err(TourViolation::WrongLength {
                expected: 4,
                got: 3
            })
        );
        assert!(matches!(
            tour_length(&inst, &Tour::from_order(vec![0, 1, 9, 3])),
            Err(Error::InvalidTour(_))
        ));
    }
}
