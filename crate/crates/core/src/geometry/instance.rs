use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn euclid(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Integer lattice key, used for duplicate detection on rounded coordinates.
    pub(crate) fn key(&self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

/// How inter-city distances are measured.
///
/// `RoundedEuclidean` is the TSPLIB `EUC_2D` convention: the Euclidean distance
/// rounded to the nearest integer, halves rounding up. Every tour length is then
/// an integer-valued `f64`, so quality thresholds compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    #[default]
    RoundedEuclidean,
    ExactEuclidean,
}

impl DistanceMode {
    #[inline]
    pub fn apply(self, euclid: f64) -> f64 {
        match self {
            DistanceMode::RoundedEuclidean => (euclid + 0.5).floor(),
            DistanceMode::ExactEuclidean => euclid,
        }
    }

    pub fn is_integral(self) -> bool {
        matches!(self, DistanceMode::RoundedEuclidean)
    }
}

pub fn distance(a: Point, b: Point, mode: DistanceMode) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite coordinate in ({}, {}) / ({}, {})",
            a.x, a.y, b.x, b.y
        )));
    }
    Ok(mode.apply(a.euclid(&b)))
}

/// Instance class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "rue")]
    Rue,
    #[serde(rename = "netgen")]
    Netgen,
    #[serde(rename = "morphed")]
    Morphed,
    #[serde(rename = "tspgen")]
    Tspgen,
    #[serde(rename = "evolved-easy-A")]
    EvolvedEasyA,
    #[serde(rename = "evolved-easy-B")]
    EvolvedEasyB,
    #[serde(rename = "custom")]
    Custom,
}

impl Group {
    pub const ALL: [Group; 7] = [
        Group::Rue,
        Group::Netgen,
        Group::Morphed,
        Group::Tspgen,
        Group::EvolvedEasyA,
        Group::EvolvedEasyB,
        Group::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Rue => "rue",
            Group::Netgen => "netgen",
            Group::Morphed => "morphed",
            Group::Tspgen => "tspgen",
            Group::EvolvedEasyA => "evolved-easy-A",
            Group::EvolvedEasyB => "evolved-easy-B",
            Group::Custom => "custom",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown instance group `{s}`")))
    }
}

/// A Euclidean TSP instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    id: String,
    points: Vec<Point>,
    group: Group,
    metric: DistanceMode,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        points: Vec<Point>,
        group: Group,
        metric: DistanceMode,
    ) -> Result<Self> {
        let id = id.into();
        if points.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "instance `{id}` has {} cities, need at least 3",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "instance `{id}`: city {i} has a non-finite coordinate"
            )));
        }
        Ok(Instance {
            id,
            points,
            group,
            metric,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn metric(&self) -> DistanceMode {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.metric.apply(self.points[a].euclid(&self.points[b]))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_group(mut self, group: Group) -> Self {
        self.group = group;
        self
    }

    pub fn with_metric(mut self, metric: DistanceMode) -> Self {
        self.metric = metric;
        self
    }

    /// Indices of cities whose coordinates repeat an earlier city.
    pub fn duplicate_points(&self) -> Vec<usize> {
        let mut seen = HashSet::with_capacity(self.points.len());
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| !seen.insert((p.x.to_bits(), p.y.to_bits())))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let e = DistanceMode::ExactEuclidean;
        let r = DistanceMode::RoundedEuclidean;
        assert_eq!(
            distance(Point::new(0., 0.), Point::new(3., 4.), e).unwrap(),
            5.0
        );
        assert_eq!(
            distance(Point::new(0., 0.), Point::new(1., 1.), r).unwrap(),
            1.0
        );
        assert_eq!(
            distance(Point::new(2., 7.), Point::new(2., 7.), e).unwrap(),
            0.0
        );
    }

    #[test]
    fn rounding_is_half_up() {
        let r = DistanceMode::RoundedEuclidean;
        assert_eq!(
            distance(Point::new(0., 0.), Point::new(2.5, 0.), r).unwrap(),
            3.0
        );
        assert_eq!(
            distance(Point::new(0., 0.), Point::new(1.5, 0.), r).unwrap(),
            2.0
        );
        assert_eq!(
            distance(Point::new(0., 0.), Point::new(1.49, 0.), r).unwrap(),
            1.0
        );
    }

    #[test]
    fn non_finite_rejected() {
        let bad = Point::new(f64::NAN, 0.);
        assert!(matches!(
            distance(bad, Point::new(0., 0.), DistanceMode::ExactEuclidean),
            Err(Error::InvalidInput(_))
        ));
        let pts = vec![
            Point::new(0., 0.),
            Point::new(1., f64::INFINITY),
            Point::new(2., 2.),
        ];
        assert!(Instance::new("x", pts, Group::Custom, DistanceMode::default()).is_err());
    }

    #[test]
    fn too_small_instance() {
        let pts = vec![Point::new(0., 0.), Point::new(1., 1.)];
        assert!(Instance::new("x", pts, Group::Custom, DistanceMode::default()).is_err());
    }

    #[test]
    fn duplicates_are_reported() {
        let pts = vec![
            Point::new(0., 0.),
            Point::new(1., 1.),
            Point::new(0., 0.),
            Point::new(5., 5.),
        ];
        let inst = Instance::new("d", pts, Group::Custom, DistanceMode::default()).unwrap();
        assert_eq!(inst.duplicate_points(), vec![2]);
    }

    #[test]
    fn group_labels_round_trip() {
        for g in Group::ALL {
            assert_eq!(g.as_str().parse::<Group>().unwrap(), g);
        }
        assert!("structured".parse::<Group>().is_err());
    }
}
