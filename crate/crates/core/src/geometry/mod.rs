//! Instances, tours, distance conventions and candidate neighbor lists.

mod instance;
mod neighbors;
mod tour;
pub mod tsplib;

pub use instance::{distance, DistanceMode, Group, Instance, Point};
pub use neighbors::NeighborLists;
pub(crate) use tour::{raw_length, validate_order};
pub use tour::{tour_length, validate_tour, Tour, TourViolation};
