//! Periodic patrol schedules over finite metric spaces.
//!
//! Points carry weights; a schedule is a cyclic visit sequence. The
//! objectives are the weighted maximum over points of either the longest
//! absence or the length-biased mean absence. [`planner::plan`] builds a
//! schedule that is within a logarithmic factor of optimal for both at once;
//! [`oracle`] provides exact baselines for small instances and [`security`]
//! analyses schedules as randomized patrols against a rational attacker.

pub mod error;
pub mod fixtures;
pub mod instance;
pub mod mst;
pub mod oracle;
pub mod planner;
pub mod report;
pub mod schedule;
pub mod security;
pub mod treecover;

pub use error::{Error, Result};
pub use instance::{generate_random, validate_metric, GeneratorSpec, Geometry, Instance, PointId, WeightLaw};
pub use schedule::{CostValue, Exponent, Schedule};
pub use planner::{plan, PlanResult};
