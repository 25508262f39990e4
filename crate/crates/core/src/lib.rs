//! Two-phase solver for the vehicle routing problem with time windows.
//!
//! Phase one removes routes with an ejection-pool heuristic run by a team of
//! cooperating components. Phase two minimizes total distance with a memetic
//! algorithm built on edge-assembly crossover, with child generation spread
//! over worker threads.

pub mod config;
pub mod driver;
pub mod eax;
pub mod feasibility;
pub mod generator;
pub mod instance;
pub mod io;
pub mod memetic;
pub mod moves;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod route;
pub mod route_min;
pub mod solution;
pub mod stats;
#[cfg(test)]
mod testutil;

pub use feasibility::{check_routes, is_feasible, FeasibilityReport, Violation};
pub use instance::{Instance, InstanceError, Node, DEPOT, EPS};
pub use route::Route;
pub use solution::{compare_cost, Cost, Solution};

pub use config::{Phase, RunConfig};
pub use oracle::oracle_solve;
