//! Naive O(N) validator. It recomputes everything from raw customer sequences
//! and never looks at route caches, so it can serve as the oracle for them.

use std::fmt;

use serde::Serialize;

use crate::instance::{Instance, DEPOT, EPS};
use crate::solution::{Cost, Solution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Condition (i): route load above capacity.
    Capacity { route: usize, load: u64, capacity: u32 },
    /// Condition (ii): service starts after the due date.
    Late { route: usize, customer: usize, start: f64, due: f64 },
    /// Condition (iii): customer never visited.
    Unserved { customer: usize },
    /// Condition (iii): customer visited more than once.
    Duplicate { customer: usize },
    /// Condition (iv): vehicle back at the depot after its due date.
    DepotReturn { route: usize, arrival: f64, due: f64 },
    /// Structural: id that is not a customer of the instance.
    UnknownCustomer { route: usize, id: usize },
    /// Structural: route with no customers.
    EmptyRoute { route: usize },
}

impl Violation {
    pub fn is_structural(&self) -> bool {
        matches!(
            self,
            Violation::UnknownCustomer { .. } | Violation::EmptyRoute { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Capacity { route, load, capacity } => {
                write!(f, "(i) route {} load {} exceeds capacity {}", route + 1, load, capacity)
            }
            Violation::Late { route, customer, start, due } => write!(
                f,
                "(ii) customer {customer} on route {} starts at {start:.3} after due {due:.3}",
                route + 1
            ),
            Violation::Unserved { customer } => write!(f, "(iii) customer {customer} not served"),
            Violation::Duplicate { customer } => {
                write!(f, "(iii) customer {customer} served more than once")
            }
            Violation::DepotReturn { route, arrival, due } => write!(
                f,
                "(iv) route {} returns at {arrival:.3} after depot due {due:.3}",
                route + 1
            ),
            Violation::UnknownCustomer { route, id } => {
                write!(f, "route {} lists unknown customer {id}", route + 1)
            }
            Violation::EmptyRoute { route } => write!(f, "route {} is empty", route + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    /// Recomputed (K, T).
    pub cost: Cost,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks raw customer sequences against all four feasibility conditions and
/// reports every violation found.
pub fn check_routes(instance: &Instance, routes: &[Vec<usize>]) -> FeasibilityReport {
    let n = instance.customer_count();
    let depot = instance.depot();
    let mut visits = vec![0usize; n + 1];
    let mut violations = Vec::new();
    let mut total = 0.0;

    for (r, seq) in routes.iter().enumerate() {
        if seq.is_empty() {
            violations.push(Violation::EmptyRoute { route: r });
            continue;
        }
        if let Some(&id) = seq.iter().find(|&&id| id == DEPOT || id > n) {
            violations.push(Violation::UnknownCustomer { route: r, id });
            continue;
        }

        let mut load: u64 = 0;
        let mut time = depot.ready;
        let mut prev = DEPOT;
        for &c in seq {
            visits[c] += 1;
            let node = instance.node(c);
            load += node.demand as u64;
            let arrival = time + instance.node(prev).service + instance.dist(prev, c);
            total += instance.dist(prev, c);
            let start = arrival.max(node.ready);
            if start > node.due + EPS {
                violations.push(Violation::Late {
                    route: r,
                    customer: c,
                    start,
                    due: node.due,
                });
            }
            time = start;
            prev = c;
        }
        let back = time + instance.node(prev).service + instance.dist(prev, DEPOT);
        total += instance.dist(prev, DEPOT);
        if back > depot.due + EPS {
            violations.push(Violation::DepotReturn {
                route: r,
                arrival: back,
                due: depot.due,
            });
        }
        if load > instance.capacity as u64 {
            violations.push(Violation::Capacity {
                route: r,
                load,
                capacity: instance.capacity,
            });
        }
    }

    for c in 1..=n {
        match visits[c] {
            0 => violations.push(Violation::Unserved { customer: c }),
            1 => {}
            _ => violations.push(Violation::Duplicate { customer: c }),
        }
    }

    FeasibilityReport {
        violations,
        cost: Cost::new(routes.len(), total),
    }
}

/// Validates a solution with the naive sweep.
pub fn is_feasible(solution: &Solution, instance: &Instance) -> FeasibilityReport {
    check_routes(instance, &solution.to_sequences())
}

/// Penalty function recomputed from scratch: capacity excess plus lateness of
/// every visit and depot return, each with weight one.
pub fn naive_penalty(instance: &Instance, routes: &[Vec<usize>]) -> f64 {
    let depot = instance.depot();
    let mut total = 0.0;
    for seq in routes {
        let mut load: u64 = 0;
        let mut time = depot.ready;
        let mut prev = DEPOT;
        for &c in seq.iter().chain(std::iter::once(&DEPOT)) {
            let node = instance.node(c);
            load += node.demand as u64;
            let start = (time + instance.node(prev).service + instance.dist(prev, c)).max(node.ready);
            if start > node.due + EPS {
                total += start - node.due;
            }
            time = start;
            prev = c;
        }
        total += load.saturating_sub(instance.capacity as u64) as f64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Node;

    fn instance() -> Instance {
        let mk = |id, x, demand, ready, due| Node {
            id,
            x,
            y: 0.0,
            demand,
            ready,
            due,
            service: if id == 0 { 0.0 } else { 2.0 },
        };
        let nodes = vec![
            mk(0, 0.0, 0, 0.0, 50.0),
            mk(1, 3.0, 6, 10.0, 20.0),
            mk(2, 4.0, 5, 0.0, 5.0),
            mk(3, 20.0, 5, 0.0, 40.0),
        ];
        Instance::new("v", 3, 10, nodes).unwrap()
    }

    #[test]
    fn early_arrival_waits_and_is_feasible() {
        let inst = instance();
        let report = check_routes(&inst, &[vec![1], vec![2], vec![3]]);
        assert!(report.is_feasible(), "{:?}", report.violations);
    }

    #[test]
    fn overload_reports_condition_one() {
        let inst = instance();
        let report = check_routes(&inst, &[vec![2, 1], vec![3]]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Capacity { load: 11, .. })));
        assert_eq!(naive_penalty(&inst, &[vec![2, 1], vec![3]]), 1.0);
    }

    #[test]
    fn all_violations_are_reported() {
        let inst = instance();
        // 1 then 2: 2 is late, load 11, customer 3 missing, 1 listed twice
        let report = check_routes(&inst, &[vec![1, 2], vec![1]]);
        let v = &report.violations;
        assert!(v.iter().any(|v| matches!(v, Violation::Late { customer: 2, .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::Capacity { .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::Unserved { customer: 3 })));
        assert!(v.iter().any(|v| matches!(v, Violation::Duplicate { customer: 1 })));
    }

    #[test]
    fn late_depot_return_reports_condition_four() {
        let inst = instance();
        // 1 then 3: 3 starts at 29 and the vehicle is back at 51
        let report = check_routes(&inst, &[vec![1, 3], vec![2]]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DepotReturn { .. })));
    }

    #[test]
    fn unknown_ids_are_structural() {
        let inst = instance();
        let report = check_routes(&inst, &[vec![1, 9], vec![2, 3]]);
        assert!(report.violations.iter().any(Violation::is_structural));
    }
}
