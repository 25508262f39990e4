//! Solutions (possibly partial) and their lexicographic cost.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::route::Route;

/// Fleet size first, then total distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub routes: usize,
    pub distance: f64,
}

impl Cost {
    pub fn new(routes: usize, distance: f64) -> Self {
        Cost { routes, distance }
    }
}

/// Total lexicographic order on (K, T).
pub fn compare_cost(a: &Cost, b: &Cost) -> Ordering {
    a.routes
        .cmp(&b.routes)
        .then_with(|| a.distance.total_cmp(&b.distance))
}

#[derive(Debug, Clone)]
pub struct Solution {
    routes: Vec<Route>,
    /// Customer id -> (route index, customer position). Slot 0 is the depot and stays `None`.
    position: Vec<Option<(usize, usize)>>,
    distance: f64,
    penalty: f64,
    version: u64,
}

impl PartialEq for Solution {
    fn eq(&self, other: &Self) -> bool {
        self.routes == other.routes
    }
}

impl Solution {
    /// An empty (fully unserved) solution.
    pub fn empty(instance: &Instance) -> Self {
        Solution {
            routes: Vec::new(),
            position: vec![None; instance.customer_count() + 1],
            distance: 0.0,
            penalty: 0.0,
            version: 0,
        }
    }

    /// One vehicle per customer.
    pub fn singletons(instance: &Instance) -> Self {
        Self::from_routes(instance, instance.customers().map(|c| vec![c]).collect())
    }

    /// Builds a solution from customer sequences, dropping empty ones.
    ///
    /// Panics if a customer id is out of range or served twice.
    pub fn from_routes(instance: &Instance, routes: Vec<Vec<usize>>) -> Self {
        let mut sol = Self::empty(instance);
        for seq in routes.into_iter().filter(|r| !r.is_empty()) {
            sol.push_route(instance, seq);
        }
        sol
    }

    fn sync_cost(&mut self) {
        self.distance = self.routes.iter().map(Route::distance).sum();
        self.penalty = self.routes.iter().map(Route::penalty).sum();
        self.version += 1;
    }

    fn index_route(&mut self, r: usize) {
        for (pos, &c) in self.routes[r].customers().iter().enumerate() {
            self.position[c] = Some((r, pos));
        }
    }

    pub fn push_route(&mut self, instance: &Instance, customers: Vec<usize>) -> usize {
        for &c in &customers {
            assert!(
                c >= 1 && c < self.position.len(),
                "customer {c} out of range"
            );
            assert!(self.position[c].is_none(), "customer {c} served twice");
        }
        self.routes.push(Route::new(instance, customers));
        let r = self.routes.len() - 1;
        self.index_route(r);
        self.sync_cost();
        r
    }

    /// Replaces the sequence of route `r`; customers dropped from it become unserved.
    pub fn set_route(&mut self, instance: &Instance, r: usize, customers: Vec<usize>) {
        for &c in self.routes[r].customers() {
            self.position[c] = None;
        }
        for &c in &customers {
            assert!(self.position[c].is_none(), "customer {c} served twice");
        }
        self.routes[r] = Route::new(instance, customers);
        self.index_route(r);
        self.sync_cost();
    }

    /// Replaces several routes at once; customers may move between them.
    pub fn set_routes(&mut self, instance: &Instance, updates: Vec<(usize, Vec<usize>)>) {
        for (r, _) in &updates {
            for &c in self.routes[*r].customers() {
                self.position[c] = None;
            }
        }
        for (r, seq) in updates {
            for &c in &seq {
                assert!(self.position[c].is_none(), "customer {c} served twice");
            }
            self.routes[r] = Route::new(instance, seq);
            self.index_route(r);
        }
        self.sync_cost();
    }

    /// Removes route `r` and returns its customers, which become unserved.
    /// The last route takes index `r`.
    pub fn remove_route(&mut self, r: usize) -> Vec<usize> {
        let route = self.routes.swap_remove(r);
        for &c in route.customers() {
            self.position[c] = None;
        }
        if r < self.routes.len() {
            self.index_route(r);
        }
        self.sync_cost();
        route.customers().to_vec()
    }

    /// Deletes routes without customers.
    pub fn drop_empty_routes(&mut self) {
        if self.routes.iter().all(|r| !r.is_empty()) {
            return;
        }
        self.routes.retain(|r| !r.is_empty());
        for r in 0..self.routes.len() {
            self.index_route(r);
        }
        self.sync_cost();
    }

    pub fn insert(&mut self, instance: &Instance, r: usize, gap: usize, customer: usize) {
        let mut seq = self.routes[r].customers().to_vec();
        seq.insert(gap, customer);
        self.set_route(instance, r, seq);
    }

    /// Unserves `customer`, returning its former (route, position).
    pub fn remove_customer(&mut self, instance: &Instance, customer: usize) -> Option<(usize, usize)> {
        let (r, pos) = self.position[customer]?;
        let mut seq = self.routes[r].customers().to_vec();
        seq.remove(pos);
        self.set_route(instance, r, seq);
        Some((r, pos))
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route(&self, r: usize) -> &Route {
        &self.routes[r]
    }

    pub fn route_count(&self) -> usize {
        self.routes.len()
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Penalty function value: capacity excess plus lateness over all routes.
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn cost(&self) -> Cost {
        Cost::new(self.routes.len(), self.distance)
    }

    pub fn position(&self, customer: usize) -> Option<(usize, usize)> {
        self.position[customer]
    }

    pub fn is_served(&self, customer: usize) -> bool {
        self.position[customer].is_some()
    }

    pub fn served_count(&self) -> usize {
        self.routes.iter().map(Route::len).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.served_count() + 1 == self.position.len()
    }

    pub fn unserved(&self) -> Vec<usize> {
        (1..self.position.len())
            .filter(|&c| self.position[c].is_none())
            .collect()
    }

    /// Incremented by every mutation; moves are tied to the version they were generated for.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn to_sequences(&self) -> Vec<Vec<usize>> {
        self.routes.iter().map(|r| r.customers().to_vec()).collect()
    }

    /// Route sequences in canonical order, for set comparisons.
    pub fn canonical_routes(&self) -> Vec<Vec<usize>> {
        let mut seqs = self.to_sequences();
        seqs.sort();
        seqs
    }

    /// Recomputes (K, T) from scratch, ignoring the caches.
    pub fn recomputed_cost(&self, instance: &Instance) -> Cost {
        let distance = self
            .routes
            .iter()
            .map(|r| Route::new(instance, r.customers().to_vec()).distance())
            .sum();
        Cost::new(self.routes.len(), distance)
    }
}
