//! A single vehicle tour with the per-position caches that make insertion and
//! splice checks cheap.
//!
//! Positions are indexed over the extended sequence `[depot, c_1, .., c_n, depot]`,
//! so position `0` is the departure and `n + 1` the return.

use crate::instance::{Instance, DEPOT, EPS};

#[inline]
pub(crate) fn lateness(start: f64, due: f64) -> f64 {
    if start > due + EPS {
        start - due
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Route {
    customers: Vec<usize>,
    load_prefix: Vec<u32>,
    dist_prefix: Vec<f64>,
    /// Earliest service start; lateness propagates when the route is infeasible.
    start: Vec<f64>,
    /// Latest start that keeps the remainder of the route feasible, `-inf` if none does.
    latest: Vec<f64>,
    late_prefix: Vec<f64>,
    penalty: f64,
}

impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.customers == other.customers
    }
}

impl Eq for Route {}

impl Route {
    pub fn new(instance: &Instance, customers: Vec<usize>) -> Self {
        let mut route = Route {
            customers,
            load_prefix: Vec::new(),
            dist_prefix: Vec::new(),
            start: Vec::new(),
            latest: Vec::new(),
            late_prefix: Vec::new(),
            penalty: 0.0,
        };
        route.refresh(instance);
        route
    }

    /// Recomputes every cache from the customer sequence in O(n).
    pub fn refresh(&mut self, instance: &Instance) {
        let len = self.customers.len() + 2;
        self.load_prefix.clear();
        self.dist_prefix.clear();
        self.start.clear();
        self.late_prefix.clear();
        self.latest.clear();
        self.latest.resize(len, 0.0);

        let depot = instance.depot();
        self.load_prefix.push(0);
        self.dist_prefix.push(0.0);
        self.start.push(depot.ready);
        self.late_prefix.push(0.0);
        for pos in 1..len {
            let prev = self.node_at(pos - 1);
            let node = self.node_at(pos);
            let n = instance.node(node);
            let d = instance.dist(prev, node);
            self.load_prefix.push(self.load_prefix[pos - 1] + n.demand);
            self.dist_prefix.push(self.dist_prefix[pos - 1] + d);
            let arrival = self.start[pos - 1] + instance.node(prev).service + d;
            let start = arrival.max(n.ready);
            self.start.push(start);
            self.late_prefix
                .push(self.late_prefix[pos - 1] + lateness(start, n.due));
        }

        self.latest[len - 1] = if depot.due < depot.ready - EPS {
            f64::NEG_INFINITY
        } else {
            depot.due
        };
        for pos in (0..len - 1).rev() {
            let node = self.node_at(pos);
            let next = self.node_at(pos + 1);
            let n = instance.node(node);
            let z = n
                .due
                .min(self.latest[pos + 1] - n.service - instance.dist(node, next));
            self.latest[pos] = if z < n.ready - EPS {
                f64::NEG_INFINITY
            } else {
                z
            };
        }

        let excess = self.load().saturating_sub(instance.capacity) as f64;
        self.penalty = excess + self.late_prefix[len - 1];
    }

    pub fn customers(&self) -> &[usize] {
        &self.customers
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    /// Node id at an extended position.
    #[inline]
    pub fn node_at(&self, pos: usize) -> usize {
        if pos == 0 || pos > self.customers.len() {
            DEPOT
        } else {
            self.customers[pos - 1]
        }
    }

    pub fn load(&self) -> u32 {
        *self.load_prefix.last().unwrap()
    }

    pub fn distance(&self) -> f64 {
        *self.dist_prefix.last().unwrap()
    }

    /// Capacity excess plus accumulated lateness (including the depot return).
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn is_feasible(&self) -> bool {
        self.penalty == 0.0
    }

    /// Load of the extended positions `0..=pos`.
    pub fn load_through(&self, pos: usize) -> u32 {
        self.load_prefix[pos]
    }

    /// Earliest service start at an extended position.
    pub fn start_at(&self, pos: usize) -> f64 {
        self.start[pos]
    }

    /// Latest permissible service start at an extended position.
    pub fn latest_at(&self, pos: usize) -> f64 {
        self.latest[pos]
    }

    /// Constant-time check of inserting `customer` into gap `gap` (between
    /// extended positions `gap` and `gap + 1`). The route must be feasible.
    pub fn check_insertion(&self, instance: &Instance, gap: usize, customer: usize) -> Insertion {
        debug_assert!(gap <= self.customers.len());
        #[cfg(debug_assertions)]
        {
            let fresh = Route::new(instance, self.customers.clone());
            debug_assert!(
                fresh.start == self.start && fresh.latest == self.latest,
                "stale route caches"
            );
        }
        let prev = self.node_at(gap);
        let next = self.node_at(gap + 1);
        let delta_distance =
            instance.dist(prev, customer) + instance.dist(customer, next) - instance.dist(prev, next);
        let splice = Splice {
            head: self,
            head_end: gap,
            middle: [std::slice::from_ref(&customer), &[], &[]],
            tail: self,
            tail_start: gap + 1,
        };
        Insertion {
            feasible: splice.feasible(instance).is_some(),
            delta_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub feasible: bool,
    pub delta_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpliceEval {
    pub load: u32,
    pub distance: f64,
    pub penalty: f64,
}

/// A candidate route built from a prefix of `head`, up to three explicit node
/// runs, and a suffix of `tail`. Every move in the crate reduces to one or two
/// splices.
#[derive(Debug, Clone, Copy)]
pub struct Splice<'a> {
    pub head: &'a Route,
    /// Last extended position of `head` kept (0 keeps only the depot).
    pub head_end: usize,
    pub middle: [&'a [usize]; 3],
    pub tail: &'a Route,
    /// First extended position of `tail` kept (`len + 1` keeps only the depot).
    pub tail_start: usize,
}

impl<'a> Splice<'a> {
    fn middle_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.middle.iter().flat_map(|s| s.iter().copied())
    }

    pub fn customer_count(&self) -> usize {
        self.head_end
            + self.middle.iter().map(|s| s.len()).sum::<usize>()
            + (self.tail.len() + 1 - self.tail_start)
    }

    fn load_and_distance(&self, instance: &Instance) -> (u32, f64) {
        let mut load = self.head.load_prefix[self.head_end];
        let mut distance = self.head.dist_prefix[self.head_end];
        let mut last = self.head.node_at(self.head_end);
        for v in self.middle_nodes() {
            load += instance.node(v).demand;
            distance += instance.dist(last, v);
            last = v;
        }
        let first_tail = self.tail.node_at(self.tail_start);
        distance += instance.dist(last, first_tail);
        distance += self.tail.distance() - self.tail.dist_prefix[self.tail_start];
        load += self.tail.load() - self.tail.load_prefix[self.tail_start - 1];
        (load, distance)
    }

    /// Evaluates the splice assuming hard windows. Runs in O(middle length) and
    /// returns `None` when the result violates capacity or any time window.
    pub fn feasible(&self, instance: &Instance) -> Option<SpliceEval> {
        if self.head.late_prefix[self.head_end] > 0.0 {
            return None;
        }
        let (load, distance) = self.load_and_distance(instance);
        if load > instance.capacity {
            return None;
        }
        let mut last = self.head.node_at(self.head_end);
        let mut t = self.head.start[self.head_end];
        for v in self.middle_nodes() {
            let n = instance.node(v);
            t = (t + instance.node(last).service + instance.dist(last, v)).max(n.ready);
            if t > n.due + EPS {
                return None;
            }
            last = v;
        }
        let x = self.tail.node_at(self.tail_start);
        let t = (t + instance.node(last).service + instance.dist(last, x))
            .max(instance.node(x).ready);
        if t > self.tail.latest[self.tail_start] + EPS {
            return None;
        }
        Some(SpliceEval {
            load,
            distance,
            penalty: 0.0,
        })
    }

    /// Evaluates the splice under the penalty function, allowing violations.
    /// Runs in O(middle + suffix length).
    pub fn penalized(&self, instance: &Instance) -> SpliceEval {
        let (load, distance) = self.load_and_distance(instance);
        let mut late = self.head.late_prefix[self.head_end];
        let mut last = self.head.node_at(self.head_end);
        let mut t = self.head.start[self.head_end];
        let suffix = (self.tail_start..=self.tail.len() + 1).map(|p| self.tail.node_at(p));
        for v in self.middle_nodes().chain(suffix) {
            let n = instance.node(v);
            t = (t + instance.node(last).service + instance.dist(last, v)).max(n.ready);
            late += lateness(t, n.due);
            last = v;
        }
        SpliceEval {
            load,
            distance,
            penalty: late + load.saturating_sub(instance.capacity) as f64,
        }
    }

    /// Materializes the customer sequence.
    pub fn customers(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.customer_count());
        out.extend_from_slice(&self.head.customers[..self.head_end]);
        for s in self.middle {
            out.extend_from_slice(s);
        }
        if self.tail_start <= self.tail.len() {
            out.extend_from_slice(&self.tail.customers[self.tail_start - 1..]);
        }
        out
    }
}
