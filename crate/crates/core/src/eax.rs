//! Edge-assembly crossover over directed route edges, followed by subtour
//! reconnection, and the penalty-descent repair of its children.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, DEPOT};
use crate::moves::{self, Neighborhood, RepairBudget};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One AB-cycle.
    Single,
    /// One AB-cycle plus every cycle sharing a customer with it.
    Block,
}

/// Directed edge `(from, to)`; the depot is node 0.
pub type Edge = (usize, usize);

/// An alternating cycle: `a_edges[i]` belongs to parent A only, `b_edges[i]`
/// to parent B only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbCycle {
    pub a_edges: Vec<Edge>,
    pub b_edges: Vec<Edge>,
}

impl AbCycle {
    fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.a_edges
            .iter()
            .flat_map(|&(u, v)| [u, v])
            .filter(|&x| x != DEPOT)
    }
}

fn edge_counts(solution: &Solution, counts: &mut HashMap<Edge, i32>, sign: i32) {
    for route in solution.routes() {
        let mut prev = DEPOT;
        for &c in route.customers().iter().chain(std::iter::once(&DEPOT)) {
            *counts.entry((prev, c)).or_insert(0) += sign;
            prev = c;
        }
    }
}

/// Multiset of edges of `solution`.
pub fn edges(solution: &Solution) -> HashMap<Edge, i32> {
    let mut counts = HashMap::new();
    edge_counts(solution, &mut counts, 1);
    counts
}

/// Decomposes the symmetric difference of the two parents' edge multisets into
/// AB-cycles by alternately following an A-edge forward and a B-edge backward.
pub fn ab_cycles<R: Rng + ?Sized>(a: &Solution, b: &Solution, n: usize, rng: &mut R) -> Vec<AbCycle> {
    let mut counts = HashMap::new();
    edge_counts(a, &mut counts, 1);
    edge_counts(b, &mut counts, -1);

    // a_out[u]: targets of unused A-only edges leaving u; b_in[v]: sources of unused B-only edges entering v
    let mut a_out: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut b_in: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut sorted: Vec<(Edge, i32)> = counts.into_iter().filter(|&(_, c)| c != 0).collect();
    sorted.sort_unstable();
    let mut remaining_a = 0usize;
    for ((u, v), c) in sorted {
        for _ in 0..c.unsigned_abs() {
            if c > 0 {
                a_out[u].push(v);
                remaining_a += 1;
            } else {
                b_in[v].push(u);
            }
        }
    }

    let take = |list: &mut Vec<usize>, rng: &mut R| -> usize {
        let i = rng.gen_range(0..list.len());
        list.swap_remove(i)
    };

    let mut cycles = Vec::new();
    // path[k] for even k is a vertex about to leave along an A-edge
    let mut path: Vec<usize> = Vec::new();
    let mut even_at: Vec<Option<usize>> = vec![None; n + 1];
    let mut depot_even: Vec<usize> = Vec::new();

    while remaining_a > 0 || !path.is_empty() {
        let current = match path.last() {
            Some(&x) if !a_out[x].is_empty() => x,
            Some(_) => {
                // only the start vertex can be left without an outgoing edge
                debug_assert_eq!(path.len(), 1);
                let x = path.pop().unwrap();
                if x == DEPOT {
                    depot_even.clear();
                } else {
                    even_at[x] = None;
                }
                continue;
            }
            None => {
                let starts: Vec<usize> = (0..=n).filter(|&u| !a_out[u].is_empty()).collect();
                let x = starts[rng.gen_range(0..starts.len())];
                path.push(x);
                if x == DEPOT {
                    depot_even.push(0);
                } else {
                    even_at[x] = Some(0);
                }
                x
            }
        };

        let v = take(&mut a_out[current], rng);
        remaining_a -= 1;
        path.push(v);
        let w = take(&mut b_in[v], rng);

        let close_at = if w == DEPOT {
            depot_even.last().copied()
        } else {
            even_at[w]
        };
        match close_at {
            Some(i) => {
                let seq: Vec<usize> = path.drain(i..).collect();
                // seq = [w, v1, w1, v2, .., vk] with w = seq[0]; B-edges point back
                let mut a_edges = Vec::new();
                let mut b_edges = Vec::new();
                for k in (0..seq.len()).step_by(2) {
                    let from = seq[k];
                    let to = seq[k + 1];
                    a_edges.push((from, to));
                    let back = if k + 2 < seq.len() { seq[k + 2] } else { w };
                    b_edges.push((back, to));
                }
                for (k, &x) in seq.iter().enumerate().step_by(2) {
                    if k == 0 {
                        continue;
                    }
                    if x == DEPOT {
                        depot_even.pop();
                    } else {
                        even_at[x] = None;
                    }
                }
                path.push(w);
                cycles.push(AbCycle { a_edges, b_edges });
            }
            None => {
                let idx = path.len();
                path.push(w);
                if w == DEPOT {
                    depot_even.push(idx);
                } else {
                    even_at[w] = Some(idx);
                }
            }
        }
    }
    cycles
}

#[derive(Debug, Clone)]
pub struct Crossover {
    pub child: Solution,
    /// The parents share every edge; `child` is a copy of A.
    pub noop: bool,
    pub strategy: Strategy,
    /// Edges added while merging detached subtours.
    pub reconnections: Vec<Edge>,
}

impl Crossover {
    /// Routes of the child that do not appear verbatim in `parent`.
    pub fn modified_routes(&self, parent: &Solution) -> Vec<usize> {
        modified_routes(&self.child, parent)
    }
}

pub fn modified_routes(child: &Solution, parent: &Solution) -> Vec<usize> {
    let known: HashSet<&[usize]> = parent.routes().iter().map(|r| r.customers()).collect();
    (0..child.route_count())
        .filter(|&r| !known.contains(child.route(r).customers()))
        .collect()
}

/// Builds a child from the edges of `a` with one E-set of AB-cycles swapped
/// for the corresponding edges of `b`. Detached subtours are spliced into the
/// route where they add the least distance. The child may violate capacity
/// and time windows.
pub fn eax_crossover<R: Rng + ?Sized>(
    a: &Solution,
    b: &Solution,
    instance: &Instance,
    strategy: Strategy,
    rng: &mut R,
) -> Crossover {
    let n = instance.customer_count();
    let cycles = ab_cycles(a, b, n, rng);
    if cycles.is_empty() {
        return Crossover {
            child: a.clone(),
            noop: true,
            strategy,
            reconnections: Vec::new(),
        };
    }

    let pick = rng.gen_range(0..cycles.len());
    let mut chosen = vec![pick];
    if strategy == Strategy::Block {
        let seed: HashSet<usize> = cycles[pick].customers().collect();
        chosen.extend(
            (0..cycles.len()).filter(|&i| i != pick && cycles[i].customers().any(|c| seed.contains(&c))),
        );
    }

    const NONE: usize = usize::MAX;
    let mut succ = vec![NONE; n + 1];
    let mut depot_out: Vec<usize> = Vec::new();
    for route in a.routes() {
        let cs = route.customers();
        depot_out.push(cs[0]);
        for w in cs.windows(2) {
            succ[w[0]] = w[1];
        }
        succ[*cs.last().unwrap()] = DEPOT;
    }
    for &i in &chosen {
        for &(u, v) in &cycles[i].a_edges {
            if u == DEPOT {
                let pos = depot_out.iter().position(|&x| x == v).expect("A edge present");
                depot_out.swap_remove(pos);
            } else {
                succ[u] = NONE;
            }
        }
    }
    for &i in &chosen {
        for &(u, v) in &cycles[i].b_edges {
            if u == DEPOT {
                depot_out.push(v);
            } else {
                debug_assert_eq!(succ[u], NONE);
                succ[u] = v;
            }
        }
    }
    depot_out.sort_unstable();

    let mut seen = vec![false; n + 1];
    let mut routes: Vec<Vec<usize>> = Vec::with_capacity(depot_out.len());
    for &first in &depot_out {
        let mut seq = Vec::new();
        let mut c = first;
        while c != DEPOT {
            seen[c] = true;
            seq.push(c);
            c = succ[c];
        }
        routes.push(seq);
    }

    let mut subtours = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut tour = Vec::new();
        let mut c = start;
        while !seen[c] {
            seen[c] = true;
            tour.push(c);
            c = succ[c];
        }
        subtours.push(tour);
    }

    let mut reconnections = Vec::new();
    for tour in subtours {
        merge_subtour(instance, &mut routes, &tour, &mut reconnections);
    }

    Crossover {
        child: Solution::from_routes(instance, routes),
        noop: false,
        strategy,
        reconnections,
    }
}

/// Inserts a closed tour into the route edge `(x, y)` and tour edge
/// `(c_k, c_k+1)` minimizing `c(x, c_k+1) + c(c_k, y) - c(x, y) - c(c_k, c_k+1)`.
fn merge_subtour(instance: &Instance, routes: &mut [Vec<usize>], tour: &[usize], added: &mut Vec<Edge>) {
    let m = tour.len();
    let mut best = (f64::INFINITY, 0, 0, 0);
    for (r, seq) in routes.iter().enumerate() {
        for gap in 0..=seq.len() {
            let x = if gap == 0 { DEPOT } else { seq[gap - 1] };
            let y = if gap == seq.len() { DEPOT } else { seq[gap] };
            for k in 0..m {
                let ck = tour[k];
                let next = tour[(k + 1) % m];
                let cost = instance.dist(x, next) + instance.dist(ck, y)
                    - instance.dist(x, y)
                    - if m > 1 { instance.dist(ck, next) } else { 0.0 };
                if cost < best.0 {
                    best = (cost, r, gap, k);
                }
            }
        }
    }
    let (_, r, gap, k) = best;
    let seq = &mut routes[r];
    let x = if gap == 0 { DEPOT } else { seq[gap - 1] };
    let y = if gap == seq.len() { DEPOT } else { seq[gap] };
    let opened: Vec<usize> = (1..=m).map(|i| tour[(k + i) % m]).collect();
    added.push((x, opened[0]));
    added.push((*opened.last().unwrap(), y));
    seq.splice(gap..gap, opened);
}

/// Drives a crossover child to zero penalty with the same descent used while
/// squeezing. Routes left empty are dropped.
pub fn repair<R: Rng + ?Sized>(
    child: &mut Solution,
    instance: &Instance,
    neighbors: &Neighborhood,
    budget: &RepairBudget,
    rng: &mut R,
) -> bool {
    child.drop_empty_routes();
    moves::restore_feasibility(child, instance, neighbors, budget, rng)
}
