//! Exhaustive solver for tiny instances.

use crate::instance::{Instance, DEPOT, EPS};
use crate::solution::Cost;

pub const DEFAULT_MAX_CUSTOMERS: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance has {customers} customers; the exhaustive oracle accepts at most {max}")]
    TooLarge { customers: usize, max: usize },
    #[error("no feasible solution exists")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub cost: Cost,
    pub routes: Vec<Vec<usize>>,
}

struct Search<'a> {
    inst: &'a Instance,
    ids: Vec<usize>,
    path: Vec<usize>,
    /// Shortest feasible route per customer subset, with its order.
    best: Vec<Option<(f64, Vec<usize>)>>,
}

impl Search<'_> {
    fn extend(&mut self, mask: usize, last: usize, time: f64, load: u32, dist: f64) {
        let back = time + self.inst.node(last).service + self.inst.dist(last, DEPOT);
        if mask != 0 && back <= self.inst.depot().due + EPS {
            let total = dist + self.inst.dist(last, DEPOT);
            if self.best[mask].as_ref().is_none_or(|(d, _)| total < *d) {
                self.best[mask] = Some((total, self.path.clone()));
            }
        }
        for bit in 0..self.ids.len() {
            if mask & (1 << bit) != 0 {
                continue;
            }
            let c = self.ids[bit];
            let node = self.inst.node(c);
            let load = load + node.demand;
            if load > self.inst.capacity {
                continue;
            }
            let leave = if mask == 0 { self.inst.depot().ready } else { time + self.inst.node(last).service };
            let arrival = leave + self.inst.dist(last, c);
            if arrival > node.due + EPS {
                continue;
            }
            self.path.push(c);
            self.extend(mask | (1 << bit), c, arrival.max(node.ready), load, dist + self.inst.dist(last, c));
            self.path.pop();
        }
    }
}

/// Lexicographically minimal (routes, distance) over all partitions of the
/// customers into feasible ordered routes.
pub fn oracle_solve(instance: &Instance, max_customers: usize) -> Result<OracleSolution, OracleError> {
    let n = instance.customer_count();
    if n > max_customers {
        return Err(OracleError::TooLarge {
            customers: n,
            max: max_customers,
        });
    }
    let full = (1usize << n) - 1;
    let mut search = Search {
        inst: instance,
        ids: instance.customers().collect(),
        path: Vec::with_capacity(n),
        best: vec![None; full + 1],
    };
    search.extend(0, DEPOT, 0.0, 0, 0.0);

    // partition DP; each block contains the lowest unassigned customer
    let mut table: Vec<Option<(usize, f64, usize)>> = vec![None; full + 1];
    table[0] = Some((0, 0.0, 0));
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        let mut choice: Option<(usize, f64, usize)> = None;
        loop {
            let block = sub | low;
            if let (Some((d, _)), Some((k, t, _))) = (&search.best[block], table[mask ^ block]) {
                let cand = (k + 1, t + d, block);
                if choice.is_none_or(|(bk, bt, _)| (cand.0, cand.1) < (bk, bt)) {
                    choice = Some(cand);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        table[mask] = choice;
    }

    let (k, t, _) = table[full].ok_or(OracleError::Infeasible)?;
    let mut routes = Vec::with_capacity(k);
    let mut mask = full;
    while mask != 0 {
        let (_, _, block) = table[mask].expect("reconstructible");
        routes.push(search.best[block].as_ref().expect("feasible block").1.clone());
        mask ^= block;
    }
    Ok(OracleSolution {
        cost: Cost::new(k, t),
        routes,
    })
}
