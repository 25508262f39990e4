use crate::instance::Instance;
use crate::moves::{self, Neighborhood, NeighborhoodScope};
use crate::rng::stream_rng;
use crate::route_min::{RemoveRouteParams, RouteMinimizer};
use crate::solution::Solution;

/// Singletons after `calls` route removals and a local search pass.
pub(crate) fn reduced(instance: &Instance, neighbors: &Neighborhood, seed: u64, calls: usize) -> Solution {
    let mut engine = RouteMinimizer::new(instance, neighbors, RemoveRouteParams::default(), stream_rng(seed, 0));
    let mut sol = Solution::singletons(instance);
    for _ in 0..calls {
        sol = engine.remove_route(&sol, None).solution;
    }
    moves::local_search(
        &mut sol,
        instance,
        &NeighborhoodScope::all(neighbors),
        1000,
        &mut stream_rng(seed, 1),
    );
    sol
}
