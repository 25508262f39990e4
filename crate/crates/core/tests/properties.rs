mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use vrptw_core::eax::{self, Strategy};
use vrptw_core::io::{parse_instance, validate_solution_file, write_instance, write_solution};
use vrptw_core::memetic::fitness;
use vrptw_core::moves::{
    apply_move, evaluate_slot, local_search, perturb, Mode, Neighborhood, NeighborhoodScope, RepairBudget, SLOTS,
};
use vrptw_core::oracle::oracle_solve;
use vrptw_core::parallel::{CooperationConfig, DeltaSchedule, FrequencyMode};
use vrptw_core::rng::{stream_rng, SolverRng};
use vrptw_core::route_min::{EjectionPool, RemoveRouteParams, RouteMinimizer};
use vrptw_core::{check_routes, compare_cost, is_feasible, Cost, Instance, Solution};

use common::{naive_valid, permutation_oracle, route_len, tiny_instance};

fn random_partition(inst: &Instance, rng: &mut SolverRng) -> Vec<Vec<usize>> {
    let mut ids: Vec<usize> = inst.customers().collect();
    ids.shuffle(rng);
    let mut routes = Vec::new();
    let mut rest = &ids[..];
    while !rest.is_empty() {
        let take = rng.gen_range(1..=rest.len().min(4));
        routes.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    routes
}

fn feasible_start(inst: &Instance, seed: u64) -> Solution {
    let nbrs = Neighborhood::new(inst, 0.6);
    let mut engine = RouteMinimizer::new(inst, &nbrs, RemoveRouteParams::default(), stream_rng(seed, 0));
    let mut sol = Solution::singletons(inst);
    for _ in 0..inst.customer_count() / 2 {
        sol = engine.remove_route(&sol, None).solution;
    }
    sol
}

fn assert_cache(inst: &Instance, sol: &Solution) {
    let fresh = sol.recomputed_cost(inst);
    assert_eq!(sol.route_count(), fresh.routes);
    assert!((sol.distance() - fresh.distance).abs() <= 1e-9);
    let direct: f64 = sol.to_sequences().iter().map(|r| route_len(inst, r)).sum();
    assert!((sol.distance() - direct).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compare_cost_matches_tuple_order(
        a in (0usize..5, 0.0f64..100.0),
        b in (0usize..5, 0.0f64..100.0),
        c in (0usize..5, 0.0f64..100.0),
    ) {
        let (x, y, z) = (Cost::new(a.0, a.1), Cost::new(b.0, b.1), Cost::new(c.0, c.1));
        prop_assert_eq!(compare_cost(&x, &y), a.partial_cmp(&b).unwrap());
        prop_assert_eq!(compare_cost(&x, &y), compare_cost(&y, &x).reverse());
        if compare_cost(&x, &y).is_le() && compare_cost(&y, &z).is_le() {
            prop_assert!(compare_cost(&x, &z).is_le());
        }
    }

    #[test]
    fn validator_agrees_with_naive_sweep(seed in any::<u64>(), n in 2usize..10) {
        let inst = tiny_instance(seed, n);
        let mut rng = stream_rng(seed, 1);
        let mut routes = random_partition(&inst, &mut rng);
        if rng.gen_bool(0.2) {
            routes.pop();
        }
        let complete = routes.iter().map(Vec::len).sum::<usize>() == n;
        prop_assert_eq!(check_routes(&inst, &routes).is_feasible(), complete && naive_valid(&inst, &routes, true));
    }

    #[test]
    fn cost_cache_follows_mutations(seed in any::<u64>(), n in 4usize..14, steps in 1usize..30) {
        let inst = tiny_instance(seed, n);
        let mut rng = stream_rng(seed, 2);
        let mut sol = Solution::from_routes(&inst, random_partition(&inst, &mut rng));
        let nbrs = Neighborhood::new(&inst, 1.0);
        for _ in 0..steps {
            match rng.gen_range(0..3) {
                0 => {
                    let c = rng.gen_range(1..=n);
                    if sol.remove_customer(&inst, c).is_some() {
                        sol.drop_empty_routes();
                        if sol.route_count() == 0 {
                            sol.push_route(&inst, vec![c]);
                        } else {
                            let r = rng.gen_range(0..sol.route_count());
                            let gap = rng.gen_range(0..=sol.route(r).len());
                            sol.insert(&inst, r, gap, c);
                        }
                    }
                }
                1 => {
                    let u = rng.gen_range(1..=n);
                    let w = nbrs.of(u)[rng.gen_range(0..nbrs.of(u).len())];
                    if let Some(mv) = evaluate_slot(&sol, &inst, u, w, rng.gen_range(0..SLOTS), Mode::Penalized) {
                        apply_move(&mut sol, &inst, &mv);
                    }
                }
                _ => {
                    let r = rng.gen_range(0..sol.route_count());
                    let mut seq = sol.route(r).customers().to_vec();
                    seq.reverse();
                    sol.set_route(&inst, r, seq);
                }
            }
            assert_cache(&inst, &sol);
            prop_assert!(sol.is_complete());
        }
    }

    #[test]
    fn move_deltas_match_recomputation(seed in any::<u64>(), n in 4usize..14) {
        let inst = tiny_instance(seed, n);
        let mut rng = stream_rng(seed, 3);
        let sol = Solution::from_routes(&inst, random_partition(&inst, &mut rng));
        let nbrs = Neighborhood::new(&inst, 1.0);
        for u in inst.customers() {
            for &w in nbrs.of(u) {
                for slot in 0..SLOTS {
                    let Some(mv) = evaluate_slot(&sol, &inst, u, w, slot, Mode::Penalized) else { continue };
                    let mut after = sol.clone();
                    apply_move(&mut after, &inst, &mv);
                    prop_assert_eq!(after.route_count(), sol.route_count());
                    let dd = after.distance() - sol.distance();
                    let dp = after.penalty() - sol.penalty();
                    prop_assert!((dd - mv.delta_distance).abs() <= 1e-9, "slot {} distance {} vs {}", slot, dd, mv.delta_distance);
                    prop_assert!((dp - mv.delta_penalty).abs() <= 1e-9, "slot {} penalty {} vs {}", slot, dp, mv.delta_penalty);
                    let naive = vrptw_core::feasibility::naive_penalty(&inst, &after.to_sequences());
                    prop_assert!((after.penalty() - naive).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn perturb_and_local_search_keep_feasibility(seed in any::<u64>(), n in 4usize..12, k in 0usize..60) {
        let inst = tiny_instance(seed, n);
        let nbrs = Neighborhood::new(&inst, 0.6);
        let mut sol = feasible_start(&inst, seed);
        let k0 = sol.route_count();
        let mut rng = stream_rng(seed, 4);
        perturb(&mut sol, &inst, &nbrs, k, &mut rng);
        prop_assert!(naive_valid(&inst, &sol.to_sequences(), true));
        let before = sol.distance();
        local_search(&mut sol, &inst, &NeighborhoodScope::all(&nbrs), 200, &mut rng);
        prop_assert!(naive_valid(&inst, &sol.to_sequences(), true));
        prop_assert!(sol.distance() <= before + 1e-9);
        prop_assert_eq!(sol.route_count(), k0);
    }

    #[test]
    fn remove_route_success_and_determinism(seed in any::<u64>(), n in 3usize..12) {
        let inst = tiny_instance(seed, n);
        let nbrs = Neighborhood::new(&inst, 0.6);
        let start = Solution::singletons(&inst);
        let run = || {
            let mut e = RouteMinimizer::new(&inst, &nbrs, RemoveRouteParams::default(), stream_rng(seed, 5));
            e.remove_route(&start, None)
        };
        let a = run();
        let b = run();
        prop_assert_eq!(a.solution.to_sequences(), b.solution.to_sequences());
        if a.succeeded {
            prop_assert_eq!(a.solution.route_count(), n - 1);
            prop_assert!(naive_valid(&inst, &a.solution.to_sequences(), true));
        } else {
            prop_assert_eq!(a.solution.to_sequences(), start.to_sequences());
        }
    }

    #[test]
    fn pool_is_lifo(ops in prop::collection::vec(prop::option::of(1usize..20), 1..60)) {
        let mut pool = EjectionPool::new(20);
        let mut model: Vec<usize> = Vec::new();
        for op in ops {
            match op {
                Some(c) if !model.contains(&c) => {
                    pool.push(c);
                    model.push(c);
                }
                Some(_) => {}
                None => prop_assert_eq!(pool.pop(), model.pop()),
            }
            prop_assert_eq!(pool.len(), model.len());
        }
    }

    #[test]
    fn crossover_children_are_permutations(seed in any::<u64>(), n in 4usize..14, block in any::<bool>()) {
        let inst = tiny_instance(seed, n);
        let nbrs = Neighborhood::new(&inst, 0.6);
        let a = feasible_start(&inst, seed);
        let mut b = a.clone();
        let mut rng = stream_rng(seed, 6);
        perturb(&mut b, &inst, &nbrs, 30, &mut rng);
        let strategy = if block { Strategy::Block } else { Strategy::Single };
        let mut child = eax::eax_crossover(&a, &b, &inst, strategy, &mut rng).child;
        prop_assert!(child.is_complete());
        let mut seen: Vec<usize> = child.to_sequences().concat();
        seen.sort();
        prop_assert_eq!(seen, (1..=n).collect::<Vec<_>>());
        if eax::repair(&mut child, &inst, &nbrs, &RepairBudget::default(), &mut rng) {
            prop_assert!(naive_valid(&inst, &child.to_sequences(), true));
        }
    }

    #[test]
    fn delta_respects_floor(avgs in prop::collection::vec(0.0f64..5.0, 1..80), size in 1usize..1200, mode in 0usize..4) {
        let mode = [FrequencyMode::Constant, FrequencyMode::Rare, FrequencyMode::Frequent, FrequencyMode::Adaptive][mode];
        let cfg = CooperationConfig { mode, min_delta: 2, ..CooperationConfig::for_size(size) };
        let mut s = DeltaSchedule::new(&cfg, size);
        prop_assert!(s.delta >= 2);
        for a in avgs {
            prop_assert!(s.next_delta(&cfg, a) >= 2);
        }
    }

    #[test]
    fn fitness_argmax_is_distance_argmin(seed in any::<u64>(), n in 3usize..10, m in 2usize..8) {
        let inst = tiny_instance(seed, n);
        let mut rng = stream_rng(seed, 7);
        let sols: Vec<Solution> = (0..m).map(|_| Solution::from_routes(&inst, random_partition(&inst, &mut rng))).collect();
        let by_fit = sols.iter().map(fitness).fold(f64::NEG_INFINITY, f64::max);
        let by_dist = sols.iter().map(Solution::distance).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(by_fit, -by_dist);
    }
}

#[test]
fn io_roundtrip_on_fixtures() {
    for entry in walk(&common::fixture_dir()) {
        let text = std::fs::read_to_string(&entry).unwrap();
        let a = parse_instance(&text).unwrap();
        let b = parse_instance(&write_instance(&a)).unwrap();
        assert_eq!(write_instance(&a), write_instance(&b), "{}", entry.display());
        assert_eq!(a.nodes(), b.nodes());
    }
}

#[test]
fn solution_file_validation_agrees_with_core() {
    for rel in ["small/tiny_6.txt", "small/mix_25.txt", "small/rnd_40.txt"] {
        let inst = common::load(rel);
        let mut rng = stream_rng(11, 0);
        let nbrs = Neighborhood::new(&inst, 0.6);
        let good = feasible_start(&inst, 3);
        for i in 0..100 {
            let sol = if i % 2 == 0 {
                Solution::from_routes(&inst, random_partition(&inst, &mut rng))
            } else {
                let mut s = good.clone();
                perturb(&mut s, &inst, &nbrs, 10, &mut rng);
                s
            };
            let core = is_feasible(&sol, &inst).is_feasible();
            let doc = write_solution(&sol, &inst).unwrap_or_else(|_| render(&inst, &sol));
            let report = validate_solution_file(&inst, &doc).unwrap();
            assert_eq!(report.is_valid(), core, "{rel} case {i}");
        }
    }
}

#[test]
fn oracle_matches_permutation_enumerator() {
    for seed in 0..50 {
        let inst = tiny_instance(20_000 + seed, 2 + seed as usize % 7);
        let a = oracle_solve(&inst, 9).unwrap();
        let b = permutation_oracle(&inst);
        assert_eq!(a.cost.routes, b.0, "seed {seed}");
        assert!((a.cost.distance - b.1).abs() <= 1e-9, "seed {seed}");
        assert!(naive_valid(&inst, &a.routes, true));
    }
}

fn render(inst: &Instance, sol: &Solution) -> String {
    let mut out = format!("Instance: {}\n", inst.name);
    for (i, r) in sol.to_sequences().iter().enumerate() {
        let ids: Vec<String> = r.iter().map(|c| c.to_string()).collect();
        out += &format!("Route {} : {}\n", i + 1, ids.join(" "));
    }
    out + &format!("Vehicles: {}\nDistance: {:.2}\n", sol.route_count(), sol.distance())
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else if p.extension().is_some_and(|x| x == "txt") {
            out.push(p);
        }
    }
    out
}
