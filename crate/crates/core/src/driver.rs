//! End-to-end runs: both phases with statistics, and the PMA speedup bench.

use std::io::{self, Write};
use std::time::Duration;

use rand::Rng;
use serde::Serialize;
use web_time::Instant;

use crate::config::{ConfigError, Phase, RunConfig};
use crate::feasibility::{check_routes, Violation};
use crate::instance::Instance;
use crate::memetic::{build_initial_population, MaError, MaParams, Population};
use crate::moves::Neighborhood;
use crate::parallel::{run_pha_from, run_pma, CooperationError};
use crate::rng::stream_rng;
use crate::route_min::{RemoveRouteParams, RouteMinimizer};
use crate::solution::{Cost, Solution};
use crate::stats::{StatsRecord, StatsWriter};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cooperation(#[from] CooperationError),
    #[error(transparent)]
    Memetic(#[from] MaError),
    #[error("the starting solution is not complete and feasible")]
    BadInitial,
    #[error("self-check failed: {0:?}")]
    SelfCheck(Vec<Violation>),
    #[error("cannot write statistics: {0}")]
    Stats(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Solution,
    pub routes_phase: Option<Cost>,
    pub generations: Option<usize>,
    pub wall_time: f64,
}

fn master_for(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, u64::MAX - stream).gen()
}

/// Repeated route removal from singletons until `target` routes, the
/// deadline, or `patience` consecutive failures.
pub fn minimize_routes_to(
    instance: &Instance,
    neighbors: &Neighborhood,
    params: &RemoveRouteParams,
    seed: u64,
    target: usize,
    deadline: Instant,
    patience: usize,
) -> Solution {
    let mut engine = RouteMinimizer::new(instance, neighbors, params.clone(), stream_rng(seed, 0));
    let mut sol = Solution::singletons(instance);
    let mut failures = 0;
    while sol.route_count() > target && failures < patience && Instant::now() < deadline {
        let out = engine.remove_route(&sol, Some(deadline));
        if out.succeeded {
            failures = 0;
        } else {
            failures += 1;
        }
        sol = out.solution;
    }
    sol
}

fn self_check(instance: &Instance, solution: &Solution) -> Result<(), SolveError> {
    let report = check_routes(instance, &solution.to_sequences());
    if report.is_feasible() {
        Ok(())
    } else {
        Err(SolveError::SelfCheck(report.violations))
    }
}

/// Builds the distance-phase population around `seed_solution`.
pub fn initial_population(
    instance: &Instance,
    neighbors: &Neighborhood,
    config: &RunConfig,
    seed_solution: Solution,
) -> Result<Population, MaError> {
    let ma = config.ma_params();
    let rr = config.remove_route_params();
    let target = seed_solution.route_count();
    let base = master_for(config.seed, 2);
    let mut calls = 0u64;
    let generate = |deadline: Instant| {
        calls += 1;
        let s = minimize_routes_to(instance, neighbors, &rr, base.wrapping_add(calls), target, deadline, 3);
        (s.route_count() == target).then_some(s)
    };
    build_initial_population(
        instance,
        neighbors,
        vec![seed_solution],
        target,
        ma.population,
        Duration::from_secs_f64(ma.init_time_limit),
        &ma,
        generate,
        &mut stream_rng(config.seed, u64::MAX - 3),
    )
}

/// Runs the configured phases. `initial` seeds the distance phase; without it
/// route minimization runs first.
pub fn solve<W: Write>(
    instance: &Instance,
    config: &RunConfig,
    initial: Option<Solution>,
    stats: &mut StatsWriter<W>,
) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let started = Instant::now();
    let rr = config.remove_route_params();
    let ma = config.ma_params();

    if let Some(s) = &initial {
        if !s.is_complete() || !check_routes(instance, &s.to_sequences()).is_feasible() {
            return Err(SolveError::BadInitial);
        }
    }

    let mut routes_phase = None;
    let mut solution = match (config.phase, initial) {
        (Phase::Distance, Some(s)) => s,
        (_, initial) => {
            let nbrs = Neighborhood::new(instance, rr.mu);
            let start = initial.unwrap_or_else(|| Solution::singletons(instance));
            let out = run_pha_from(instance, &nbrs, &config.pha_config(), config.seed, None, start)?;
            for r in &out.records {
                stats.emit(StatsRecord::Cooperation {
                    t: r.elapsed,
                    component: r.component,
                    phase: r.phase,
                    routes: r.cost.routes,
                    distance: r.cost.distance,
                    delta: r.delta,
                    pool_size: r.pool_size,
                })?;
            }
            routes_phase = Some(out.best.cost());
            out.best
        }
    };
    self_check(instance, &solution)?;

    let mut generations = None;
    if config.phase != Phase::Routes {
        let offset = started.elapsed().as_secs_f64();
        let nbrs = Neighborhood::new(instance, ma.mu);
        let population = initial_population(instance, &nbrs, config, solution.clone())?;
        let out = run_pma(instance, &nbrs, population, &ma, config.threads, master_for(config.seed, 1))?;
        for g in &out.history {
            stats.emit(StatsRecord::Generation {
                t: offset + g.elapsed,
                generation: g.generation,
                routes: g.best.routes,
                distance: g.best.distance,
                stagnation: g.stagnation,
                replaced: g.replaced,
            })?;
        }
        generations = Some(out.generations);
        solution = out.best;
        self_check(instance, &solution)?;
    }

    let wall_time = started.elapsed().as_secs_f64();
    stats.emit(StatsRecord::Summary {
        t: wall_time,
        routes: solution.route_count(),
        distance: solution.distance(),
        wall_time,
        threads: config.threads,
    })?;
    Ok(SolveReport {
        solution,
        routes_phase,
        generations,
        wall_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCell {
    pub threads: usize,
    pub median_time: f64,
    pub speedup: Option<f64>,
    pub median_distance: f64,
    pub routes: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Times the parallel memetic algorithm for each thread count. Repeat `r`
/// uses master seed `seed + r` for every thread count; the population is
/// built once per repeat outside the timed region.
pub fn bench<W: Write>(
    instance: &Instance,
    config: &RunConfig,
    thread_counts: &[usize],
    repeats: usize,
    stats: &mut StatsWriter<W>,
) -> Result<Vec<BenchCell>, SolveError> {
    config.validate()?;
    let ma: MaParams = config.ma_params();
    let nbrs = Neighborhood::new(instance, ma.mu);
    let phase_one = {
        let rr_nbrs = Neighborhood::new(instance, config.remove_route_params().mu);
        run_pha_from(
            instance,
            &rr_nbrs,
            &config.pha_config(),
            config.seed,
            None,
            Solution::singletons(instance),
        )?
        .best
    };
    let populations: Vec<Population> = (0..repeats)
        .map(|r| {
            let cfg = RunConfig {
                seed: config.seed.wrapping_add(r as u64),
                ..config.clone()
            };
            initial_population(instance, &nbrs, &cfg, phase_one.clone())
        })
        .collect::<Result<_, _>>()?;

    let mut times: Vec<Vec<f64>> = vec![Vec::new(); thread_counts.len()];
    let mut dists: Vec<Vec<f64>> = vec![Vec::new(); thread_counts.len()];
    for (r, pop) in populations.iter().enumerate() {
        for (i, &p) in thread_counts.iter().enumerate() {
            let t = Instant::now();
            let out = run_pma(instance, &nbrs, pop.clone(), &ma, p, config.seed.wrapping_add(r as u64))?;
            let wall = t.elapsed().as_secs_f64();
            stats.emit(StatsRecord::BenchRun {
                threads: p,
                repeat: r,
                wall_time: wall,
                routes: out.best.route_count(),
                distance: out.best.distance(),
                generations: out.generations,
            })?;
            times[i].push(wall);
            dists[i].push(out.best.distance());
        }
    }

    let medians: Vec<f64> = times.iter_mut().map(|t| median(t)).collect();
    let base = thread_counts.iter().position(|&p| p == 1).map(|i| medians[i]);
    let mut cells = Vec::new();
    for (i, &p) in thread_counts.iter().enumerate() {
        let cell = BenchCell {
            threads: p,
            median_time: medians[i],
            speedup: base.map(|b| if medians[i] > 0.0 { b / medians[i] } else { 1.0 }),
            median_distance: median(&mut dists[i]),
            routes: phase_one.route_count(),
        };
        stats.emit(StatsRecord::Speedup {
            threads: p,
            median_time: cell.median_time,
            speedup: cell.speedup,
            median_distance: cell.median_distance,
        })?;
        cells.push(cell);
    }
    Ok(cells)
}
