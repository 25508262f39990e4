//! Cooperating components: the parallel route-minimization team and the
//! parallel child generation of the memetic algorithm.

use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::instance::Instance;
use crate::memetic::{
    best_child, check_termination, fitness, form_next_population, pair_parents, pair_rng, pairing_rng,
    GenerationRecord, MaError, MaOutcome, MaParams, Population,
};
use crate::moves::Neighborhood;
use crate::rng::{stream_rng, SolverRng};
use crate::route_min::{RemoveRouteParams, RouteMinimizer};
use crate::solution::{compare_cost, Cost, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Chain,
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    Constant,
    Rare,
    Frequent,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CooperationConfig {
    pub scheme: Scheme,
    /// Probability of taking a better neighbor solution in the cyclic scheme.
    pub acceptance: f64,
    pub mode: FrequencyMode,
    pub rare_factor: u32,
    pub frequent_factor: u32,
    pub adaptive_factor: u32,
    pub update_factor: u32,
    /// Cooperation phases between updates of δ.
    pub update_frequency: u32,
    pub min_delta: usize,
}

impl Default for CooperationConfig {
    fn default() -> Self {
        Self::for_size(200)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CooperationError {
    #[error("acceptance probability {0} must lie in (0, 1)")]
    Acceptance(f64),
    #[error("parameter `{0}` must be positive")]
    NotPositive(&'static str),
    #[error("frequent factor {frequent} must exceed rare factor {rare}")]
    FactorOrder { frequent: u32, rare: u32 },
    #[error("at least one component is required")]
    NoComponents,
}

impl CooperationConfig {
    /// Frequency settings for an instance size, using the nearest tabulated
    /// size (ties toward the smaller one).
    pub fn for_size(customers: usize) -> Self {
        const ROWS: [usize; 5] = [200, 400, 600, 800, 1000];
        let row = ROWS
            .iter()
            .copied()
            .min_by_key(|&r| (r.abs_diff(customers), r))
            .unwrap();
        let base = CooperationConfig {
            scheme: Scheme::Chain,
            acceptance: 0.9,
            mode: FrequencyMode::Frequent,
            rare_factor: 5,
            frequent_factor: 10,
            adaptive_factor: 10,
            update_factor: 2,
            update_frequency: 4,
            min_delta: 1,
        };
        match row {
            200 | 400 => base,
            600 => CooperationConfig {
                mode: FrequencyMode::Adaptive,
                update_frequency: 1,
                ..base
            },
            _ => CooperationConfig {
                mode: FrequencyMode::Rare,
                update_frequency: 3,
                ..base
            },
        }
    }

    pub fn factor(&self) -> u32 {
        match self.mode {
            FrequencyMode::Rare | FrequencyMode::Constant => self.rare_factor,
            FrequencyMode::Frequent => self.frequent_factor,
            FrequencyMode::Adaptive => self.adaptive_factor,
        }
    }

    pub fn validate(&self) -> Result<(), CooperationError> {
        if !(self.acceptance > 0.0 && self.acceptance < 1.0) {
            return Err(CooperationError::Acceptance(self.acceptance));
        }
        for (name, v) in [
            ("rare_factor", self.rare_factor as usize),
            ("frequent_factor", self.frequent_factor as usize),
            ("adaptive_factor", self.adaptive_factor as usize),
            ("update_factor", self.update_factor as usize),
            ("update_frequency", self.update_frequency as usize),
            ("min_delta", self.min_delta),
        ] {
            if v == 0 {
                return Err(CooperationError::NotPositive(name));
            }
        }
        if self.frequent_factor <= self.rare_factor {
            return Err(CooperationError::FactorOrder {
                frequent: self.frequent_factor,
                rare: self.rare_factor,
            });
        }
        Ok(())
    }
}

/// Evolving cooperation frequency δ.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSchedule {
    pub delta: usize,
    pub phases: u64,
    pub previous_average: f64,
}

fn div_ceil_f(value: usize, by: f64) -> usize {
    (value as f64 / by).ceil() as usize
}

impl DeltaSchedule {
    pub fn new(config: &CooperationConfig, customers: usize) -> Self {
        DeltaSchedule {
            delta: customers.div_ceil(config.factor() as usize).max(config.min_delta),
            phases: 0,
            previous_average: 0.0,
        }
    }

    /// δ after one more cooperation phase; `last_average` is the mean
    /// route-removal time (seconds) since the previous phase.
    pub fn next_delta(&mut self, config: &CooperationConfig, last_average: f64) -> usize {
        self.phases += 1;
        let due = self.phases % config.update_frequency as u64 == 0;
        match config.mode {
            FrequencyMode::Constant => {}
            FrequencyMode::Rare | FrequencyMode::Frequent => {
                if due {
                    self.delta = div_ceil_f(self.delta, config.update_factor as f64).max(config.min_delta);
                }
            }
            FrequencyMode::Adaptive => {
                if due {
                    let by = if self.previous_average != 0.0 {
                        last_average / self.previous_average
                    } else {
                        config.adaptive_factor as f64
                    };
                    if by.is_finite() && by > 0.0 {
                        self.delta = div_ceil_f(self.delta, by).max(config.min_delta);
                    }
                }
            }
        }
        self.previous_average = last_average;
        self.delta
    }
}

fn better(a: &Solution, b: &Solution) -> bool {
    compare_cost(&a.cost(), &b.cost()).is_lt()
}

/// Chain exchange: slot `i` takes slot `i - 1`'s solution when it is better.
pub fn cooperate_chain(team: &mut [Solution]) {
    for i in 1..team.len() {
        if better(&team[i - 1], &team[i]) {
            team[i] = team[i - 1].clone();
        }
    }
}

/// Cyclic exchange: the chain pass accepts a better neighbor with probability
/// `acceptance`; then slot 0 takes the last slot's solution only if that has
/// fewer routes.
pub fn cooperate_cyclic<R: Rng + ?Sized>(team: &mut [Solution], acceptance: f64, rng: &mut R) {
    for i in 1..team.len() {
        if better(&team[i - 1], &team[i]) && rng.gen_bool(acceptance) {
            team[i] = team[i - 1].clone();
        }
    }
    let last = team.len() - 1;
    if last > 0 && team[0].route_count() > team[last].route_count() {
        team[0] = team[last].clone();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaConfig {
    pub threads: usize,
    pub cooperation: Option<CooperationConfig>,
    pub remove_route: RemoveRouteParams,
    /// Seconds.
    pub time_limit: f64,
    /// Cooperation phases without a fleet reduction before giving up.
    pub stall_phases: usize,
}

impl Default for PhaConfig {
    fn default() -> Self {
        PhaConfig {
            threads: 1,
            cooperation: None,
            remove_route: RemoveRouteParams::default(),
            time_limit: 1200.0,
            stall_phases: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CooperationRecord {
    pub phase: u64,
    pub component: usize,
    pub cost: Cost,
    pub delta: usize,
    pub pool_size: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct PhaOutcome {
    pub best: Solution,
    pub phases: u64,
    pub calls: u64,
    pub records: Vec<CooperationRecord>,
}

struct Component<'a> {
    solution: Solution,
    engine: RouteMinimizer<'a>,
    call_time: f64,
    calls: u64,
    pool_size: usize,
}

impl Component<'_> {
    fn work(&mut self, delta: usize, target: usize, deadline: Instant) {
        self.call_time = 0.0;
        self.calls = 0;
        for _ in 0..delta {
            if self.solution.route_count() <= target || Instant::now() >= deadline {
                break;
            }
            let t = Instant::now();
            let out = self.engine.remove_route(&self.solution, Some(deadline));
            self.call_time += t.elapsed().as_secs_f64();
            self.calls += 1;
            self.pool_size = out.pool_size;
            self.solution = out.solution;
        }
    }
}

fn team_best(slots: &[Solution]) -> &Solution {
    slots
        .iter()
        .min_by(|a, b| compare_cost(&a.cost(), &b.cost()))
        .expect("non-empty team")
}

/// Parallel route minimization from the one-customer-per-route solution.
/// Stops when a component reaches `target` routes (default `K_min`), on the
/// time limit, or after `stall_phases` phases without a fleet reduction.
pub fn run_pha(
    instance: &Instance,
    neighbors: &Neighborhood,
    config: &PhaConfig,
    master: u64,
    target: Option<usize>,
) -> Result<PhaOutcome, CooperationError> {
    run_pha_from(instance, neighbors, config, master, target, Solution::singletons(instance))
}

pub fn run_pha_from(
    instance: &Instance,
    neighbors: &Neighborhood,
    config: &PhaConfig,
    master: u64,
    target: Option<usize>,
    initial: Solution,
) -> Result<PhaOutcome, CooperationError> {
    let p = config.threads;
    if p == 0 {
        return Err(CooperationError::NoComponents);
    }
    let coop = config
        .cooperation
        .clone()
        .unwrap_or_else(|| CooperationConfig::for_size(instance.customer_count()));
    coop.validate()?;
    let target = target.unwrap_or_else(|| instance.k_min()).max(1);
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(config.time_limit);
    let mut coop_rng: SolverRng = stream_rng(master, u64::MAX);

    let mut components: Vec<Component> = (0..p)
        .map(|i| Component {
            solution: initial.clone(),
            engine: RouteMinimizer::new(instance, neighbors, config.remove_route.clone(), stream_rng(master, i as u64)),
            call_time: 0.0,
            calls: 0,
            pool_size: 0,
        })
        .collect();
    let mut schedule = DeltaSchedule::new(&coop, instance.customer_count());
    let mut records = Vec::new();
    let mut phases = 0;
    let mut total_calls = 0;
    let mut stall = 0;
    let mut best_routes = initial.route_count();

    loop {
        let current_best = components.iter().map(|c| c.solution.route_count()).min().unwrap();
        if current_best <= target || Instant::now() >= deadline || stall >= config.stall_phases {
            break;
        }
        let delta = schedule.delta;
        if p == 1 {
            components[0].work(delta, target, deadline);
        } else {
            std::thread::scope(|scope| {
                for c in components.iter_mut() {
                    scope.spawn(move || c.work(delta, target, deadline));
                }
            });
        }

        phases += 1;
        let calls: u64 = components.iter().map(|c| c.calls).sum();
        total_calls += calls;
        let time: f64 = components.iter().map(|c| c.call_time).sum();
        let average = if calls > 0 { time / calls as f64 } else { 0.0 };

        let mut slots: Vec<Solution> = components.iter().map(|c| c.solution.clone()).collect();
        let pre_best = team_best(&slots).cost();
        match coop.scheme {
            Scheme::Chain => cooperate_chain(&mut slots),
            Scheme::Cyclic => cooperate_cyclic(&mut slots, coop.acceptance, &mut coop_rng),
        }
        debug_assert!(compare_cost(&team_best(&slots).cost(), &pre_best).is_le());
        for (c, s) in components.iter_mut().zip(slots) {
            c.solution = s;
        }

        let elapsed = started.elapsed().as_secs_f64();
        for (i, c) in components.iter().enumerate() {
            records.push(CooperationRecord {
                phase: phases,
                component: i,
                cost: c.solution.cost(),
                delta,
                pool_size: c.pool_size,
                elapsed,
            });
        }

        if pre_best.routes < best_routes {
            best_routes = pre_best.routes;
            stall = 0;
        } else {
            stall += 1;
        }
        schedule.next_delta(&coop, average);
    }

    let best = team_best(&components.iter().map(|c| c.solution.clone()).collect::<Vec<_>>()).clone();
    Ok(PhaOutcome {
        best,
        phases,
        calls: total_calls,
        records,
    })
}

/// Parallel memetic algorithm: the children of each pair are generated by one
/// of `threads` workers; pairs are handed out dynamically. Each pair draws
/// from its own random stream, so the result does not depend on `threads`.
pub fn run_pma(
    instance: &Instance,
    neighbors: &Neighborhood,
    mut population: Population,
    params: &MaParams,
    threads: usize,
    master: u64,
) -> Result<MaOutcome, MaError> {
    let threads = threads.max(1);
    if population.len() < 2 {
        return Ok(MaOutcome {
            best: population.best().clone(),
            generations: 0,
            history: Vec::new(),
        });
    }
    let started = Instant::now();
    let mut history = Vec::new();
    while !check_termination(&population, params, started.elapsed()) {
        let g = population.generation;
        let pairs = pair_parents(population.len(), &mut pairing_rng(master, g))?;
        let results: Vec<Option<Solution>> = if threads == 1 {
            pairs
                .iter()
                .enumerate()
                .map(|(i, &(pa, pb))| {
                    best_child(
                        &population.members[pa],
                        &population.members[pb],
                        instance,
                        neighbors,
                        params,
                        &mut pair_rng(master, g, i),
                    )
                })
                .collect()
        } else {
            let next = AtomicUsize::new(0);
            let out: Mutex<Vec<Option<Solution>>> = Mutex::new(vec![None; pairs.len()]);
            let members = &population.members;
            std::thread::scope(|scope| {
                for _ in 0..threads {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                        if i >= pairs.len() {
                            break;
                        }
                        let (pa, pb) = pairs[i];
                        let child = best_child(
                            &members[pa],
                            &members[pb],
                            instance,
                            neighbors,
                            params,
                            &mut pair_rng(master, g, i),
                        );
                        out.lock().unwrap()[i] = child;
                    });
                }
            });
            out.into_inner().unwrap()
        };
        for (&(pa, _), child) in pairs.iter().zip(results) {
            population.best_children[pa] = child;
        }

        let before = fitness(population.best());
        let old: Vec<u64> = population.members.iter().map(|m| m.distance().to_bits()).collect();
        if threads == 1 {
            form_next_population(&mut population);
        } else {
            parallel_replacement(&mut population, threads);
            population.generation += 1;
            if fitness(population.best()) > before {
                population.stagnation = 0;
            } else {
                population.stagnation += 1;
            }
        }
        history.push(GenerationRecord {
            generation: population.generation,
            best: population.best().cost(),
            stagnation: population.stagnation,
            replaced: population
                .members
                .iter()
                .zip(&old)
                .filter(|(m, &o)| m.distance().to_bits() != o)
                .count(),
            elapsed: started.elapsed().as_secs_f64(),
        });
    }
    Ok(MaOutcome {
        best: population.best().clone(),
        generations: population.generation,
        history,
    })
}

/// Slot-wise replacement over disjoint chunks of the population.
fn parallel_replacement(population: &mut Population, threads: usize) {
    let chunk = population.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (members, children) in population
            .members
            .chunks_mut(chunk)
            .zip(population.best_children.chunks_mut(chunk))
        {
            scope.spawn(move || {
                for (m, c) in members.iter_mut().zip(children.iter_mut()) {
                    if let Some(child) = c.take() {
                        if child.distance() < m.distance() {
                            *m = child;
                        }
                    }
                }
            });
        }
    });
}
