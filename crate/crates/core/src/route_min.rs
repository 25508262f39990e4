//! Route minimization: the ejection-pool heuristic that deletes one route at a
//! time by reinserting its customers into the rest of the solution.

use std::collections::VecDeque;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::instance::{Instance, EPS};
use crate::moves::{self, Neighborhood, RepairBudget};
use crate::route::{Route, Splice};
use crate::rng::SolverRng;
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoveRouteParams {
    pub k_max: usize,
    pub l_max: u64,
    pub xi: usize,
    pub i_max: u64,
    /// Steady-state cap; `None` means `i_max / 5`.
    pub psi: Option<u64>,
    pub perturb_min: usize,
    pub perturb_max: usize,
    pub perturb_factor: usize,
    pub perturb_interval: u64,
    /// Reinsertion time limit per call, seconds.
    pub tau_r: f64,
    pub mu: f64,
    pub gating_threshold: f64,
    /// Insertion attempts in the success-ratio window.
    pub success_window: usize,
    /// Failed calls after which perturbation is never skipped.
    pub gating_fallback: usize,
    /// Routes above `K_min` at which the small-route class is targeted.
    pub far_margin: usize,
    pub repair: RepairBudget,
}

impl Default for RemoveRouteParams {
    fn default() -> Self {
        RemoveRouteParams {
            k_max: 3,
            l_max: 5,
            xi: 7,
            i_max: 1000,
            psi: None,
            perturb_min: 80,
            perturb_max: 400,
            perturb_factor: 2,
            perturb_interval: 50,
            tau_r: 50.0,
            mu: 0.6,
            gating_threshold: 0.8,
            success_window: 100,
            gating_fallback: 3,
            far_margin: 2,
            repair: RepairBudget::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameter `{0}` must be positive")]
    NotPositive(&'static str),
    #[error("psi ({psi}) exceeds i_max ({i_max})")]
    PsiAboveIMax { psi: u64, i_max: u64 },
    #[error("perturbation range {min}..{max} is empty")]
    PerturbRange { min: usize, max: usize },
    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

impl RemoveRouteParams {
    pub fn psi(&self) -> u64 {
        self.psi.unwrap_or(self.i_max / 5)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("k_max", self.k_max as u64),
            ("l_max", self.l_max),
            ("xi", self.xi as u64),
            ("i_max", self.i_max),
            ("psi", self.psi()),
            ("perturb_min", self.perturb_min as u64),
            ("perturb_factor", self.perturb_factor as u64),
            ("perturb_interval", self.perturb_interval),
            ("success_window", self.success_window as u64),
            ("gating_fallback", self.gating_fallback as u64),
            ("repair.max_moves", self.repair.max_moves as u64),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ParamError::NotPositive(name));
            }
        }
        if self.psi() > self.i_max {
            return Err(ParamError::PsiAboveIMax {
                psi: self.psi(),
                i_max: self.i_max,
            });
        }
        if self.perturb_max < self.perturb_min {
            return Err(ParamError::PerturbRange {
                min: self.perturb_min,
                max: self.perturb_max,
            });
        }
        if !(self.tau_r > 0.0) {
            return Err(ParamError::NotPositive("tau_r"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(ParamError::OutOfRange {
                name: "mu",
                value: self.mu,
                range: "(0, 1]",
            });
        }
        if !(self.gating_threshold > 0.0 && self.gating_threshold <= 1.0) {
            return Err(ParamError::OutOfRange {
                name: "gating_threshold",
                value: self.gating_threshold,
                range: "(0, 1]",
            });
        }
        Ok(())
    }
}

/// Unserved customers (LIFO) plus the per-customer bookkeeping.
#[derive(Debug, Clone)]
pub struct EjectionPool {
    stack: Vec<usize>,
    penalty: Vec<u32>,
    inserted_at: Vec<Option<u64>>,
}

impl EjectionPool {
    pub fn new(customers: usize) -> Self {
        EjectionPool {
            stack: Vec::new(),
            penalty: vec![1; customers + 1],
            inserted_at: vec![None; customers + 1],
        }
    }

    pub fn push(&mut self, customer: usize) {
        self.stack.push(customer);
    }

    pub fn pop(&mut self) -> Option<usize> {
        self.stack.pop()
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn contents(&self) -> &[usize] {
        &self.stack
    }

    pub fn penalty(&self, customer: usize) -> u32 {
        self.penalty[customer]
    }

    pub fn bump(&mut self, customer: usize) {
        self.penalty[customer] += 1;
    }

    pub fn mark_inserted(&mut self, customer: usize, iteration: u64) {
        self.inserted_at[customer] = Some(iteration);
    }

    /// Whether `customer` was inserted within the last `l_max` iterations.
    pub fn is_protected(&self, customer: usize, iteration: u64, l_max: u64) -> bool {
        self.inserted_at[customer].is_some_and(|at| iteration.saturating_sub(at) <= l_max)
    }
}

#[derive(Debug, Clone)]
pub struct RemoveRouteState {
    pub iteration: u64,
    pub steady: u64,
    /// Smallest pool size seen so far.
    last_pool: usize,
    /// Pool size above which the call is abandoned.
    pub pool_limit: usize,
    window: VecDeque<bool>,
    pub perturb_moves: usize,
    pub started: Instant,
    pub deadline: Instant,
}

impl RemoveRouteState {
    pub fn new(params: &RemoveRouteParams, customers: usize, initial_pool: usize, deadline: Option<Instant>) -> Self {
        let started = Instant::now();
        let own = started + Duration::from_secs_f64(params.tau_r);
        let limit = params.xi.max(customers.div_ceil(10)).max(initial_pool);
        RemoveRouteState {
            iteration: 0,
            steady: 0,
            last_pool: initial_pool,
            pool_limit: limit,
            window: VecDeque::with_capacity(params.success_window),
            perturb_moves: params.perturb_min,
            started,
            deadline: deadline.map_or(own, |d| d.min(own)),
        }
    }

    /// Records whether an insertion attempt succeeded without ejections.
    pub fn record_insertion(&mut self, direct: bool, params: &RemoveRouteParams) {
        if self.window.len() == params.success_window {
            self.window.pop_front();
        }
        self.window.push_back(direct);
    }

    /// Share of direct insertions once the window is full.
    pub fn success_ratio(&self, params: &RemoveRouteParams) -> Option<f64> {
        (self.window.len() == params.success_window)
            .then(|| self.window.iter().filter(|&&d| d).count() as f64 / self.window.len() as f64)
    }

    /// Steady state counts iterations since the pool last reached a new
    /// minimum size.
    fn observe_pool(&mut self, size: usize) {
        if size < self.last_pool {
            self.steady = 0;
            self.last_pool = size;
        } else {
            self.steady += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Time,
    PoolTooLarge,
    IterationLimit,
    SteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Success,
    Failure(StopReason),
}

pub fn check_stop(state: &RemoveRouteState, pool: &EjectionPool, params: &RemoveRouteParams) -> StopDecision {
    check_stop_at(state, pool, params, Instant::now())
}

pub fn check_stop_at(
    state: &RemoveRouteState,
    pool: &EjectionPool,
    params: &RemoveRouteParams,
    now: Instant,
) -> StopDecision {
    if pool.is_empty() {
        StopDecision::Success
    } else if now >= state.deadline {
        StopDecision::Failure(StopReason::Time)
    } else if pool.len() > state.pool_limit {
        StopDecision::Failure(StopReason::PoolTooLarge)
    } else if state.iteration > params.i_max && pool.len() > params.xi {
        StopDecision::Failure(StopReason::IterationLimit)
    } else if state.steady >= params.psi() {
        StopDecision::Failure(StopReason::SteadyState)
    } else {
        StopDecision::Continue
    }
}

/// Advances the perturbation move count: multiplied by the update factor every
/// `perturb_interval` iterations, capped at `perturb_max`.
pub fn update_perturb_budget(state: &mut RemoveRouteState, params: &RemoveRouteParams) -> usize {
    if state.iteration > 0 && state.iteration % params.perturb_interval == 0 {
        state.perturb_moves = (state.perturb_moves * params.perturb_factor).min(params.perturb_max);
    }
    state.perturb_moves
}

/// Picks the route to delete. Routes with at least the average customer count
/// form the first class, the rest the second; `far_from_optimum` selects the
/// second class.
pub fn select_route_for_removal<R: Rng + ?Sized>(solution: &Solution, rng: &mut R, far_from_optimum: bool) -> usize {
    let k = solution.route_count();
    assert!(k >= 1, "no route to remove");
    let avg = solution.served_count() as f64 / k as f64;
    let class: Vec<usize> = (0..k)
        .filter(|&r| {
            let len = solution.route(r).len() as f64;
            if far_from_optimum {
                len < avg
            } else {
                len >= avg
            }
        })
        .collect();
    if class.is_empty() {
        rng.gen_range(0..k)
    } else {
        class[rng.gen_range(0..class.len())]
    }
}

/// Inserts `customer` where the penalty function grows least, then runs
/// penalty descent. On failure the solution is restored and `false` returned.
pub fn squeeze<R: Rng + ?Sized>(
    solution: &mut Solution,
    instance: &Instance,
    customer: usize,
    neighbors: &Neighborhood,
    budget: &RepairBudget,
    rng: &mut R,
) -> bool {
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for (r, route) in solution.routes().iter().enumerate() {
        for gap in 0..=route.len() {
            let eval = Splice {
                head: route,
                head_end: gap,
                middle: [std::slice::from_ref(&customer), &[], &[]],
                tail: route,
                tail_start: gap + 1,
            }
            .penalized(instance);
            let key = (eval.penalty - route.penalty(), eval.distance - route.distance());
            let better = match best {
                None => true,
                Some((p, d, _, _)) => key.0 < p - EPS || ((key.0 - p).abs() <= EPS && key.1 < d),
            };
            if better {
                best = Some((key.0, key.1, r, gap));
            }
        }
    }
    let Some((_, _, r, gap)) = best else {
        return false;
    };
    let backup = solution.clone();
    solution.insert(instance, r, gap, customer);
    if moves::restore_feasibility(solution, instance, neighbors, budget, rng) {
        true
    } else {
        *solution = backup;
        false
    }
}

/// Reinsertion of a customer paid for by ejecting `ejected` from `route`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ejection {
    pub route: usize,
    /// Original position of the customer the new one goes in front of
    /// (`len` appends it).
    pub insert_before: usize,
    pub ejected: Vec<usize>,
    pub p_sum: u32,
}

impl Ejection {
    pub fn new_sequence(&self, route: &Route, customer: usize) -> Vec<usize> {
        let mut seq = Vec::with_capacity(route.len() + 1 - self.ejected.len());
        for (j, &c) in route.customers().iter().enumerate() {
            if j == self.insert_before {
                seq.push(customer);
            }
            if !self.ejected.contains(&c) {
                seq.push(c);
            }
        }
        if self.insert_before == route.len() {
            seq.push(customer);
        }
        seq
    }
}

struct EjectionSearch<'a, R: Rng + ?Sized> {
    instance: &'a Instance,
    route: &'a Route,
    route_index: usize,
    customer: usize,
    k: usize,
    penalties: Vec<u32>,
    eligible: Vec<bool>,
    chosen: Vec<usize>,
    best: Option<Ejection>,
    ties: u32,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> EjectionSearch<'_, R> {
    fn bound(&self) -> u32 {
        self.best.as_ref().map_or(u32::MAX, |b| b.p_sum)
    }

    fn record(&mut self, insert_before: usize, p_sum: u32) {
        let candidate = || Ejection {
            route: self.route_index,
            insert_before,
            ejected: self.chosen.iter().map(|&j| self.route.customers()[j]).collect(),
            p_sum,
        };
        if p_sum < self.bound() {
            self.best = Some(candidate());
            self.ties = 1;
        } else if p_sum == self.bound() {
            self.ties += 1;
            if self.rng.gen_range(0..self.ties) == 0 {
                self.best = Some(candidate());
            }
        }
    }

    /// Walks the route deciding, position by position, whether to place the new
    /// customer, keep the current one or eject it.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &mut self,
        j: usize,
        last: usize,
        t: f64,
        load: u32,
        inserted: Option<usize>,
        prev_kept: bool,
        p_sum: u32,
    ) {
        if p_sum > self.bound() {
            return;
        }
        let inst = self.instance;
        let n = self.route.len();
        let need = self.k - self.chosen.len();
        if need > n - j {
            return;
        }
        let pending = if inserted.is_some() {
            0
        } else {
            inst.node(self.customer).demand
        };

        if let Some(at) = inserted {
            if need == 0 {
                let x = self.route.node_at(j + 1);
                let arrival = t + inst.node(last).service + inst.dist(last, x);
                let start = arrival.max(inst.node(x).ready);
                let rest = self.route.load() - self.route.load_through(j);
                if start <= self.route.latest_at(j + 1) + EPS && load + rest <= inst.capacity {
                    self.record(at, p_sum);
                }
                return;
            }
        } else if j == 0 || prev_kept {
            let v = self.customer;
            let node = inst.node(v);
            let tv = (t + inst.node(last).service + inst.dist(last, v)).max(node.ready);
            if tv <= node.due + EPS && load + node.demand <= inst.capacity {
                self.dfs(j, v, tv, load + node.demand, Some(j), true, p_sum);
            }
        }
        if j == n {
            return;
        }

        let c = self.route.customers()[j];
        let node = inst.node(c);
        let tc = (t + inst.node(last).service + inst.dist(last, c)).max(node.ready);
        if tc <= node.due + EPS && load + node.demand + pending <= inst.capacity {
            self.dfs(j + 1, c, tc, load + node.demand, inserted, true, p_sum);
        }
        if need > 0 && self.eligible[j] {
            self.chosen.push(j);
            let p = self.penalties[j];
            self.dfs(j + 1, last, t, load, inserted, false, p_sum + p);
            self.chosen.pop();
        }
    }
}

/// Cheapest ejection (by summed penalty counters) that makes room for
/// `customer`, trying one, then two, up to `k_max` ejected customers. Ties
/// are broken uniformly at random.
pub fn find_best_ejection<R: Rng + ?Sized>(
    solution: &Solution,
    instance: &Instance,
    customer: usize,
    pool: &EjectionPool,
    iteration: u64,
    params: &RemoveRouteParams,
    rng: &mut R,
) -> Option<Ejection> {
    for k in 1..=params.k_max {
        let mut best: Option<Ejection> = None;
        let mut ties = 0u32;
        for (r, route) in solution.routes().iter().enumerate() {
            if route.len() < k {
                continue;
            }
            let mut search = EjectionSearch {
                instance,
                route,
                route_index: r,
                customer,
                k,
                penalties: route.customers().iter().map(|&c| pool.penalty(c)).collect(),
                eligible: route
                    .customers()
                    .iter()
                    .map(|&c| !pool.is_protected(c, iteration, params.l_max))
                    .collect(),
                chosen: Vec::with_capacity(k),
                best: best.clone(),
                ties,
                rng: &mut *rng,
            };
            let depot = instance.depot();
            search.dfs(0, 0, depot.ready, 0, None, true, 0);
            best = search.best;
            ties = search.ties;
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// Result of one route-removal attempt.
#[derive(Debug, Clone)]
pub struct RemoveRouteOutcome {
    pub solution: Solution,
    pub succeeded: bool,
    pub iterations: u64,
    pub pool_size: usize,
    pub stop: StopDecision,
}

/// Sequential route-minimization engine for one component.
pub struct RouteMinimizer<'a> {
    instance: &'a Instance,
    neighbors: &'a Neighborhood,
    params: RemoveRouteParams,
    rng: SolverRng,
    failed_calls: usize,
}

impl<'a> RouteMinimizer<'a> {
    pub fn new(instance: &'a Instance, neighbors: &'a Neighborhood, params: RemoveRouteParams, rng: SolverRng) -> Self {
        RouteMinimizer {
            instance,
            neighbors,
            params,
            rng,
            failed_calls: 0,
        }
    }

    pub fn params(&self) -> &RemoveRouteParams {
        &self.params
    }

    pub fn rng(&mut self) -> &mut SolverRng {
        &mut self.rng
    }

    /// Tries to delete one route of a complete feasible solution. On failure
    /// the input is returned unchanged.
    pub fn remove_route(&mut self, input: &Solution, deadline: Option<Instant>) -> RemoveRouteOutcome {
        let inst = self.instance;
        let params = &self.params;
        let fail = |stop, iterations, pool_size| RemoveRouteOutcome {
            solution: input.clone(),
            succeeded: false,
            iterations,
            pool_size,
            stop,
        };
        if input.route_count() <= 1 {
            return fail(StopDecision::Failure(StopReason::PoolTooLarge), 0, 0);
        }

        let mut sol = input.clone();
        let far = sol.route_count() > inst.k_min() + params.far_margin;
        let r = select_route_for_removal(&sol, &mut self.rng, far);
        let mut removed = sol.remove_route(r);
        removed.shuffle(&mut self.rng);

        let mut pool = EjectionPool::new(inst.customer_count());
        for &c in &removed {
            pool.push(c);
        }
        let mut state = RemoveRouteState::new(params, inst.customer_count(), pool.len(), deadline);
        let gating_allowed = self.failed_calls < params.gating_fallback;

        loop {
            match check_stop(&state, &pool, params) {
                StopDecision::Continue => {}
                StopDecision::Success => {
                    debug_assert!(crate::feasibility::is_feasible(&sol, inst).is_feasible());
                    self.failed_calls = 0;
                    return RemoveRouteOutcome {
                        solution: sol,
                        succeeded: true,
                        iterations: state.iteration,
                        pool_size: 0,
                        stop: StopDecision::Success,
                    };
                }
                stop => {
                    self.failed_calls += 1;
                    return fail(stop, state.iteration, pool.len());
                }
            }

            state.iteration += 1;
            let it = state.iteration;
            let v = pool.pop().expect("pool not empty");

            let positions: Vec<(usize, usize)> = sol
                .routes()
                .iter()
                .enumerate()
                .flat_map(|(r, route)| {
                    (0..=route.len())
                        .filter(move |&gap| route.check_insertion(inst, gap, v).feasible)
                        .map(move |gap| (r, gap))
                })
                .collect();

            if let Some(&(r, gap)) = positions.choose(&mut self.rng) {
                sol.insert(inst, r, gap, v);
                pool.mark_inserted(v, it);
                state.record_insertion(true, params);
            } else if squeeze(&mut sol, inst, v, self.neighbors, &params.repair, &mut self.rng) {
                pool.mark_inserted(v, it);
                state.record_insertion(true, params);
            } else {
                pool.bump(v);
                state.record_insertion(false, params);
                match find_best_ejection(&sol, inst, v, &pool, it, params, &mut self.rng) {
                    Some(ej) => {
                        let seq = ej.new_sequence(sol.route(ej.route), v);
                        sol.set_route(inst, ej.route, seq);
                        pool.mark_inserted(v, it);
                        for &c in &ej.ejected {
                            pool.push(c);
                        }
                        let skip = gating_allowed
                            && state
                                .success_ratio(params)
                                .is_some_and(|ratio| ratio >= params.gating_threshold);
                        if !skip {
                            moves::perturb(&mut sol, inst, self.neighbors, state.perturb_moves, &mut self.rng);
                        }
                    }
                    None => pool.push(v),
                }
            }

            debug_assert_eq!(sol.served_count() + pool.len(), inst.customer_count());
            state.observe_pool(pool.len());
            update_perturb_budget(&mut state, params);
        }
    }
}
