//! Distance minimization at a fixed route count: EAX-based memetic algorithm.

use std::collections::HashSet;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::eax::{self, Strategy};
use crate::instance::Instance;
use crate::moves::{self, Focus, Neighborhood, NeighborhoodScope, RepairBudget};
use crate::rng::{stream_rng, SolverRng};
use crate::solution::{Cost, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaParams {
    /// Children per parent pair.
    pub children: usize,
    /// Improving moves applied to each child.
    pub child_moves: usize,
    /// Moves applied when copying a solution into the initial population.
    pub copy_moves: usize,
    /// Generations without improvement before stopping.
    pub stagnation_limit: usize,
    /// Hard generation cap; `None` means ten times the stagnation limit.
    pub max_generations: Option<usize>,
    /// Seconds.
    pub time_limit: f64,
    /// Seconds spent collecting distinct initial solutions.
    pub init_time_limit: f64,
    pub population: usize,
    pub mu: f64,
    pub repair: RepairBudget,
}

impl Default for MaParams {
    fn default() -> Self {
        MaParams {
            children: 20,
            child_moves: 100,
            copy_moves: 50,
            stagnation_limit: 50,
            max_generations: None,
            time_limit: 300.0,
            init_time_limit: 30.0,
            population: 40,
            mu: 0.6,
            repair: RepairBudget::default(),
        }
    }
}

impl MaParams {
    pub fn max_generations(&self) -> usize {
        self.max_generations.unwrap_or(10 * self.stagnation_limit)
    }

    pub fn validate(&self) -> Result<(), MaError> {
        let checks = [
            ("children", self.children),
            ("child_moves", self.child_moves),
            ("stagnation_limit", self.stagnation_limit),
            ("max_generations", self.max_generations()),
            ("population", self.population),
        ];
        for (name, v) in checks {
            if v == 0 {
                return Err(MaError::Invalid(name));
            }
        }
        if !(self.time_limit > 0.0) {
            return Err(MaError::Invalid("time_limit"));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(MaError::Invalid("mu"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaError {
    #[error("parameter `{0}` is out of range")]
    Invalid(&'static str),
    #[error("no solution with the target route count was found")]
    NoSeed,
    #[error("reproduction needs at least two individuals")]
    PopulationTooSmall,
}

/// Higher is better.
pub fn fitness(solution: &Solution) -> f64 {
    -solution.distance()
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Solution>,
    pub best_children: Vec<Option<Solution>>,
    pub generation: usize,
    pub stagnation: usize,
}

impl Population {
    pub fn new(members: Vec<Solution>) -> Self {
        let n = members.len();
        Population {
            members,
            best_children: vec![None; n],
            generation: 0,
            stagnation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Solution {
        self.members
            .iter()
            .max_by(|a, b| fitness(a).total_cmp(&fitness(b)))
            .expect("non-empty population")
    }

    pub fn route_count(&self) -> usize {
        self.members[0].route_count()
    }
}

/// Fills a population of `size` solutions with `target` routes. `generate`
/// yields further solutions until it returns `None`; it is called at most
/// `3 * size` times and only while `budget` lasts. Remaining slots are copies
/// of the collected solutions, each perturbed by `copy_moves` random moves.
pub fn build_initial_population<F, R>(
    instance: &Instance,
    neighbors: &Neighborhood,
    seeds: Vec<Solution>,
    target: usize,
    size: usize,
    budget: Duration,
    params: &MaParams,
    mut generate: F,
    rng: &mut R,
) -> Result<Population, MaError>
where
    F: FnMut(Instant) -> Option<Solution>,
    R: Rng + ?Sized,
{
    let deadline = Instant::now() + budget;
    let mut members: Vec<Solution> = Vec::with_capacity(size);
    let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
    let mut admit = |s: Solution, members: &mut Vec<Solution>| {
        if s.route_count() == target && s.is_complete() && s.penalty() == 0.0 && seen.insert(s.canonical_routes()) {
            members.push(s);
        }
    };
    for s in seeds {
        if members.len() < size {
            admit(s, &mut members);
        }
    }
    if members.is_empty() {
        return Err(MaError::NoSeed);
    }
    let mut calls = 0;
    while members.len() < size && calls < 3 * size && Instant::now() < deadline {
        calls += 1;
        match generate(deadline) {
            Some(s) => admit(s, &mut members),
            None => break,
        }
    }
    let collected = members.len();
    let mut next = 0;
    while members.len() < size {
        let mut copy = members[next % collected].clone();
        moves::perturb(&mut copy, instance, neighbors, params.copy_moves, rng);
        members.push(copy);
        next += 1;
    }
    Ok(Population::new(members))
}

/// Random cyclic pairing: with permutation `r`, pair `i` is `(r(i), r(i+1 mod N))`.
pub fn pair_parents<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Vec<(usize, usize)>, MaError> {
    if size < 2 {
        return Err(MaError::PopulationTooSmall);
    }
    let mut order: Vec<usize> = (0..size).collect();
    order.shuffle(rng);
    Ok((0..size).map(|i| (order[i], order[(i + 1) % size])).collect())
}

/// Best of `children` crossover + repair + local search attempts, or `None`
/// if none produced a feasible child with the parents' route count.
pub fn best_child<R: Rng + ?Sized>(
    a: &Solution,
    b: &Solution,
    instance: &Instance,
    neighbors: &Neighborhood,
    params: &MaParams,
    rng: &mut R,
) -> Option<Solution> {
    let mut best: Option<Solution> = None;
    for _ in 0..params.children {
        let strategy = if rng.gen_bool(0.5) {
            Strategy::Single
        } else {
            Strategy::Block
        };
        let x = eax::eax_crossover(a, b, instance, strategy, rng);
        if x.noop {
            continue;
        }
        let mut child = x.child;
        if !eax::repair(&mut child, instance, neighbors, &params.repair, rng) {
            continue;
        }
        if child.route_count() != a.route_count() {
            continue;
        }
        let scope = NeighborhoodScope {
            neighbors,
            focus: Focus::Routes(eax::modified_routes(&child, a)),
        };
        moves::local_search(&mut child, instance, &scope, params.child_moves, rng);
        if best.as_ref().is_none_or(|b| fitness(&child) > fitness(b)) {
            best = Some(child);
        }
    }
    best
}

/// Replaces every member that has a strictly shorter best child, clears the
/// buffers and updates the stagnation counter.
pub fn form_next_population(population: &mut Population) {
    let before = fitness(population.best());
    for (member, child) in population.members.iter_mut().zip(population.best_children.iter_mut()) {
        if let Some(c) = child.take() {
            if c.distance() < member.distance() {
                *member = c;
            }
        }
    }
    population.generation += 1;
    if fitness(population.best()) > before {
        population.stagnation = 0;
    } else {
        population.stagnation += 1;
    }
}

pub fn check_termination(population: &Population, params: &MaParams, elapsed: Duration) -> bool {
    population.stagnation >= params.stagnation_limit
        || population.generation >= params.max_generations()
        || elapsed.as_secs_f64() >= params.time_limit
}

/// Random stream for pairing parents in a generation.
pub fn pairing_rng(master: u64, generation: usize) -> SolverRng {
    stream_rng(master, ((generation as u64) << 32) | 0xFFFF_FFFF)
}

/// Random stream for the children of one pair.
pub fn pair_rng(master: u64, generation: usize, pair: usize) -> SolverRng {
    stream_rng(master, ((generation as u64) << 32) | pair as u64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: Cost,
    pub stagnation: usize,
    pub replaced: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct MaOutcome {
    pub best: Solution,
    pub generations: usize,
    pub history: Vec<GenerationRecord>,
}

/// Sequential memetic algorithm.
pub fn run_ma(
    instance: &Instance,
    neighbors: &Neighborhood,
    mut population: Population,
    params: &MaParams,
    master: u64,
) -> Result<MaOutcome, MaError> {
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
        for (i, &(pa, pb)) in pairs.iter().enumerate() {
            let mut rng = pair_rng(master, g, i);
            population.best_children[pa] = best_child(
                &population.members[pa],
                &population.members[pb],
                instance,
                neighbors,
                params,
                &mut rng,
            );
        }
        let old: Vec<u64> = population.members.iter().map(|m| m.distance().to_bits()).collect();
        form_next_population(&mut population);
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
