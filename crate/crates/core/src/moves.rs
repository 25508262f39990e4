//! Neighborhood moves shared by both phases: relocate, exchange, 2-opt* and
//! or-opt. Every move is described as one or two [`Splice`]s of existing
//! routes, which gives O(1) distance deltas and cheap feasibility checks.
//!
//! No move in this module creates or deletes a route.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, EPS};
use crate::route::{Splice, SpliceEval};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Relocate,
    Exchange,
    TwoOptStar,
    OrOpt,
}

/// A fully evaluated move.
///
/// * `Relocate` / `OrOpt`: the `len` customers starting at position `p1` of
///   route `r1` go into gap `p2` of route `r2` (before the customer at `p2`).
/// * `Exchange`: customers at `(r1, p1)` and `(r2, p2)` swap places.
/// * `TwoOptStar`: `r1` keeps its first `p1` customers followed by the tail of
///   `r2` from position `p2`, and vice versa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub r1: usize,
    pub p1: usize,
    pub r2: usize,
    pub p2: usize,
    pub len: usize,
    pub delta_distance: f64,
    pub delta_penalty: f64,
    /// Solution version the move was evaluated against.
    pub version: u64,
}

/// How candidate moves are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Only moves keeping every touched route feasible; O(1) for inter-route moves.
    Feasible,
    /// All moves, scored by the change in the penalty function.
    Penalized,
}

/// Per-customer nearest-neighbor lists, sorted by ascending distance.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    lists: Vec<Vec<usize>>,
    size: usize,
}

impl Neighborhood {
    /// Keeps the `round(fraction * N)` nearest customers of every customer.
    pub fn new(instance: &Instance, fraction: f64) -> Self {
        let n = instance.customer_count();
        let size = ((fraction * n as f64).round() as usize).min(n.saturating_sub(1));
        let mut lists = vec![Vec::new(); n + 1];
        for c in instance.customers() {
            let mut others: Vec<usize> = instance.customers().filter(|&o| o != c).collect();
            others.sort_by(|&a, &b| {
                instance
                    .dist(c, a)
                    .total_cmp(&instance.dist(c, b))
                    .then(a.cmp(&b))
            });
            others.truncate(size);
            lists[c] = others;
        }
        Neighborhood { lists, size }
    }

    pub fn of(&self, customer: usize) -> &[usize] {
        &self.lists[customer]
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Which customers a search is allowed to move.
#[derive(Debug, Clone, PartialEq)]
pub enum Focus {
    All,
    Customers(Vec<usize>),
    Routes(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct NeighborhoodScope<'a> {
    pub neighbors: &'a Neighborhood,
    pub focus: Focus,
}

impl<'a> NeighborhoodScope<'a> {
    pub fn all(neighbors: &'a Neighborhood) -> Self {
        NeighborhoodScope {
            neighbors,
            focus: Focus::All,
        }
    }

    /// Served customers in focus.
    pub fn customers(&self, solution: &Solution) -> Vec<usize> {
        match &self.focus {
            Focus::All => solution
                .routes()
                .iter()
                .flat_map(|r| r.customers().iter().copied())
                .collect(),
            Focus::Customers(cs) => cs.iter().copied().filter(|&c| solution.is_served(c)).collect(),
            Focus::Routes(rs) => rs
                .iter()
                .filter(|&&r| r < solution.route_count())
                .flat_map(|&r| solution.route(r).customers().iter().copied())
                .collect(),
        }
    }
}

/// Number of move templates generated for one (customer, neighbor) pair.
pub const SLOTS: usize = 9;

/// Unevaluated move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Spec {
    kind: MoveKind,
    r1: usize,
    p1: usize,
    r2: usize,
    p2: usize,
    len: usize,
}

/// Move template `slot` for customer `u` and neighbor `w`, if it applies.
fn template(solution: &Solution, u: usize, w: usize, slot: usize) -> Option<Spec> {
    let (ru, i) = solution.position(u)?;
    let (rw, j) = solution.position(w)?;
    let spec = |kind, r1, p1, r2, p2, len| Spec { kind, r1, p1, r2, p2, len };
    match slot {
        0 => Some(spec(MoveKind::Relocate, ru, i, rw, j, 1)),
        1 => Some(spec(MoveKind::Relocate, ru, i, rw, j + 1, 1)),
        2 => Some(spec(MoveKind::Exchange, ru, i, rw, j, 1)),
        3 if ru != rw => Some(spec(MoveKind::TwoOptStar, ru, i + 1, rw, j, 0)),
        4 if ru != rw => Some(spec(MoveKind::TwoOptStar, ru, i, rw, j + 1, 0)),
        5 => Some(spec(MoveKind::OrOpt, ru, i, rw, j, 2)),
        6 => Some(spec(MoveKind::OrOpt, ru, i, rw, j + 1, 2)),
        7 => Some(spec(MoveKind::OrOpt, ru, i, rw, j, 3)),
        8 => Some(spec(MoveKind::OrOpt, ru, i, rw, j + 1, 3)),
        _ => None,
    }
}

type Parts<'a> = [Option<(usize, Splice<'a>)>; 2];

fn empty() -> [&'static [usize]; 3] {
    [&[], &[], &[]]
}

/// Splices describing the routes a move produces. `None` for invalid or no-op moves
/// and for moves that would leave a route empty.
fn plan<'a>(solution: &'a Solution, s: &Spec) -> Option<Parts<'a>> {
    let routes = solution.routes();
    if s.r1 >= routes.len() || s.r2 >= routes.len() {
        return None;
    }
    let a = &routes[s.r1];
    let b = &routes[s.r2];
    let ca = a.customers();
    let cb = b.customers();
    let parts: Parts<'a> = match s.kind {
        MoveKind::Relocate | MoveKind::OrOpt => {
            let (i, len, g) = (s.p1, s.len, s.p2);
            if len == 0 || i + len > ca.len() || g > cb.len() {
                return None;
            }
            let seg = &ca[i..i + len];
            if s.r1 != s.r2 {
                let first = Splice {
                    head: a,
                    head_end: i,
                    middle: empty(),
                    tail: a,
                    tail_start: i + len + 1,
                };
                let second = Splice {
                    head: b,
                    head_end: g,
                    middle: [seg, &[], &[]],
                    tail: b,
                    tail_start: g + 1,
                };
                [Some((s.r1, first)), Some((s.r2, second))]
            } else if g < i {
                let sp = Splice {
                    head: a,
                    head_end: g,
                    middle: [seg, &ca[g..i], &[]],
                    tail: a,
                    tail_start: i + len + 1,
                };
                [Some((s.r1, sp)), None]
            } else if g > i + len {
                let sp = Splice {
                    head: a,
                    head_end: i,
                    middle: [&ca[i + len..g], seg, &[]],
                    tail: a,
                    tail_start: g + 1,
                };
                [Some((s.r1, sp)), None]
            } else {
                return None;
            }
        }
        MoveKind::Exchange => {
            let (i, j) = (s.p1, s.p2);
            if i >= ca.len() || j >= cb.len() {
                return None;
            }
            if s.r1 != s.r2 {
                let first = Splice {
                    head: a,
                    head_end: i,
                    middle: [&cb[j..j + 1], &[], &[]],
                    tail: a,
                    tail_start: i + 2,
                };
                let second = Splice {
                    head: b,
                    head_end: j,
                    middle: [&ca[i..i + 1], &[], &[]],
                    tail: b,
                    tail_start: j + 2,
                };
                [Some((s.r1, first)), Some((s.r2, second))]
            } else {
                if i == j {
                    return None;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let sp = Splice {
                    head: a,
                    head_end: lo,
                    middle: [&ca[hi..hi + 1], &ca[lo + 1..hi], &ca[lo..lo + 1]],
                    tail: a,
                    tail_start: hi + 2,
                };
                [Some((s.r1, sp)), None]
            }
        }
        MoveKind::TwoOptStar => {
            let (cut_a, cut_b) = (s.p1, s.p2);
            if s.r1 == s.r2 || cut_a > ca.len() || cut_b > cb.len() {
                return None;
            }
            if (cut_a == ca.len() && cut_b == cb.len()) || (cut_a == 0 && cut_b == 0) {
                return None;
            }
            let first = Splice {
                head: a,
                head_end: cut_a,
                middle: empty(),
                tail: b,
                tail_start: cut_b + 1,
            };
            let second = Splice {
                head: b,
                head_end: cut_b,
                middle: empty(),
                tail: a,
                tail_start: cut_a + 1,
            };
            [Some((s.r1, first)), Some((s.r2, second))]
        }
    };
    if parts.iter().flatten().any(|(_, sp)| sp.customer_count() == 0) {
        return None;
    }
    Some(parts)
}

fn evaluate(solution: &Solution, instance: &Instance, s: &Spec, mode: Mode) -> Option<Move> {
    let parts = plan(solution, s)?;
    let mut new_distance = 0.0;
    let mut new_penalty = 0.0;
    let mut old_distance = 0.0;
    let mut old_penalty = 0.0;
    for (r, sp) in parts.iter().flatten() {
        let eval: SpliceEval = match mode {
            Mode::Feasible => sp.feasible(instance)?,
            Mode::Penalized => sp.penalized(instance),
        };
        new_distance += eval.distance;
        new_penalty += eval.penalty;
        old_distance += solution.route(*r).distance();
        old_penalty += solution.route(*r).penalty();
    }
    Some(Move {
        kind: s.kind,
        r1: s.r1,
        p1: s.p1,
        r2: s.r2,
        p2: s.p2,
        len: s.len,
        delta_distance: new_distance - old_distance,
        delta_penalty: new_penalty - old_penalty,
        version: solution.version(),
    })
}

/// Evaluates template `slot` for the pair `(u, w)`.
pub fn evaluate_slot(
    solution: &Solution,
    instance: &Instance,
    u: usize,
    w: usize,
    slot: usize,
    mode: Mode,
) -> Option<Move> {
    let spec = template(solution, u, w, slot)?;
    evaluate(solution, instance, &spec, mode)
}

/// Re-evaluates an arbitrary move description against the current solution.
pub fn evaluate_move(solution: &Solution, instance: &Instance, mv: &Move, mode: Mode) -> Option<Move> {
    let spec = Spec {
        kind: mv.kind,
        r1: mv.r1,
        p1: mv.p1,
        r2: mv.r2,
        p2: mv.p2,
        len: mv.len,
    };
    evaluate(solution, instance, &spec, mode)
}

/// All moves touching the scope. With `allow_infeasible`, every structurally
/// valid move is returned with its penalty delta; otherwise only feasible ones.
pub fn enumerate_moves(
    solution: &Solution,
    instance: &Instance,
    scope: &NeighborhoodScope<'_>,
    allow_infeasible: bool,
) -> Vec<Move> {
    let mode = if allow_infeasible {
        Mode::Penalized
    } else {
        Mode::Feasible
    };
    let mut out = Vec::new();
    for u in scope.customers(solution) {
        for &w in scope.neighbors.of(u) {
            for slot in 0..SLOTS {
                if let Some(mv) = evaluate_slot(solution, instance, u, w, slot, mode) {
                    out.push(mv);
                }
            }
        }
    }
    out
}

/// Route contents before a move, enough to revert it.
#[derive(Debug, Clone)]
pub struct Undo {
    routes: Vec<(usize, Vec<usize>)>,
}

impl Undo {
    pub fn revert(self, solution: &mut Solution, instance: &Instance) {
        solution.set_routes(instance, self.routes);
    }
}

/// Applies a move generated for the current solution version.
///
/// Panics if the solution changed since the move was evaluated.
pub fn apply_move(solution: &mut Solution, instance: &Instance, mv: &Move) -> Undo {
    assert_eq!(
        mv.version,
        solution.version(),
        "move evaluated against a different solution version"
    );
    let spec = Spec {
        kind: mv.kind,
        r1: mv.r1,
        p1: mv.p1,
        r2: mv.r2,
        p2: mv.p2,
        len: mv.len,
    };
    let parts = plan(solution, &spec).expect("move no longer applies");
    let mut updates = Vec::with_capacity(2);
    let mut undo = Vec::with_capacity(2);
    for (r, sp) in parts.iter().flatten() {
        updates.push((*r, sp.customers()));
        undo.push((*r, solution.route(*r).customers().to_vec()));
    }
    solution.set_routes(instance, updates);
    Undo { routes: undo }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbOutcome {
    pub applied: usize,
    pub shortfall: usize,
}

/// Applies `n_moves` random feasible moves. Candidates are drawn uniformly over
/// (customer, neighbor, template) triples and rejected until a feasible one
/// comes up, so the accepted move is uniform among feasible candidates.
pub fn perturb<R: Rng + ?Sized>(
    solution: &mut Solution,
    instance: &Instance,
    neighbors: &Neighborhood,
    n_moves: usize,
    rng: &mut R,
) -> PerturbOutcome {
    let mut applied = 0;
    if n_moves == 0 || neighbors.size() == 0 {
        return PerturbOutcome {
            applied,
            shortfall: n_moves,
        };
    }
    let mut attempts = 0;
    let max_attempts = 200 * n_moves + 1000;
    let mut served: Vec<usize> = NeighborhoodScope::all(neighbors).customers(solution);
    while applied < n_moves && attempts < max_attempts && !served.is_empty() {
        attempts += 1;
        let u = served[rng.gen_range(0..served.len())];
        let list = neighbors.of(u);
        let w = list[rng.gen_range(0..list.len())];
        let slot = rng.gen_range(0..SLOTS);
        if let Some(mv) = evaluate_slot(solution, instance, u, w, slot, Mode::Feasible) {
            apply_move(solution, instance, &mv);
            applied += 1;
            if !solution.is_complete() {
                served = NeighborhoodScope::all(neighbors).customers(solution);
            }
        }
    }
    PerturbOutcome {
        applied,
        shortfall: n_moves - applied,
    }
}

/// First-improvement descent on distance over feasible moves of the scope,
/// visiting scope customers in random order each pass. Returns the number of
/// moves applied.
pub fn local_search<R: Rng + ?Sized>(
    solution: &mut Solution,
    instance: &Instance,
    scope: &NeighborhoodScope<'_>,
    max_moves: usize,
    rng: &mut R,
) -> usize {
    let mut focus = scope.customers(solution);
    let mut applied = 0;
    while applied < max_moves {
        focus.shuffle(rng);
        let mut improved = false;
        'customers: for &u in &focus {
            for &w in scope.neighbors.of(u) {
                for slot in 0..SLOTS {
                    let Some(mv) = evaluate_slot(solution, instance, u, w, slot, Mode::Feasible) else {
                        continue;
                    };
                    if mv.delta_distance < -EPS {
                        apply_move(solution, instance, &mv);
                        applied += 1;
                        improved = true;
                        if applied >= max_moves {
                            break 'customers;
                        }
                        continue 'customers;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    applied
}

/// Budget for penalty-descent repair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairBudget {
    /// Accepted moves before giving up.
    pub max_moves: usize,
    /// Improving long or-opt candidates to collect before choosing one.
    pub linear_candidates: usize,
}

impl Default for RepairBudget {
    fn default() -> Self {
        RepairBudget {
            max_moves: 1000,
            linear_candidates: 20,
        }
    }
}

fn better(a: &Move, b: &Move) -> bool {
    a.delta_penalty < b.delta_penalty - EPS
        || ((a.delta_penalty - b.delta_penalty).abs() <= EPS && a.delta_distance < b.delta_distance)
}

/// Greedy descent on the penalty function. Each step applies the move with the
/// largest penalty decrease among moves of customers on violated routes; when
/// none decreases it, long or-opt segments are tried. Returns `true` once the
/// penalty reaches zero. Every accepted move strictly lowers the penalty.
pub fn restore_feasibility<R: Rng + ?Sized>(
    solution: &mut Solution,
    instance: &Instance,
    neighbors: &Neighborhood,
    budget: &RepairBudget,
    rng: &mut R,
) -> bool {
    let mut accepted = 0;
    loop {
        if solution.penalty() == 0.0 {
            return true;
        }
        if accepted >= budget.max_moves {
            return false;
        }
        let mut focus: Vec<usize> = solution
            .routes()
            .iter()
            .filter(|r| !r.is_feasible())
            .flat_map(|r| r.customers().iter().copied())
            .collect();
        focus.shuffle(rng);

        let mut best: Option<Move> = None;
        for &u in &focus {
            for &w in neighbors.of(u) {
                for slot in 0..SLOTS {
                    if let Some(mv) = evaluate_slot(solution, instance, u, w, slot, Mode::Penalized) {
                        if mv.delta_penalty < -EPS && best.as_ref().is_none_or(|b| better(&mv, b)) {
                            best = Some(mv);
                        }
                    }
                }
            }
        }

        if best.is_none() {
            best = long_segment_move(solution, instance, neighbors, &focus, budget.linear_candidates);
        }

        match best {
            Some(mv) => {
                apply_move(solution, instance, &mv);
                accepted += 1;
            }
            None => return false,
        }
    }
}

/// Or-opt with unbounded segment length, stopping after `cap` improving candidates.
fn long_segment_move(
    solution: &Solution,
    instance: &Instance,
    neighbors: &Neighborhood,
    focus: &[usize],
    cap: usize,
) -> Option<Move> {
    let mut best: Option<Move> = None;
    let mut found = 0;
    for &u in focus {
        let Some((ru, i)) = solution.position(u) else {
            continue;
        };
        let route_len = solution.route(ru).len();
        for len in 4..=route_len.saturating_sub(i) {
            for &w in neighbors.of(u) {
                let Some((rw, j)) = solution.position(w) else {
                    continue;
                };
                for gap in [j, j + 1] {
                    let spec = Spec {
                        kind: MoveKind::OrOpt,
                        r1: ru,
                        p1: i,
                        r2: rw,
                        p2: gap,
                        len,
                    };
                    if let Some(mv) = evaluate(solution, instance, &spec, Mode::Penalized) {
                        if mv.delta_penalty < -EPS {
                            found += 1;
                            if best.as_ref().is_none_or(|b| better(&mv, b)) {
                                best = Some(mv);
                            }
                            if found >= cap {
                                return best;
                            }
                        }
                    }
                }
            }
        }
    }
    best
}
