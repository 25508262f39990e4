#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrptw_core::io::parse_instance;
use vrptw_core::{Instance, Node};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn load(rel: &str) -> Instance {
    let text = std::fs::read_to_string(fixture_dir().join(rel)).unwrap();
    parse_instance(&text).unwrap()
}

/// Random instance with `n` customers; about half the windows are tight.
/// Every customer can be served alone.
pub fn tiny_instance(seed: u64, n: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = 240.0;
    let service = 10.0;
    let depot = (50.0, 50.0);
    let mut nodes = vec![Node {
        id: 0,
        x: depot.0,
        y: depot.1,
        demand: 0,
        ready: 0.0,
        due: horizon,
        service: 0.0,
    }];
    for id in 1..=n {
        let x = rng.gen_range(0..=100) as f64;
        let y = rng.gen_range(0..=100) as f64;
        let d0 = ((x - depot.0).powi(2) + (y - depot.1).powi(2)).sqrt();
        let latest = horizon - service - d0;
        let (ready, due) = if rng.gen_bool(0.5) {
            (0.0, latest)
        } else {
            let width = rng.gen_range(10.0..40.0);
            let center = rng.gen_range(d0..=latest);
            ((center - width / 2.0).max(0.0).floor(), (center + width / 2.0).min(latest).floor().max(d0.ceil()))
        };
        nodes.push(Node {
            id,
            x,
            y,
            demand: rng.gen_range(1..=25),
            ready: ready.min(due),
            due,
            service,
        });
    }
    Instance::new(format!("tiny-{seed}"), n, 50, nodes).unwrap()
}

/// Independent route check: capacity, windows with waiting, depot return.
pub fn route_ok(inst: &Instance, route: &[usize]) -> bool {
    let nodes = inst.nodes();
    let load: u32 = route.iter().map(|&c| nodes[c].demand).sum();
    if load > inst.capacity {
        return false;
    }
    let mut t = nodes[0].ready;
    let mut at = 0;
    for &c in route {
        let n = &nodes[c];
        t += nodes[at].service + dist(&nodes[at], n);
        if t > n.due + 1e-9 {
            return false;
        }
        t = t.max(n.ready);
        at = c;
    }
    t + nodes[at].service + dist(&nodes[at], &nodes[0]) <= nodes[0].due + 1e-9
}

pub fn route_len(inst: &Instance, route: &[usize]) -> f64 {
    let nodes = inst.nodes();
    let mut prev = 0;
    let mut total = 0.0;
    for &c in route.iter().chain(std::iter::once(&0)) {
        total += dist(&nodes[prev], &nodes[c]);
        prev = c;
    }
    total
}

fn dist(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Every route feasible; with `complete`, each customer served exactly once.
pub fn naive_valid(inst: &Instance, routes: &[Vec<usize>], complete: bool) -> bool {
    let n = inst.customer_count();
    let mut seen = vec![0u32; n + 1];
    for r in routes {
        if r.is_empty() || !route_ok(inst, r) {
            return false;
        }
        for &c in r {
            if c == 0 || c > n {
                return false;
            }
            seen[c] += 1;
        }
    }
    seen[1..].iter().all(|&s| s <= 1) && (!complete || seen[1..].iter().all(|&s| s == 1))
}

/// Best (routes, distance) over every customer order cut into consecutive
/// routes.
pub fn permutation_oracle(inst: &Instance) -> (usize, f64) {
    let mut order: Vec<usize> = inst.customers().collect();
    let n = order.len();
    let mut best = (usize::MAX, f64::INFINITY);
    permute(&mut order, 0, &mut |perm| {
        for cuts in 0u32..(1 << (n - 1)) {
            let mut k = 0;
            let mut total = 0.0;
            let mut start = 0;
            let mut ok = true;
            for end in 1..=n {
                if end == n || cuts & (1 << (end - 1)) != 0 {
                    let r = &perm[start..end];
                    if !route_ok(inst, r) {
                        ok = false;
                        break;
                    }
                    k += 1;
                    total += route_len(inst, r);
                    start = end;
                }
            }
            if ok && (k < best.0 || (k == best.0 && total < best.1)) {
                best = (k, total);
            }
        }
    });
    best
}

fn permute(v: &mut Vec<usize>, i: usize, f: &mut impl FnMut(&[usize])) {
    if i == v.len() {
        f(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, f);
        v.swap(i, j);
    }
}
